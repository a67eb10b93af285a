"""Image generation: parameter validation, content-addressed storage, run ledger."""

from __future__ import annotations

import hashlib
import io
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .ledger import LedgerWriter
from .prompts import ImagePrompt


class GenerationError(Exception):
    pass


@dataclass(frozen=True)
class GenParams:
    width: int = 1024
    height: int = 768
    steps: int = 30
    guidance: float = 7.5
    seed: int = 0

    def __post_init__(self):
        for label, value in (("width", self.width), ("height", self.height)):
            if not (64 <= value <= 4096):
                raise GenerationError(f"{label} must be in [64, 4096], got {value}")
            if value % 8 != 0:
                raise GenerationError(f"{label} must be a multiple of 8, got {value}")
        if not (1 <= self.steps <= 200):
            raise GenerationError(f"steps must be in [1, 200], got {self.steps}")
        if not (-(2 ** 63) <= self.seed < 2 ** 63):
            raise GenerationError(f"seed must fit in 64 bits, got {self.seed}")

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "steps": self.steps,
                "guidance": self.guidance, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "GenParams":
        return cls(width=int(data["width"]), height=int(data["height"]),
                   steps=int(data["steps"]), guidance=float(data["guidance"]),
                   seed=int(data["seed"]))


class ImageStore:
    """Content-addressed PNG store: `<root>/<first two hex>/<sha256>.png`.

    Writes go to a temp file then an atomic rename, so concurrent writers and
    re-stores of the same bytes are safe and idempotent.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, image_hash: str) -> Path:
        return self.root / image_hash[:2] / f"{image_hash}.png"

    def store(self, image_bytes: bytes) -> str:
        from PIL import Image, UnidentifiedImageError

        try:
            with Image.open(io.BytesIO(image_bytes)) as img:
                fmt = img.format
            if fmt != "PNG":
                raise GenerationError(f"expected PNG bytes, backend returned {fmt}")
        except UnidentifiedImageError:
            raise GenerationError("backend reply does not decode as an image")

        image_hash = hashlib.sha256(image_bytes).hexdigest()
        target = self.path_for(image_hash)
        if target.exists():
            return image_hash
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(image_bytes)
            os.replace(tmp_path, target)
        except BaseException:
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)
            raise
        return image_hash

    def read(self, image_hash: str) -> bytes:
        try:
            return self.path_for(image_hash).read_bytes()
        except FileNotFoundError:
            raise GenerationError(f"no stored image for hash {image_hash!r}") from None

    def has(self, image_hash: str) -> bool:
        return self.path_for(image_hash).exists()


@dataclass(frozen=True)
class GenerationRecord:
    record_id: str
    product_id: str
    strategy: str
    prompt_text: str
    params: GenParams
    image_hash: str
    created_at: str
    backend_id: str

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "product_id": self.product_id,
            "strategy": self.strategy,
            "prompt_text": self.prompt_text,
            "params": self.params.to_dict(),
            "image_hash": self.image_hash,
            "created_at": self.created_at,
            "backend_id": self.backend_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationRecord":
        return cls(
            record_id=data["record_id"],
            product_id=data["product_id"],
            strategy=data["strategy"],
            prompt_text=data["prompt_text"],
            params=GenParams.from_dict(data["params"]),
            image_hash=data["image_hash"],
            created_at=data["created_at"],
            backend_id=data["backend_id"],
        )


def _record_id(product_id: str, strategy: str, prompt_text: str, params: GenParams,
               image_hash: str, backend_id: str) -> str:
    # Content-derived id: replaying the same generation yields the same id,
    # which makes ledgers comparable across runs (timestamps aside).
    payload = json.dumps(
        [product_id, strategy, prompt_text, params.to_dict(), image_hash, backend_id],
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def generate_image(prompt: ImagePrompt, params: GenParams, client, store: ImageStore,
                   ledger: LedgerWriter | None = None) -> GenerationRecord:
    """Generate one image, persist it, and return its ledger record."""
    image_bytes = client.generate(prompt.text, params)
    image_hash = store.store(image_bytes)
    backend_id = getattr(client, "backend_id", client.__class__.__name__)
    record = GenerationRecord(
        record_id=_record_id(prompt.product_id, prompt.strategy.value, prompt.text,
                             params, image_hash, backend_id),
        product_id=prompt.product_id,
        strategy=prompt.strategy.value,
        prompt_text=prompt.text,
        params=params,
        image_hash=image_hash,
        created_at=_utc_now(),
        backend_id=backend_id,
    )
    if ledger is not None:
        ledger.append(record.to_dict())
    return record


def generate_batch(prompts: list[ImagePrompt], params: GenParams, client,
                   store: ImageStore, ledger: LedgerWriter | None = None,
                   max_inflight: int = 4) -> tuple[list[GenerationRecord], list[dict]]:
    """Generate a batch with bounded concurrency.

    Backend calls run in a pool of `max_inflight` workers; ledger lines are
    appended in input order afterwards so replays are comparable line-by-line.
    Per-item failures never abort the batch; they come back as dicts with the
    failed product, strategy, and reason.
    """
    if max_inflight < 1:
        raise GenerationError(f"max_inflight must be >= 1, got {max_inflight}")
    seen = set()
    for p in prompts:
        key = (p.product_id, p.strategy)
        if key in seen:
            raise GenerationError(f"duplicate (product, strategy) in batch: {key}")
        seen.add(key)

    def _one(prompt: ImagePrompt):
        try:
            return generate_image(prompt, params, client, store, ledger=None), None
        except Exception as exc:
            return None, {"product_id": prompt.product_id, "strategy": prompt.strategy.value,
                          "stage": "generate", "reason": str(exc)}

    with ThreadPoolExecutor(max_workers=max_inflight) as pool:
        outcomes = list(pool.map(_one, prompts))

    records: list[GenerationRecord] = []
    failures: list[dict] = []
    for record, failure in outcomes:
        if failure is not None:
            failures.append(failure)
        else:
            records.append(record)
            if ledger is not None:
                ledger.append(record.to_dict())
    return records, failures
