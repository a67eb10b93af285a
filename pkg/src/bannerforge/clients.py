"""Service clients: text generation, image generation, object detection.

HTTP clients implement the wire contracts; mock clients are deterministic
stand-ins so the whole pipeline and metric suite run offline.
"""

from __future__ import annotations

import base64
import hashlib
import io
import time

import httpx
import numpy as np


class TransportError(Exception):
    """Transport-level failure that survived the retry budget."""


class BackendRejection(Exception):
    """Non-retryable rejection (HTTP error status) from a backend."""


RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 0.5  # seconds, doubled per attempt


def _parse_auth_header(auth_header: str | None) -> dict:
    if not auth_header:
        return {}
    name, _, value = auth_header.partition(":")
    if not value:
        raise ValueError(f"auth_header must look like 'Name: value', got {auth_header!r}")
    return {name.strip(): value.strip()}


def _post_json(url: str, payload: dict, headers: dict, timeout: float,
               attempts: int = RETRY_ATTEMPTS, base_delay: float = RETRY_BASE_DELAY) -> dict:
    last_exc = None
    for attempt in range(attempts):
        try:
            resp = httpx.post(url, json=payload, headers=headers, timeout=timeout)
        except httpx.HTTPError as exc:
            last_exc = exc
            if attempt + 1 < attempts:
                time.sleep(base_delay * (2 ** attempt))
            continue
        if resp.status_code != 200:
            raise BackendRejection(f"{url} replied {resp.status_code}: {resp.text[:200]}")
        return resp.json()
    raise TransportError(f"{url} unreachable after {attempts} attempts: {last_exc}")


class TextGenHttpClient:
    def __init__(self, base_url: str, auth_header: str = "", temperature: float = 0.2,
                 max_tokens: int = 80, seed: int | None = None, timeout: float = 60.0,
                 retry_base_delay: float = RETRY_BASE_DELAY):
        self.url = base_url.rstrip("/")
        self.headers = _parse_auth_header(auth_header)
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.seed = seed
        self.timeout = timeout
        self.retry_base_delay = retry_base_delay

    def generate(self, prompt: str) -> str:
        payload = {"prompt": prompt, "max_tokens": self.max_tokens, "temperature": self.temperature}
        if self.seed is not None:
            payload["seed"] = self.seed
        reply = _post_json(self.url, payload, self.headers, self.timeout,
                           base_delay=self.retry_base_delay)
        return str(reply.get("text", ""))


class ImageGenHttpClient:
    def __init__(self, base_url: str, auth_header: str = "", timeout: float = 300.0,
                 retry_base_delay: float = RETRY_BASE_DELAY):
        self.url = base_url.rstrip("/")
        self.headers = _parse_auth_header(auth_header)
        self.timeout = timeout
        self.retry_base_delay = retry_base_delay
        self.backend_id = f"http:{self.url}"

    def generate(self, prompt: str, params) -> bytes:
        payload = {
            "prompt": prompt,
            "width": params.width,
            "height": params.height,
            "steps": params.steps,
            "guidance": params.guidance,
            "seed": params.seed,
        }
        reply = _post_json(self.url, payload, self.headers, self.timeout,
                           base_delay=self.retry_base_delay)
        try:
            return base64.b64decode(reply["image_b64"])
        except (KeyError, ValueError, TypeError) as exc:
            raise BackendRejection(f"{self.url}: reply missing/invalid image_b64 ({exc})")


class DetectorHttpClient:
    def __init__(self, base_url: str, auth_header: str = "", timeout: float = 60.0,
                 retry_base_delay: float = RETRY_BASE_DELAY):
        self.url = base_url.rstrip("/")
        self.headers = _parse_auth_header(auth_header)
        self.timeout = timeout
        self.retry_base_delay = retry_base_delay

    def detect(self, image_bytes: bytes) -> list[dict]:
        payload = {"image_b64": base64.b64encode(image_bytes).decode("ascii")}
        reply = _post_json(self.url, payload, self.headers, self.timeout,
                           base_delay=self.retry_base_delay)
        return list(reply.get("detections", []))


def _seed_from(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


_MOCK_SUBJECTS = ["rug", "bed", "sofa", "lamp", "controller", "plush", "cabinet", "bag", "hat", "shoes"]
_MOCK_FEATURES = ["soft gray fabric", "bold primary colors", "a sleek matte finish",
                  "warm wooden textures", "plush rounded edges", "bright playful patterns"]
_MOCK_SETTINGS = ["a sunlit living room", "a cozy bedroom", "a tidy home office",
                  "a playful kids room", "a modern studio", "a quiet reading corner"]


class MockTextGenClient:
    """Deterministic offline text generation.

    Replies follow the "subject with keywords in setting" shape, derived from
    a hash of the prompt. `replies` maps prompt substrings to canned replies;
    `fail_if_contains` simulates an unreachable service for matching prompts.
    """

    backend_id = "mock-textgen"

    def __init__(self, replies: dict | None = None, fail_if_contains=()):
        if isinstance(fail_if_contains, str):
            fail_if_contains = (fail_if_contains,)
        self.replies = dict(replies or {})
        self.fail_if_contains = tuple(fail_if_contains)
        self.calls = 0

    def generate(self, prompt: str) -> str:
        self.calls += 1
        for marker in self.fail_if_contains:
            if marker in prompt:
                raise TransportError(f"mock text generation unavailable (matched {marker!r})")
        for key, reply in self.replies.items():
            if key in prompt:
                return reply
        rng = np.random.default_rng(_seed_from("textgen", prompt))
        subject = _MOCK_SUBJECTS[rng.integers(len(_MOCK_SUBJECTS))]
        feature = _MOCK_FEATURES[rng.integers(len(_MOCK_FEATURES))]
        setting = _MOCK_SETTINGS[rng.integers(len(_MOCK_SETTINGS))]
        return f"stylish {subject} with {feature} in {setting}"


class MockImageGenClient:
    """Deterministic procedural renderer: seeded noise blended over a palette
    derived from the prompt hash. Same inputs always produce identical bytes."""

    backend_id = "mock-imagegen"

    def __init__(self, fail_if_contains=()):
        if isinstance(fail_if_contains, str):
            fail_if_contains = (fail_if_contains,)
        self.fail_if_contains = tuple(fail_if_contains)

    def generate(self, prompt: str, params) -> bytes:
        from PIL import Image

        for marker in self.fail_if_contains:
            if marker in prompt:
                raise TransportError(f"mock image generation unavailable (matched {marker!r})")

        seed = _seed_from("imagegen", prompt, params.width, params.height,
                          params.steps, params.guidance, params.seed)
        rng = np.random.default_rng(seed)
        digest = np.frombuffer(hashlib.sha256(prompt.encode("utf-8")).digest(), dtype=np.uint8)
        color_a = digest[0:3].astype(np.float64)
        color_b = digest[3:6].astype(np.float64)

        h, w = params.height, params.width
        # Coarse noise grid upsampled to full size keeps the field smooth and cheap.
        gh, gw = max(2, h // 32), max(2, w // 32)
        coarse = rng.random((gh, gw))
        yi = np.linspace(0, gh - 1, h)
        xi = np.linspace(0, gw - 1, w)
        y0 = np.floor(yi).astype(int)
        x0 = np.floor(xi).astype(int)
        y1 = np.minimum(y0 + 1, gh - 1)
        x1 = np.minimum(x0 + 1, gw - 1)
        fy = (yi - y0)[:, None]
        fx = (xi - x0)[None, :]
        field = (coarse[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
                 + coarse[np.ix_(y1, x0)] * fy * (1 - fx)
                 + coarse[np.ix_(y0, x1)] * (1 - fy) * fx
                 + coarse[np.ix_(y1, x1)] * fy * fx)
        field = field + rng.normal(0.0, 0.04, size=(h, w))
        field = np.clip(field, 0.0, 1.0)

        pixels = color_a[None, None, :] * (1 - field[:, :, None]) + color_b[None, None, :] * field[:, :, None]
        pixels = np.clip(pixels, 0, 255).astype(np.uint8)

        buf = io.BytesIO()
        Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()


_MOCK_DETECTOR_VOCAB = [
    "rug", "bed", "sofa", "lamp", "controller", "plush", "cabinet", "bag",
    "hat", "shoes", "chair", "table", "dog", "cat", "person",
]


class MockDetectorClient:
    """Deterministic detections derived from the image bytes hash."""

    backend_id = "mock-detector"

    def detect(self, image_bytes: bytes) -> list[dict]:
        rng = np.random.default_rng(_seed_from("detector", hashlib.sha256(image_bytes).hexdigest()))
        k = int(rng.integers(1, 5))
        picks = rng.choice(len(_MOCK_DETECTOR_VOCAB), size=k, replace=False)
        return [
            {"label": _MOCK_DETECTOR_VOCAB[i], "confidence": float(np.round(rng.uniform(0.1, 0.99), 3))}
            for i in picks
        ]
