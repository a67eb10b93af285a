"""Human relevance survey: blinded tasks, rating ledger, score aggregation.

Ratings are low/medium/high mapped to 1/2/3. A method's score is the double
sum over raters and products divided by |raters| * |products|, which assumes
a complete rating grid; incomplete grids are an error at scoring time and a
flagged fallback in reports.
"""

from __future__ import annotations

import hashlib
import random
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

from .ledger import LedgerWriter, read_ledger
from .prompts import Strategy


class HumanEvalError(Exception):
    pass


class Rating(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


# The only token-to-number mapping in the codebase.
RATING_VALUES = {Rating.LOW: 1, Rating.MEDIUM: 2, Rating.HIGH: 3}


def rating_value(rating: Rating) -> int:
    return RATING_VALUES[rating]


def parse_rating(token: str) -> Rating:
    try:
        return Rating(token)
    except ValueError:
        legal = ", ".join(r.value for r in Rating)
        raise HumanEvalError(f"invalid rating {token!r}; legal ratings: {legal}")


@dataclass(frozen=True)
class RatingRecord:
    rater_id: str
    product_id: str
    method: Strategy
    rating: Rating
    submitted_at: str

    def to_dict(self) -> dict:
        return {
            "rater_id": self.rater_id,
            "product_id": self.product_id,
            "method": self.method.value,
            "rating": self.rating.value,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RatingRecord":
        return cls(
            rater_id=str(data["rater_id"]),
            product_id=str(data["product_id"]),
            method=Strategy(data["method"]),
            rating=parse_rating(data["rating"]),
            submitted_at=str(data.get("submitted_at", "")),
        )


@dataclass(frozen=True)
class MethodScore:
    method: Strategy
    mean: float
    std_dev: float
    n: int


@dataclass(frozen=True)
class SurveyTask:
    product_id: str
    product_name: str
    images: dict  # Strategy -> image hash


class SurveyManifest:
    """Survey tasks with per-rater slot blinding.

    Slot order is a deterministic permutation of the three strategies seeded
    by (rater_id, product_id); the strategy behind a slot never leaves the
    server except through this mapping.
    """

    def __init__(self, tasks):
        self.tasks = tuple(tasks)
        self._by_product = {t.product_id: t for t in self.tasks}

    def task_for(self, product_id: str) -> SurveyTask:
        task = self._by_product.get(product_id)
        if task is None:
            raise HumanEvalError(f"unknown product {product_id!r}")
        return task

    def product_ids(self):
        return [t.product_id for t in self.tasks]

    def slots_for(self, rater_id: str, product_id: str):
        self.task_for(product_id)
        digest = hashlib.sha256(f"{rater_id}|{product_id}".encode("utf-8")).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        order = sorted(Strategy, key=lambda s: s.value)
        rng.shuffle(order)
        return tuple(order)

    def method_for_slot(self, rater_id: str, product_id: str, slot: int) -> Strategy:
        slots = self.slots_for(rater_id, product_id)
        if not (0 <= slot < len(slots)):
            raise HumanEvalError(f"slot must be in [0, {len(slots) - 1}], got {slot}")
        return slots[slot]

    def rater_view(self, rater_id: str) -> dict:
        """Blinded manifest for one rater: image hashes in slot order only."""
        tasks = []
        for task in self.tasks:
            slots = self.slots_for(rater_id, task.product_id)
            tasks.append({
                "product_id": task.product_id,
                "product_name": task.product_name,
                "image_hashes": [task.images[s] for s in slots],
            })
        return {"rater_id": rater_id, "tasks": tasks}


def create_survey(products, records) -> SurveyManifest:
    """Build survey tasks from products and their generation ledger records.

    Every product needs exactly one image per strategy; when a strategy has
    several records the latest one wins.
    """
    latest: dict[tuple, str] = {}
    for rec in records:
        data = rec if isinstance(rec, dict) else rec.to_dict()
        latest[(data["product_id"], data["strategy"])] = data["image_hash"]
    tasks = []
    for product in products:
        images = {}
        for strategy in Strategy:
            image_hash = latest.get((product.product_id, strategy.value))
            if image_hash is None:
                raise HumanEvalError(
                    f"product {product.product_id!r} has no {strategy.value} image")
            images[strategy] = image_hash
        tasks.append(SurveyTask(product_id=product.product_id,
                                product_name=product.name, images=images))
    return SurveyManifest(tasks)


class RatingStore:
    """Append-only ratings ledger with last-write-wins effective view.

    Resubmission for the same (rater, product, method) overwrites the
    effective rating; every submission stays in the ledger as audit trail.
    """

    def __init__(self, ledger_path, manifest: SurveyManifest | None = None):
        self._writer = LedgerWriter(ledger_path)
        self._manifest = manifest
        self._lock = threading.Lock()
        self._effective: dict[tuple, RatingRecord] = {}
        self._audit: dict[tuple, int] = {}
        for line in read_ledger(ledger_path):
            record = RatingRecord.from_dict(line)
            key = (record.rater_id, record.product_id, record.method)
            self._effective[key] = record
            self._audit[key] = self._audit.get(key, 0) + 1

    def record_rating(self, record: RatingRecord) -> dict:
        if not record.rater_id:
            raise HumanEvalError("rater_id must be non-empty")
        if self._manifest is not None:
            self._manifest.task_for(record.product_id)
        key = (record.rater_id, record.product_id, record.method)
        with self._lock:
            self._writer.append(record.to_dict())
            self._effective[key] = record
            self._audit[key] = self._audit.get(key, 0) + 1
            return {"stored": True, "audit_count": self._audit[key]}

    def effective_ratings(self) -> list[RatingRecord]:
        with self._lock:
            return list(self._effective.values())

    def audit_count(self, rater_id: str, product_id: str, method: Strategy) -> int:
        return self._audit.get((rater_id, product_id, method), 0)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _cells_for_method(ratings, method: Strategy) -> dict:
    cells: dict[tuple, RatingRecord] = {}
    for record in ratings:
        if record.method != method:
            continue
        key = (record.rater_id, record.product_id)
        if key in cells:
            raise HumanEvalError(
                f"duplicate rating for rater {key[0]!r}, product {key[1]!r}, "
                f"method {method.value}; pass effective (deduplicated) records")
        cells[key] = record
    return cells


def method_score(ratings, method: Strategy) -> MethodScore:
    """Complete-grid mean and population std of ratings for one method.

    The grid is raters x products observed for the method; any missing
    (rater, product) cell is an error because the scoring formula divides
    by |raters| * |products|.
    """
    cells = _cells_for_method(ratings, method)
    if not cells:
        raise HumanEvalError(f"no ratings for method {method.value}")
    raters = sorted({r for r, _ in cells})
    products = sorted({p for _, p in cells})
    missing = [(r, p) for r in raters for p in products if (r, p) not in cells]
    if missing:
        shown = "; ".join(f"rater {r!r} x product {p!r}" for r, p in missing[:10])
        raise HumanEvalError(
            f"incomplete rating grid for {method.value}: {len(missing)} missing cells ({shown})")
    values = [rating_value(rec.rating) for rec in cells.values()]
    n = len(values)
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / n
    return MethodScore(method=method, mean=mean, std_dev=variance ** 0.5, n=n)


def per_product_scores(ratings) -> dict:
    """Per (product, method): mean over raters and standard error.

    standard_error = population std / sqrt(n); a single rating gives 0.
    """
    groups: dict[tuple, list[int]] = {}
    for record in ratings:
        groups.setdefault((record.product_id, record.method), []).append(
            rating_value(record.rating))
    scores = {}
    for key, values in groups.items():
        n = len(values)
        mean = sum(values) / n
        variance = sum((v - mean) ** 2 for v in values) / n
        scores[key] = {"mean": mean, "standard_error": (variance ** 0.5) / (n ** 0.5), "n": n}
    return scores


def survey_report(ratings, product_ids=None) -> dict:
    """Aggregate report: per-method scores, per-product table, completion matrix.

    Methods whose grid is incomplete report a clearly labeled mean over
    available cells instead of the complete-grid score.
    """
    ratings = list(ratings)
    raters = sorted({r.rater_id for r in ratings})
    observed_products = sorted({r.product_id for r in ratings})
    universe = sorted(product_ids) if product_ids is not None else observed_products

    methods = {}
    for method in Strategy:
        cells = {}
        for record in ratings:
            if record.method == method:
                cells[(record.rater_id, record.product_id)] = record
        if not cells:
            methods[method.value] = {"n": 0, "complete_grid": False, "mean": None,
                                     "std_dev": None, "mean_available_cells": None}
            continue
        try:
            score = method_score(ratings, method)
            methods[method.value] = {"n": score.n, "complete_grid": True,
                                     "mean": score.mean, "std_dev": score.std_dev,
                                     "mean_available_cells": score.mean}
        except HumanEvalError:
            values = [rating_value(rec.rating) for rec in cells.values()]
            methods[method.value] = {
                "n": len(values), "complete_grid": False, "mean": None, "std_dev": None,
                # Grid is incomplete, so this is only a flat mean over the
                # cells that exist -- labeled differently so nobody mistakes
                # it for the complete-grid score.
                "mean_available_cells": sum(values) / len(values),
            }

    per_product = [
        {"product_id": product_id, "method": method.value, **stats}
        for (product_id, method), stats in sorted(
            per_product_scores(ratings).items(), key=lambda kv: (kv[0][0], kv[0][1].value))
    ]

    have = {(r.rater_id, r.product_id, r.method) for r in ratings}
    missing_cells = [
        {"rater_id": rater, "product_id": product, "method": method.value}
        for rater in raters for product in universe for method in Strategy
        if (rater, product, method) not in have
    ]

    return {
        "rater_count": len(raters),
        # The id list lets a client tell "rater has rated everything" (present
        # here, absent from missing_cells) apart from "rater never started".
        "raters": raters,
        "product_count": len(universe),
        "rating_count": len(ratings),
        "methods": methods,
        "per_product": per_product,
        "missing_cells": missing_cells,
    }
