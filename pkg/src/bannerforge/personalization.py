"""Item-to-user mapping via cohort affinities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path


class PersonalizationError(Exception):
    pass


@dataclass(frozen=True)
class UserAffinities:
    user_id: str
    affinities: dict  # cohort label -> score

    def __post_init__(self):
        if not self.affinities:
            raise PersonalizationError(f"user {self.user_id!r}: affinities must be non-empty")
        for cohort, score in self.affinities.items():
            if not math.isfinite(score):
                raise PersonalizationError(f"user {self.user_id!r}: non-finite affinity for {cohort!r}")


@dataclass(frozen=True)
class Selection:
    user_id: str
    product_id: str
    cohort: str
    affinity_used: float


def select_item(user: UserAffinities, candidates) -> Selection:
    """Pick the candidate whose cohort carries the user's highest affinity.

    Ties break on lexicographically smallest cohort label, then smallest
    product_id. Candidates whose cohort has no affinity entry are skipped;
    if none match at all, fall back to the smallest product_id with
    affinity_used 0.
    """
    candidates = list(candidates)
    if not candidates:
        raise PersonalizationError(f"user {user.user_id!r}: empty candidate list")

    matching = [p for p in candidates if p.cohort in user.affinities]
    if not matching:
        fallback = min(candidates, key=lambda p: p.product_id)
        return Selection(user_id=user.user_id, product_id=fallback.product_id,
                         cohort=fallback.cohort, affinity_used=0.0)

    best = min(matching, key=lambda p: (-user.affinities[p.cohort], p.cohort, p.product_id))
    return Selection(
        user_id=user.user_id,
        product_id=best.product_id,
        cohort=best.cohort,
        affinity_used=float(user.affinities[best.cohort]),
    )


def load_affinities(path) -> list[UserAffinities]:
    """Read users from an affinities.jsonl file ({user_id, affinities:{cohort: score}})."""
    users = []
    with open(Path(path), encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PersonalizationError(f"{path}:{line_no}: invalid json ({exc.msg})") from exc
            if "user_id" not in row or "affinities" not in row:
                raise PersonalizationError(f"{path}:{line_no}: expected user_id and affinities keys")
            users.append(UserAffinities(
                user_id=str(row["user_id"]),
                affinities={str(k): float(v) for k, v in row["affinities"].items()},
            ))
    return users
