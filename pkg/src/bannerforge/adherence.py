"""Prompt Adherence Recall: object presence averaged over all (prompt, label) pairs.

Object detection is delegated to an external service; this module turns
prompts into expected object labels, applies a confidence threshold to
detections, and aggregates presence into the recall score.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

DEFAULT_THRESHOLD = 0.25

_PUNCT_STRIP = string.punctuation + "’‘“”"


class AdherenceError(Exception):
    pass


@dataclass(frozen=True)
class PromptObjects:
    prompt_id: str
    labels: tuple

    def __post_init__(self):
        if not self.labels:
            raise AdherenceError(f"prompt {self.prompt_id!r} has no object labels")
        if len(set(self.labels)) != len(self.labels):
            raise AdherenceError(f"prompt {self.prompt_id!r} has duplicate labels")


@dataclass(frozen=True)
class Detection:
    label: str
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise AdherenceError(f"confidence {self.confidence} outside [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "Detection":
        return cls(label=str(data["label"]), confidence=float(data["confidence"]))


def _head_noun(text: str) -> str:
    tokens = text.split()
    if not tokens:
        raise AdherenceError(f"no head noun in {text!r}")
    head = tokens[-1].strip(_PUNCT_STRIP).lower()
    if not head:
        raise AdherenceError(f"head noun of {text!r} is empty after stripping punctuation")
    return head


def extract_objects(prompt, extraction=None) -> PromptObjects:
    """Expected object labels for a prompt.

    A parsed (subject, keywords, setting) tuple contributes the subject's
    head noun; otherwise the last token of the prompt text is used. The head
    noun is the last whitespace token, punctuation stripped, lowercased.
    """
    prompt_id = f"{prompt.product_id}:{prompt.strategy.value}"
    if extraction is not None and extraction.parsed is not None:
        subject = extraction.parsed[0]
        return PromptObjects(prompt_id=prompt_id, labels=(_head_noun(subject),))
    return PromptObjects(prompt_id=prompt_id, labels=(_head_noun(prompt.text),))


def presence(objects: PromptObjects, detections, threshold: float = DEFAULT_THRESHOLD) -> dict:
    """Per-label presence: 1 iff some detection matches it at or above threshold."""
    if not (0.0 <= threshold <= 1.0):
        raise AdherenceError(f"threshold {threshold} outside [0, 1]")
    dets = [d if isinstance(d, Detection) else Detection.from_dict(d) for d in detections]
    found = {}
    for label in objects.labels:
        hit = any(d.label.lower() == label.lower() and d.confidence >= threshold for d in dets)
        found[label] = 1 if hit else 0
    return found


def par_score(batch, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Flat mean of presence over every (prompt, label) pair in the batch."""
    if not batch:
        raise AdherenceError("cannot score an empty batch")
    hits = 0
    total = 0
    for objects, detections in batch:
        per_label = presence(objects, detections, threshold)
        hits += sum(per_label.values())
        total += len(per_label)
    return hits / total


def par_report(batch, threshold: float = DEFAULT_THRESHOLD) -> dict:
    """Flat-mean PAR plus the per-prompt-mean variant and counting detail."""
    flat = par_score(batch, threshold)
    per_prompt_means = []
    labels_total = 0
    for objects, detections in batch:
        per_label = presence(objects, detections, threshold)
        per_prompt_means.append(sum(per_label.values()) / len(per_label))
        labels_total += len(per_label)
    return {
        "par": flat,
        "per_prompt_mean_par": sum(per_prompt_means) / len(per_prompt_means),
        "prompts": len(per_prompt_means),
        "labels": labels_total,
        "threshold": threshold,
    }
