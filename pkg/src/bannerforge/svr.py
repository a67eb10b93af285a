"""Support-vector regression scoring from text model files.

The model file follows the de-facto SVM text layout (epsilon-SVR, RBF
kernel, sparse 1-based support vectors); the companion range file holds
per-feature (lower, upper) bounds for linear scaling to [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

FEATURE_COUNT = 36


class SvrModelError(Exception):
    pass


@dataclass(frozen=True)
class SvrModel:
    kernel: str
    gamma: float
    rho: float
    coefficients: np.ndarray  # (n_sv,)
    support_vectors: np.ndarray  # (n_sv, 36)
    feature_ranges: np.ndarray  # (36, 2) of (lower, upper)

    @property
    def total_sv(self) -> int:
        return int(self.coefficients.shape[0])


def _parse_sv_line(line: str, line_no: int) -> tuple[float, np.ndarray]:
    parts = line.split()
    if not parts:
        raise SvrModelError(f"line {line_no}: empty support-vector line")
    try:
        coef = float(parts[0])
    except ValueError:
        raise SvrModelError(f"line {line_no}: bad coefficient {parts[0]!r}")
    features = np.zeros(FEATURE_COUNT, dtype=np.float64)
    for token in parts[1:]:
        idx_str, _, val_str = token.partition(":")
        try:
            idx = int(idx_str)
            val = float(val_str)
        except ValueError:
            raise SvrModelError(f"line {line_no}: bad sparse entry {token!r}")
        if not (1 <= idx <= FEATURE_COUNT):
            raise SvrModelError(
                f"line {line_no}: feature index {idx} out of [1, {FEATURE_COUNT}]")
        features[idx - 1] = val
    return coef, features


def _parse_model_text(text: str) -> tuple[float, float, list[tuple[float, np.ndarray]]]:
    lines = text.splitlines()
    header: dict[str, str] = {}
    sv_start = None
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped == "SV":
            sv_start = i + 1
            break
        key, _, value = stripped.partition(" ")
        header[key] = value.strip()
    if sv_start is None:
        raise SvrModelError("malformed model: no SV section")

    svm_type = header.get("svm_type")
    if svm_type != "epsilon_svr":
        raise SvrModelError(f"unsupported svm_type {svm_type!r}, need epsilon_svr")
    kernel = header.get("kernel_type")
    if kernel != "rbf":
        raise SvrModelError(f"unsupported kernel_type {kernel!r}, need rbf")
    try:
        gamma = float(header["gamma"])
        rho = float(header["rho"])
        total_sv = int(header["total_sv"])
    except (KeyError, ValueError) as exc:
        raise SvrModelError(f"malformed model header: {exc}")
    if total_sv < 1:
        raise SvrModelError(f"total_sv must be >= 1, got {total_sv}")

    vectors = []
    for offset, line in enumerate(lines[sv_start:]):
        if not line.strip():
            continue
        vectors.append(_parse_sv_line(line, sv_start + offset + 1))
    if len(vectors) != total_sv:
        raise SvrModelError(
            f"header promises {total_sv} support vectors, file has {len(vectors)}")
    return gamma, rho, vectors


def _parse_range_text(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2 or lines[0] != "x":
        raise SvrModelError("malformed range file: first line must be 'x'")
    target = lines[1].split()
    if target != ["-1", "1"]:
        raise SvrModelError(f"unsupported scaling target {lines[1]!r}, need '-1 1'")
    ranges = np.full((FEATURE_COUNT, 2), np.nan, dtype=np.float64)
    for line_no, line in enumerate(lines[2:], start=3):
        parts = line.split()
        if len(parts) != 3:
            raise SvrModelError(f"range line {line_no}: expected 'idx lower upper'")
        try:
            idx = int(parts[0])
            lower = float(parts[1])
            upper = float(parts[2])
        except ValueError:
            raise SvrModelError(f"range line {line_no}: bad numbers in {line!r}")
        if not (1 <= idx <= FEATURE_COUNT):
            raise SvrModelError(
                f"range line {line_no}: feature index {idx} out of [1, {FEATURE_COUNT}]")
        if lower >= upper:
            raise SvrModelError(
                f"range line {line_no}: lower {lower} must be < upper {upper}")
        ranges[idx - 1] = (lower, upper)
    missing = [str(i + 1) for i in range(FEATURE_COUNT) if np.isnan(ranges[i, 0])]
    if missing:
        raise SvrModelError(f"range file missing features: {', '.join(missing)}")
    return ranges


def parse_svr_model(model_path, range_path) -> SvrModel:
    gamma, rho, vectors = _parse_model_text(Path(model_path).read_text(encoding="utf-8"))
    ranges = _parse_range_text(Path(range_path).read_text(encoding="utf-8"))
    coefs = np.asarray([c for c, _ in vectors], dtype=np.float64)
    svs = np.vstack([f for _, f in vectors])
    return SvrModel(kernel="rbf", gamma=gamma, rho=rho, coefficients=coefs,
                    support_vectors=svs, feature_ranges=ranges)


def format_svr_model(model: SvrModel) -> tuple[str, str]:
    """Serialize a model back to (model text, range text).

    Values print via float repr (shortest exact form), so parse -> format ->
    parse is the identity.
    """
    lines = [
        "svm_type epsilon_svr",
        "kernel_type rbf",
        f"gamma {float(model.gamma)!r}",
        f"rho {float(model.rho)!r}",
        f"total_sv {model.total_sv}",
        "SV",
    ]
    for coef, sv in zip(model.coefficients, model.support_vectors):
        entries = " ".join(
            f"{i + 1}:{float(sv[i])!r}" for i in range(FEATURE_COUNT) if sv[i] != 0.0)
        lines.append(f"{float(coef)!r} {entries}".rstrip())
    model_text = "\n".join(lines) + "\n"

    range_lines = ["x", "-1 1"]
    for i in range(FEATURE_COUNT):
        lower, upper = model.feature_ranges[i]
        range_lines.append(f"{i + 1} {float(lower)!r} {float(upper)!r}")
    return model_text, "\n".join(range_lines) + "\n"


def scale_features(features, ranges: np.ndarray) -> np.ndarray:
    """Linear map of each feature to [-1, 1] using its (lower, upper) range."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (FEATURE_COUNT,):
        raise SvrModelError(f"expected {FEATURE_COUNT} features, got shape {x.shape}")
    lower = ranges[:, 0]
    upper = ranges[:, 1]
    return -1.0 + 2.0 * (x - lower) / (upper - lower)


def brisque_score(features, model: SvrModel) -> float:
    """RBF kernel sum: sum_k coef_k * exp(-gamma * ||x - sv_k||^2) - rho."""
    x = scale_features(features, model.feature_ranges)
    diffs = model.support_vectors - x[None, :]
    sq_dist = np.sum(diffs * diffs, axis=1)
    return float(np.dot(model.coefficients, np.exp(-model.gamma * sq_dist)) - model.rho)
