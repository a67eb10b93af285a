"""No-reference image quality features and scoring.

Gray images are plain 2-D float64 arrays with pixel values in [0, 255].
The feature pipeline: local mean/contrast normalization (MSCN), paired
neighbor products in four orientations, generalized-Gaussian moment fits,
36 features over two scales, then an RBF support-vector regression score
loaded from a text model file.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d
from scipy.special import gamma as _gamma_fn


class BrisqueError(Exception):
    pass


KERNEL_SIZE = 7
KERNEL_SIGMA = 7.0 / 6.0
MSCN_C = 1.0
ALPHA_GRID_STEP = 0.001
ALPHA_MIN = 0.2
ALPHA_MAX = 10.0
MIN_DIMENSION = 16
MIN_FIT_SAMPLES = 100

_LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_grid_cache: tuple | None = None


def moment_ratio_grid() -> tuple[np.ndarray, np.ndarray]:
    """Alpha grid and rho(alpha) = Gamma(1/a)Gamma(3/a)/Gamma(2/a)^2 on it.

    rho is strictly decreasing on [0.2, 10], from ~15.9 down to ~1.35. The
    moment ratio it is matched against is mean(x^2)/mean(|x|)^2, which lives
    in the same range (Gaussian -> pi/2, Laplace -> 2).
    """
    global _grid_cache
    if _grid_cache is None:
        alphas = np.arange(ALPHA_MIN, ALPHA_MAX + ALPHA_GRID_STEP / 2, ALPHA_GRID_STEP)
        rho = _gamma_fn(1.0 / alphas) * _gamma_fn(3.0 / alphas) / _gamma_fn(2.0 / alphas) ** 2
        _grid_cache = (alphas, rho)
    return _grid_cache


@dataclass(frozen=True)
class GgdFit:
    alpha: float
    sigma_sq: float


@dataclass(frozen=True)
class AggdFit:
    nu: float
    sigma_l_sq: float
    sigma_r_sq: float
    mean_feature: float


def to_luminance(image) -> np.ndarray:
    """Convert an image (PNG bytes, PIL image, or HxWx3 array) to gray.

    gray = 0.299 R + 0.587 G + 0.114 B, float64, range [0, 255].
    """
    from PIL import Image, UnidentifiedImageError

    if isinstance(image, (bytes, bytearray)):
        try:
            with Image.open(io.BytesIO(image)) as img:
                arr = np.asarray(img.convert("RGB"), dtype=np.float64)
        except UnidentifiedImageError:
            raise BrisqueError("input bytes do not decode as an image")
    elif isinstance(image, np.ndarray):
        arr = np.asarray(image, dtype=np.float64)
    else:
        arr = np.asarray(image.convert("RGB"), dtype=np.float64)

    if arr.ndim == 2:
        gray = arr
    elif arr.ndim == 3 and arr.shape[2] >= 3:
        r, g, b = _LUMA_WEIGHTS
        gray = r * arr[:, :, 0] + g * arr[:, :, 1] + b * arr[:, :, 2]
    else:
        raise BrisqueError(f"unsupported image shape {arr.shape}")

    if min(gray.shape) < MIN_DIMENSION:
        raise BrisqueError(
            f"image too small for two-scale features: {gray.shape}, need >= {MIN_DIMENSION}")
    return gray


def _gaussian_kernel(size: int = KERNEL_SIZE, sigma: float = KERNEL_SIGMA) -> np.ndarray:
    half = size // 2
    coords = np.arange(-half, half + 1, dtype=np.float64)
    xx, yy = np.meshgrid(coords, coords)
    kernel = np.exp(-(xx ** 2 + yy ** 2) / (2.0 * sigma ** 2))
    return kernel / kernel.sum()


def compute_mscn(gray: np.ndarray) -> np.ndarray:
    """Local mean/contrast normalization: (I - mu) / (sigma + 1).

    mu and sigma are Gaussian-weighted local moments (7x7 kernel, sigma 7/6,
    unit-sum, mirror-symmetric boundary).
    """
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2:
        raise BrisqueError(f"expected a 2-D gray image, got shape {gray.shape}")
    # A constant image normalizes to exactly zero; handled explicitly because
    # the convolution route only reaches zero up to rounding error.
    if np.ptp(gray) == 0:
        return np.zeros_like(gray)
    kernel = _gaussian_kernel()
    mu = convolve2d(gray, kernel, mode="same", boundary="symm")
    mu_sq = mu * mu
    var = convolve2d(gray * gray, kernel, mode="same", boundary="symm") - mu_sq
    sigma = np.sqrt(np.maximum(var, 0.0))
    return (gray - mu) / (sigma + MSCN_C)


def paired_products(mscn: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Neighbor products: horizontal, vertical, main diagonal, secondary diagonal.

    Output dimensions shrink by one along each paired axis.
    """
    m = np.asarray(mscn, dtype=np.float64)
    horizontal = m[:, :-1] * m[:, 1:]
    vertical = m[:-1, :] * m[1:, :]
    diagonal = m[:-1, :-1] * m[1:, 1:]
    secondary = m[:-1, 1:] * m[1:, :-1]
    return horizontal, vertical, diagonal, secondary


def fit_ggd(samples) -> GgdFit:
    """Moment-matching fit of a zero-mean generalized Gaussian.

    The empirical ratio mean(x^2)/mean(|x|)^2 is matched against
    rho(a) = Gamma(1/a)Gamma(3/a)/Gamma(2/a)^2 over a dense alpha grid;
    a standard Gaussian lands at alpha ~ 2, a Laplace at alpha ~ 1.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < MIN_FIT_SAMPLES:
        raise BrisqueError(f"need >= {MIN_FIT_SAMPLES} samples, got {x.size}")
    m1 = np.mean(np.abs(x))
    m2 = np.mean(x * x)
    if m2 == 0.0:
        raise BrisqueError("degenerate input: all samples are zero")
    ratio = m2 / (m1 * m1)
    alphas, rho = moment_ratio_grid()
    alpha = float(alphas[np.argmin(np.abs(rho - ratio))])
    return GgdFit(alpha=alpha, sigma_sq=float(m2))


def fit_aggd(samples) -> AggdFit:
    """Moment-matching fit of an asymmetric generalized Gaussian.

    Left/right variances come from the strictly negative/positive halves;
    the asymmetry-adjusted ratio R = r (g^3+1)(g+1)/(g^2+1)^2 with
    g = sigma_l/sigma_r and r = mean(|x|)^2/mean(x^2) is matched against
    1/rho(a) on the same alpha grid.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < MIN_FIT_SAMPLES:
        raise BrisqueError(f"need >= {MIN_FIT_SAMPLES} samples, got {x.size}")
    neg = x[x < 0]
    pos = x[x > 0]
    if neg.size == 0 or pos.size == 0:
        raise BrisqueError("single-signed input: need samples of both signs")
    sigma_l_sq = float(np.mean(neg * neg))
    sigma_r_sq = float(np.mean(pos * pos))
    sigma_l = math.sqrt(sigma_l_sq)
    sigma_r = math.sqrt(sigma_r_sq)
    g = sigma_l / sigma_r
    r_hat = float(np.mean(np.abs(x))) ** 2 / float(np.mean(x * x))
    big_r = r_hat * (g ** 3 + 1.0) * (g + 1.0) / (g ** 2 + 1.0) ** 2
    alphas, rho = moment_ratio_grid()
    nu = float(alphas[np.argmin(np.abs(rho - 1.0 / big_r))])
    mean_feature = (sigma_r - sigma_l) * _gamma_fn(2.0 / nu) / _gamma_fn(1.0 / nu)
    return AggdFit(nu=nu, sigma_l_sq=sigma_l_sq, sigma_r_sq=sigma_r_sq,
                   mean_feature=float(mean_feature))


def _downscale_half(gray: np.ndarray) -> np.ndarray:
    # 2x2 box average then 2x decimation; odd trailing row/column dropped.
    h2 = (gray.shape[0] // 2) * 2
    w2 = (gray.shape[1] // 2) * 2
    blocks = gray[:h2, :w2].reshape(h2 // 2, 2, w2 // 2, 2)
    return blocks.mean(axis=(1, 3))


def _scale_features(gray: np.ndarray) -> list[float]:
    mscn = compute_mscn(gray)
    ggd = fit_ggd(mscn)
    feats = [ggd.alpha, ggd.sigma_sq]
    for pairs in paired_products(mscn):
        aggd = fit_aggd(pairs)
        feats.extend([aggd.nu, aggd.mean_feature, aggd.sigma_l_sq, aggd.sigma_r_sq])
    return feats


def brisque_features(gray: np.ndarray) -> np.ndarray:
    """36-component feature vector: 18 per scale, second scale half-size."""
    gray = np.asarray(gray, dtype=np.float64)
    if min(gray.shape) < MIN_DIMENSION:
        raise BrisqueError(
            f"image too small for two-scale features: {gray.shape}, need >= {MIN_DIMENSION}")
    feats = _scale_features(gray)
    feats.extend(_scale_features(_downscale_half(gray)))
    vector = np.asarray(feats, dtype=np.float64)
    if not np.all(np.isfinite(vector)):
        raise BrisqueError("non-finite feature encountered")
    return vector


def summarize_scores(scores) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    arr = np.asarray(list(scores), dtype=np.float64)
    if arr.size == 0:
        raise BrisqueError("cannot summarize an empty score list")
    return float(arr.mean()), float(arr.std())
