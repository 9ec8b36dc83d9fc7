"""Image-quality and focus metrics.

SSIM follows the standard structural-similarity definition: an 11x11
Gaussian window with sigma = 1.5, stability constants K1 = 0.01 and
K2 = 0.03 relative to the dynamic range, moments taken as plain weighted
averages, and the mean taken over fully valid windows only. PSNR uses the
peak of the reference image unless an explicit peak is given.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass

import numpy as np
import scipy.ndimage as _ndi
import scipy.signal as _sig

from .forward import Hologram
from .grid import RealGrid2D
from .propagation import _propagate_array

logger = logging.getLogger(__name__)

__all__ = [
    "QualityReport",
    "mse",
    "psnr",
    "ssim",
    "median_filter",
    "normalize01",
    "display_normalize",
    "ncc",
    "focus_metric",
    "autofocus",
    "resolution_limits",
    "quality_report",
]

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _as_array(image) -> np.ndarray:
    if isinstance(image, RealGrid2D):
        return image.data
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("image contains non-finite values")
    return arr


def _pair(test, reference) -> tuple[np.ndarray, np.ndarray]:
    a, b = _as_array(test), _as_array(reference)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(test, reference) -> float:
    """Mean squared error between two same-shape images."""
    a, b = _pair(test, reference)
    return float(np.mean((a - b) ** 2))


def psnr(test, reference, peak: float | None = None) -> float:
    """Peak signal-to-noise ratio in dB; peak defaults to max(reference).

    Identical images give +inf.
    """
    a, b = _pair(test, reference)
    if peak is None:
        peak = float(b.max())
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    err = float(np.mean((a - b) ** 2))
    if err == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak**2 / err))


def _gaussian_window() -> np.ndarray:
    half = (SSIM_WINDOW - 1) / 2.0
    g = np.exp(-((np.arange(SSIM_WINDOW) - half) ** 2) / (2.0 * SSIM_SIGMA**2))
    k = np.outer(g, g)
    return k / k.sum()


def _windowed(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return _sig.fftconvolve(img, kernel, mode="valid")


def ssim(test, reference, peak: float | None = None) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows."""
    a, b = _pair(test, reference)
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW} pixels on a side")
    if peak is None:
        peak = float(b.max())
    if not peak > 0:
        raise ValueError(f"peak (dynamic range) must be positive, got {peak}")
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    k = _gaussian_window()
    mu_a = _windowed(a, k)
    mu_b = _windowed(b, k)
    var_a = _windowed(a * a, k) - mu_a**2
    var_b = _windowed(b * b, k) - mu_b**2
    cov = _windowed(a * b, k) - mu_a * mu_b
    s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
    return float(s.mean())


def normalize01(image) -> np.ndarray:
    """Min-max normalize to [0, 1]; a constant image maps to zeros."""
    a = _as_array(image)
    lo, hi = float(a.min()), float(a.max())
    if hi == lo:
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)


def display_normalize(image, p_low: float = 1.0, p_high: float = 99.0) -> np.ndarray:
    """Percentile contrast stretch to [0, 1] with clipping.

    Maps the p_low..p_high percentile range to 0..1 and clips outliers,
    the way reconstructions are windowed for display. Robust image
    comparisons (SSIM between a reconstruction and ground truth) should
    run on display-normalized images: plain min-max lets a single hot
    pixel compress all structure toward a constant. When the percentile
    window collapses (images whose structure occupies fewer pixels than
    the clipped tails, e.g. very sparse ground truths) the stretch widens
    to min-max. A constant image maps to zeros.
    """
    a = _as_array(image)
    lo, hi = (float(v) for v in np.percentile(a, (p_low, p_high)))
    if hi <= lo:
        lo, hi = float(a.min()), float(a.max())
    if hi <= lo:
        return np.zeros_like(a)
    return np.clip((a - lo) / (hi - lo), 0.0, 1.0)


def ncc(test, reference) -> float:
    """Normalized cross-correlation (zero-mean cosine similarity).

    1.0 for affinely identical images, 0 when either image is constant.
    """
    a, b = _pair(test, reference)
    a = a - a.mean()
    b = b - b.mean()
    den = float(np.sqrt(np.sum(a * a) * np.sum(b * b)))
    if den == 0.0:
        return 0.0
    return float(np.sum(a * b) / den)


def median_filter(image, size: int = 3):
    """k x k median filter with replicated edges; k must be odd and >= 1."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"median filter size must be odd and >= 1, got {size}")
    if isinstance(image, RealGrid2D):
        return image.with_data(_ndi.median_filter(image.data, size=size, mode="nearest"))
    return _ndi.median_filter(_as_array(image), size=size, mode="nearest")


def focus_metric(amplitude) -> float:
    """Variance of the forward-difference gradient magnitude.

    Sharp in-focus structure concentrates large gradients on feature
    edges, giving a heavy-tailed gradient distribution and a large
    variance; defocused fields spread energy into gentle ripples.
    """
    a = _as_array(amplitude)
    gx = np.zeros_like(a)
    gy = np.zeros_like(a)
    gx[:, :-1] = a[:, 1:] - a[:, :-1]
    gy[:-1, :] = a[1:, :] - a[:-1, :]
    return float(np.var(np.hypot(gx, gy)))


def autofocus(
    hologram: Hologram, z_min: float, z_max: float, z_step: float, pad: bool = True
) -> float:
    """Distance of best focus by scanning back-propagated amplitude sharpness.

    Scans z_min..z_max inclusive in z_step increments, back-propagates the
    recorded intensity to each candidate plane, and returns the distance
    maximizing :func:`focus_metric` of the amplitude. The hologram mean is
    removed before propagation: the unscattered pedestal carries no depth
    information but its interference with defocused fringes otherwise
    dominates the sharpness landscape. Ties take the smallest distance. A
    maximum on the scan boundary is returned as-is with a low-confidence
    warning, since the true optimum may lie outside the scanned range.
    """
    if not (z_step > 0 and z_max >= z_min):
        raise ValueError("need z_max >= z_min and z_step > 0")
    n = int(np.floor((z_max - z_min) / z_step + 1e-9)) + 1
    zs = z_min + z_step * np.arange(n)
    raw = hologram.intensity.data
    g = (raw - raw.mean()).astype(np.complex128)
    cfg = hologram.config
    scores = np.empty(n)
    for i, z in enumerate(zs):
        field = _propagate_array(g, cfg.pitch_x, cfg.pitch_y, cfg.wavelength, -z, pad=pad)
        scores[i] = focus_metric(np.abs(field))
    best = int(np.argmax(scores))
    if best == 0 or best == n - 1:
        logger.warning(
            "autofocus maximum at scan boundary z=%.6g m; result is low confidence", zs[best]
        )
    return float(zs[best])


def resolution_limits(wavelength: float, numerical_aperture: float) -> tuple[float, float]:
    """Diffraction-limited lateral and axial resolution (meters).

    lateral = wavelength / (2 NA), axial = 2 wavelength / NA^2.
    """
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    if not 0 < numerical_aperture <= 1:
        raise ValueError(f"numerical aperture must be in (0, 1], got {numerical_aperture}")
    lateral = wavelength / (2.0 * numerical_aperture)
    axial = 2.0 * wavelength / numerical_aperture**2
    return lateral, axial


@dataclass
class QualityReport:
    """Reconstruction quality versus a reference image."""

    mse: float
    psnr_db: float
    ssim: float
    ssim_after_median: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def quality_report(test, reference, peak: float | None = None, median_size: int = 3) -> QualityReport:
    """MSE / PSNR / SSIM of test vs reference, plus SSIM after median filtering test."""
    a, b = _pair(test, reference)
    if peak is None:
        peak = float(b.max())
    return QualityReport(
        mse=mse(a, b),
        psnr_db=psnr(a, b, peak=peak),
        ssim=ssim(a, b, peak=peak),
        ssim_after_median=ssim(median_filter(a, median_size), b, peak=peak),
    )
