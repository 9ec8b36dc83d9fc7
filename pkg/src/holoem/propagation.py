"""Angular-spectrum propagation between parallel planes.

The transfer function for propagation over a distance z at wavelength
lambda is

    H(v) = exp(j k0 z sqrt(1 - (lambda v_x)^2 - (lambda v_y)^2))

inside the propagating band sqrt(v_x^2 + v_y^2) < 1/lambda and exactly 0
outside (evanescent components are dropped), with k0 = 2 pi / lambda.
Distances may be negative (back-propagation); H(-z) = conj(H(z)), so the
propagation operator is unitary on the propagating band and P_{-z} is the
adjoint of P_z.

``propagate`` optionally embeds the field in a 2W x 2H zero frame before
the transform and crops afterwards, which suppresses the wrap-around of
the circular convolution. Padding breaks exact unitarity at the frame
edge, so the analytics-grade identities (round trip, energy conservation,
composition) hold for the unpadded operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

from .grid import ComplexGrid2D, fft_workers

__all__ = ["TransferFunction", "KernelSums", "transfer_function", "propagate", "kernel_sums"]


@dataclass(frozen=True)
class TransferFunction:
    """FFT-ordered angular-spectrum transfer samples for one (z, lambda)."""

    values: np.ndarray
    z: float
    wavelength: float
    pitch_x: float
    pitch_y: float

    def __post_init__(self):
        mag = np.abs(self.values)
        if mag.max(initial=0.0) > 1.0 + 1e-12:
            raise ValueError("transfer function magnitude exceeds 1")


@dataclass(frozen=True)
class KernelSums:
    """Spatial sums of the real/imaginary point-spread kernel parts.

    For the ideal (unpadded) operator these equal cos(k0 z) and sin(k0 z):
    the sum of the kernel over the lattice is the zero-frequency transfer
    sample exp(j k0 z).
    """

    l_re: float
    l_im: float


def _pitch_pair(pitch) -> tuple[float, float]:
    if np.isscalar(pitch):
        return float(pitch), float(pitch)
    px, py = pitch
    return float(px), float(py)


@lru_cache(maxsize=64)
def _transfer_array(
    height: int, width: int, pitch_x: float, pitch_y: float, wavelength: float, z: float
) -> np.ndarray:
    vx = np.fft.fftfreq(width, d=pitch_x)
    vy = np.fft.fftfreq(height, d=pitch_y)
    s = 1.0 - (wavelength * vx[None, :]) ** 2 - (wavelength * vy[:, None]) ** 2
    inside = s > 0.0
    k0 = 2.0 * np.pi / wavelength
    h = np.zeros((height, width), dtype=np.complex128)
    h[inside] = np.exp(1j * k0 * z * np.sqrt(s[inside]))
    h.setflags(write=False)
    return h


def transfer_function(shape: tuple[int, int], pitch, wavelength: float, z: float) -> TransferFunction:
    """Build the angular-spectrum transfer function for a grid shape.

    Parameters
    ----------
    shape : (height, width)
    pitch : scalar pitch in meters, or (pitch_x, pitch_y)
    wavelength : vacuum wavelength in meters
    z : propagation distance in meters (may be negative)
    """
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    height, width = int(shape[0]), int(shape[1])
    if height < 2 or width < 2:
        raise ValueError(f"shape must be at least 2x2, got {shape}")
    pitch_x, pitch_y = _pitch_pair(pitch)
    if not (pitch_x > 0 and pitch_y > 0):
        raise ValueError("pitch must be positive")
    values = _transfer_array(height, width, pitch_x, pitch_y, float(wavelength), float(z))
    return TransferFunction(values, float(z), float(wavelength), pitch_x, pitch_y)


def _pad_slices(height: int, width: int) -> tuple[slice, slice]:
    top, left = height // 2, width // 2
    return slice(top, top + height), slice(left, left + width)


def _propagate_array(
    field: np.ndarray, pitch_x: float, pitch_y: float, wavelength: float, z: float, pad: bool
) -> np.ndarray:
    height, width = field.shape
    if pad:
        frame = np.zeros((2 * height, 2 * width), dtype=np.complex128)
        sy, sx = _pad_slices(height, width)
        frame[sy, sx] = field
        h = _transfer_array(2 * height, 2 * width, pitch_x, pitch_y, wavelength, z)
        out = _fft.ifft2(_fft.fft2(frame, workers=fft_workers()) * h, workers=fft_workers())
        return out[sy, sx]
    h = _transfer_array(height, width, pitch_x, pitch_y, wavelength, z)
    return _fft.ifft2(_fft.fft2(field, workers=fft_workers()) * h, workers=fft_workers())


def propagate(field: ComplexGrid2D, z: float, wavelength: float, pad: bool = False) -> ComplexGrid2D:
    """Propagate a sampled field over distance z (negative = backward).

    With ``pad=True`` the field is embedded centered in a doubled zero
    frame for the transform and cropped back, suppressing circular
    wrap-around at the cost of exact unitarity.
    """
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    out = _propagate_array(field.data, field.pitch_x, field.pitch_y, float(wavelength), float(z), pad)
    return ComplexGrid2D(out, field.pitch_x, field.pitch_y)


def kernel_sums(wavelength: float, z: float) -> KernelSums:
    """Lattice sums of the real and imaginary kernel parts: (cos k0 z, sin k0 z)."""
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    k0z = 2.0 * np.pi / wavelength * z
    return KernelSums(l_re=float(np.cos(k0z)), l_im=float(np.sin(k0z)))
