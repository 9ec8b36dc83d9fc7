"""Sampled 2-D fields and the spectral conventions used throughout.

All spectra follow the unnormalized-forward convention: ``dft2`` applies no
scale factor and ``idft2`` carries ``1/(width*height)``, i.e. numpy/scipy
``norm="backward"``. Frequency coordinates are FFT-ordered cycles per meter.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

__all__ = [
    "ComplexGrid2D",
    "RealGrid2D",
    "FrequencyGrid",
    "dft2",
    "idft2",
    "frequency_coordinates",
    "fft_workers",
]


def fft_workers() -> int:
    """Worker count for FFT calls, read from the HOLOEM_THREADS env var."""
    try:
        return max(1, int(os.environ.get("HOLOEM_THREADS", "1")))
    except ValueError:
        return 1


def _prepare(data, dtype: type) -> np.ndarray:
    arr = np.array(data, dtype=dtype, order="C")
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ValueError(
            f"grid data must be 2-D with at least 2x2 samples, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(f"grid contains a non-finite sample at (y={bad[0]}, x={bad[1]})")
    arr.setflags(write=False)
    return arr


def _check_pitch(pitch_x: float, pitch_y: float) -> None:
    if not (pitch_x > 0 and np.isfinite(pitch_x)) or not (pitch_y > 0 and np.isfinite(pitch_y)):
        raise ValueError(f"pixel pitch must be positive and finite, got ({pitch_x}, {pitch_y})")


@dataclass(frozen=True)
class ComplexGrid2D:
    """Complex field samples on a uniform lattice.

    data has shape (height, width), row index y, column index x.
    pitch_x / pitch_y are the physical sample pitches in meters. The data
    buffer is made read-only; derive modified grids with :meth:`with_data`.
    """

    data: np.ndarray
    pitch_x: float
    pitch_y: float

    def __post_init__(self):
        _check_pitch(self.pitch_x, self.pitch_y)
        object.__setattr__(self, "data", _prepare(self.data, np.complex128))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data) -> "ComplexGrid2D":
        return ComplexGrid2D(data, self.pitch_x, self.pitch_y)

    def real_part(self) -> "RealGrid2D":
        return RealGrid2D(self.data.real, self.pitch_x, self.pitch_y)

    def imag_part(self) -> "RealGrid2D":
        return RealGrid2D(self.data.imag, self.pitch_x, self.pitch_y)


@dataclass(frozen=True)
class RealGrid2D:
    """Real-valued samples on a uniform lattice (see :class:`ComplexGrid2D`).

    Entries must be finite; non-negativity is a property of intensity data
    and is enforced where intensities are constructed, not here.
    """

    data: np.ndarray
    pitch_x: float
    pitch_y: float

    def __post_init__(self):
        _check_pitch(self.pitch_x, self.pitch_y)
        object.__setattr__(self, "data", _prepare(self.data, np.float64))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data) -> "RealGrid2D":
        return RealGrid2D(data, self.pitch_x, self.pitch_y)

    def as_complex(self) -> ComplexGrid2D:
        return ComplexGrid2D(self.data.astype(np.complex128), self.pitch_x, self.pitch_y)


def frequency_coordinates(n: int, pitch: float) -> np.ndarray:
    """FFT-ordered spatial frequencies for an n-point axis, cycles/meter.

    Equivalent to numpy.fft.fftfreq(n, d=pitch): starts at 0, ascends to the
    positive band edge, wraps to the negative frequencies. For even n the
    Nyquist frequency -1/(2 pitch) is included once, on the negative side.
    """
    if n < 1:
        raise ValueError(f"axis length must be >= 1, got {n}")
    if not pitch > 0:
        raise ValueError(f"pitch must be positive, got {pitch}")
    return np.fft.fftfreq(n, d=pitch)


@dataclass(frozen=True)
class FrequencyGrid:
    """FFT-ordered frequency coordinates of a grid, cycles per meter."""

    v_x: np.ndarray
    v_y: np.ndarray

    @classmethod
    def for_shape(cls, shape: tuple[int, int], pitch_x: float, pitch_y: float) -> "FrequencyGrid":
        height, width = shape
        return cls(
            v_x=frequency_coordinates(width, pitch_x),
            v_y=frequency_coordinates(height, pitch_y),
        )

    def radial_squared(self) -> np.ndarray:
        """|v|^2 on the full 2-D lattice, shape (height, width)."""
        return self.v_y[:, None] ** 2 + self.v_x[None, :] ** 2


def dft2(grid: ComplexGrid2D) -> ComplexGrid2D:
    """Unnormalized forward 2-D DFT (numpy convention, norm='backward')."""
    out = _fft.fft2(grid.data, workers=fft_workers())
    return ComplexGrid2D(out, grid.pitch_x, grid.pitch_y)


def idft2(grid: ComplexGrid2D) -> ComplexGrid2D:
    """Inverse 2-D DFT carrying the 1/(width*height) factor."""
    out = _fft.ifft2(grid.data, workers=fft_workers())
    return ComplexGrid2D(out, grid.pitch_x, grid.pitch_y)
