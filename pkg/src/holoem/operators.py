"""Multi-slice hologram operator on raw arrays.

Forward map for a stack of S object slices w_z at distances z:

    (H w)(x) = sum_z Re[ P_z w_z ](x)

and its adjoint applied to a real residual r:

    (H* r)_z = P_{-z} r        (complex; .real is the gradient w.r.t. the
                                real slice part, .imag w.r.t. the imaginary)

Both directions share one aggregate transform: the forward sums slice
spectra before a single inverse FFT, the adjoint reuses one forward FFT of
the residual. This is exact linearity, not an approximation.

With ``pad=True`` each slice is split into its window mean and the
zero-mean remainder. The mean models the unscattered plane-wave
component, which physically extends far beyond the recorded window; it
propagates analytically (a plane wave just picks up the phase
exp(j k0 z)). Only the remainder, which is compact for sparse objects, is
embedded centered in a doubled zero frame, transformed and cropped back.
Naively zero-padding the whole slice instead would make a constant
background unrepresentable: its padded propagation rings at the frame
edge, and an iterative solver then fights a structural residual over the
entire field. The adjoint implements the exact transpose of this split
(analytic mean response plus mean-removed padded back-propagation), so
gradient checks hold to rounding error with padding on.

These functions are the performance core; the public modules wrap them
with grid types and validation.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as _fft

from .grid import fft_workers
from .propagation import _pad_slices, _transfer_array

__all__ = ["stack_forward", "stack_adjoint"]


def _embed(field: np.ndarray) -> np.ndarray:
    height, width = field.shape
    frame = np.zeros((2 * height, 2 * width), dtype=np.complex128)
    sy, sx = _pad_slices(height, width)
    frame[sy, sx] = field
    return frame


def stack_forward(
    stack: np.ndarray,
    pitch_x: float,
    pitch_y: float,
    wavelength: float,
    distances,
    pad: bool = True,
) -> np.ndarray:
    """Apply the forward map to an (S, H, W) stack; returns a real (H, W) array."""
    stack = np.asarray(stack)
    if stack.ndim != 3 or stack.shape[0] != len(distances):
        raise ValueError(
            f"stack shape {stack.shape} does not match {len(distances)} slice distances"
        )
    height, width = stack.shape[1:]
    workers = fft_workers()
    k0 = 2.0 * np.pi / wavelength
    if pad:
        sy, sx = _pad_slices(height, width)
        spectrum = np.zeros((2 * height, 2 * width), dtype=np.complex128)
        dc = 0.0
        for w, z in zip(stack, distances):
            mean = w.mean()
            dc += (mean * np.exp(1j * k0 * z)).real
            h = _transfer_array(2 * height, 2 * width, pitch_x, pitch_y, wavelength, z)
            spectrum += _fft.fft2(_embed(w - mean), workers=workers) * h
        return dc + _fft.ifft2(spectrum, workers=workers).real[sy, sx]
    spectrum = np.zeros((height, width), dtype=np.complex128)
    for w, z in zip(stack, distances):
        h = _transfer_array(height, width, pitch_x, pitch_y, wavelength, z)
        spectrum += _fft.fft2(w.astype(np.complex128), workers=workers) * h
    return _fft.ifft2(spectrum, workers=workers).real


def stack_adjoint(
    residual: np.ndarray,
    pitch_x: float,
    pitch_y: float,
    wavelength: float,
    distances,
    pad: bool = True,
) -> np.ndarray:
    """Apply the adjoint map to a real (H, W) residual; returns (S, H, W) complex."""
    residual = np.asarray(residual, dtype=np.float64)
    height, width = residual.shape
    workers = fft_workers()
    k0 = 2.0 * np.pi / wavelength
    out = np.empty((len(distances), height, width), dtype=np.complex128)
    if pad:
        sy, sx = _pad_slices(height, width)
        r_mean = residual.mean()
        spectrum = _fft.fft2(_embed(residual), workers=workers)
        for i, z in enumerate(distances):
            h = _transfer_array(2 * height, 2 * width, pitch_x, pitch_y, wavelength, -z)
            back = _fft.ifft2(spectrum * h, workers=workers)[sy, sx]
            out[i] = (back - back.mean()) + r_mean * np.exp(-1j * k0 * z)
        return out
    spectrum = _fft.fft2(residual.astype(np.complex128), workers=workers)
    for i, z in enumerate(distances):
        h = _transfer_array(height, width, pitch_x, pitch_y, wavelength, -z)
        out[i] = _fft.ifft2(spectrum * h, workers=workers)
    return out
