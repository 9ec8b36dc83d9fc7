"""Iterative statistical reconstruction of multi-slice objects.

The estimate minimizes the Poisson negative log-likelihood of the
recorded intensity g under the linear multi-slice forward map

    J(w) = sum_x [ g_hat(x) - g(x) log g_hat(x) ],   g_hat = sum_z Re[P_z w_z]

with a multiplicative gradient step w <- w - |w| grad J that preserves the
scale-free fixed-point structure of expectation-maximization updates, and
an alternating total-variation step with the same multiplicative form.
Both gradients are evaluated at the current iterate; the data step is
applied first, the regularization step to its result:

    w_mle = w - |w| grad J(w)
    w'    = w_mle - |w_mle| tau grad TV(w)

An optional per-pixel upper bound (typically the filtered reference
illumination) is enforced after each update by relaxed clipping:
w > UB  ->  UB + beta (w - UB).

Real mode estimates one real slice per depth (absorbing objects with the
illumination DC folded in); complex mode estimates real and imaginary
parts jointly, each with its own TV term and multiplicative step, and
does not apply the upper bound.

TV is the isotropic sum sum sqrt((d_x w)^2 + (d_y w)^2) with forward
differences and replicated edges; its gradient uses the smoothed
magnitude sqrt(|grad w|^2 + eps^2) and is the exact gradient of the
smoothed functional (forward-difference operator and its exact adjoint).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .forward import Hologram, ObjectStack, OpticalConfig, _check_geometry, _stack_args
from .grid import ComplexGrid2D, RealGrid2D
from .metrics import display_normalize
from .metrics import ssim as _ssim
from .operators import stack_adjoint, stack_forward

logger = logging.getLogger(__name__)

__all__ = [
    "NumericError",
    "ReconParams",
    "ReconTrace",
    "predicted_intensity",
    "nll",
    "nll_gradient_slices",
    "nll_gradient_slices_complex",
    "tv_value",
    "tv_gradient",
    "em_step",
    "alternating_update",
    "apply_upper_bound",
    "reconstruct_real",
    "reconstruct_complex",
]

_INIT_MODES = ("backpropagation", "constant")
_STOP_RULES = ("fixed_iters", "relative_change")


class NumericError(RuntimeError):
    """Iteration produced non-finite values that the safeguard could not fix."""


@dataclass(frozen=True)
class ReconParams:
    """Reconstruction controls.

    tau, tv_epsilon and ratio_floor default to data-dependent values when
    None: tau = 0.002 * mean(g), tv_epsilon = 1e-4 * dynamic range of the
    initial estimate, ratio_floor = 1e-12 * mean(g). upper_bound is a
    scalar or per-pixel bound applied to every slice (real mode only).
    """

    max_iters: int = 100
    tau: float | None = None
    beta: float = 0.5
    tv_epsilon: float | None = None
    ratio_floor: float | None = None
    init_mode: str = "backpropagation"
    stop_rule: str = "fixed_iters"
    stop_delta: float = 1e-6
    upper_bound: float | RealGrid2D | None = None
    pad: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if self.tau is not None and not self.tau >= 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.tv_epsilon is not None and not self.tv_epsilon > 0:
            raise ValueError(f"tv_epsilon must be > 0, got {self.tv_epsilon}")
        if self.ratio_floor is not None and not self.ratio_floor > 0:
            raise ValueError(f"ratio_floor must be > 0, got {self.ratio_floor}")
        if self.init_mode not in _INIT_MODES:
            raise ValueError(f"init_mode must be one of {_INIT_MODES}, got {self.init_mode!r}")
        if self.stop_rule not in _STOP_RULES:
            raise ValueError(f"stop_rule must be one of {_STOP_RULES}, got {self.stop_rule!r}")
        if not self.stop_delta > 0:
            raise ValueError(f"stop_delta must be > 0, got {self.stop_delta}")


@dataclass
class ReconTrace:
    """Per-iteration record of an iterative run.

    Row k describes the state after k updates. ssim entries are None when
    no ground truth was supplied. millis is wall time and is the one field
    exempt from run-to-run reproducibility.
    """

    iterations: list[int] = field(default_factory=list)
    nll: list[float] = field(default_factory=list)
    tv: list[float] = field(default_factory=list)
    ssim: list[float | None] = field(default_factory=list)
    millis: list[float] = field(default_factory=list)
    diverged: bool = False
    stopped_early: bool = False

    COLUMNS = ("iteration", "nll", "tv", "ssim", "millis")

    def append(self, iteration: int, nll: float, tv: float, ssim: float | None, millis: float):
        self.iterations.append(int(iteration))
        self.nll.append(float(nll))
        self.tv.append(float(tv))
        self.ssim.append(None if ssim is None else float(ssim))
        self.millis.append(float(millis))

    def __len__(self) -> int:
        return len(self.iterations)


def _intensity_array(observed) -> np.ndarray:
    if isinstance(observed, Hologram):
        return observed.intensity.data
    if isinstance(observed, RealGrid2D):
        return observed.data
    return np.asarray(observed, dtype=np.float64)


def _auto_floor(g: np.ndarray) -> float:
    mean = float(g.mean())
    return 1e-12 * mean if mean > 0 else np.finfo(np.float64).tiny


def predicted_intensity(stack: ObjectStack, config: OpticalConfig, pad: bool = True) -> RealGrid2D:
    """Forward intensity sum_z Re[P_z w_z] of the current estimate.

    No clamping: values below the ratio floor (or below zero) are returned
    as-is; clamping belongs to the likelihood and gradient evaluation.
    """
    arrs, px, py, lam, zs = _stack_args(stack, config)
    return RealGrid2D(stack_forward(arrs, px, py, lam, zs, pad=pad), px, py)


def nll(observed, predicted, ratio_floor: float | None = None) -> float:
    """Poisson negative log-likelihood sum[g_hat - g log g_hat].

    The predicted intensity is clamped to the ratio floor inside the log
    only. Zero observed counts contribute g_hat alone.
    """
    g = _intensity_array(observed)
    ghat = _intensity_array(predicted)
    if g.shape != ghat.shape:
        raise ValueError(f"shapes differ: {g.shape} vs {ghat.shape}")
    if g.min() < 0:
        raise ValueError("observed intensity must be non-negative")
    floor = _auto_floor(g) if ratio_floor is None else float(ratio_floor)
    return float(np.sum(ghat - xlogy(g, np.maximum(ghat, floor))))


def _ratio_residual(g: np.ndarray, ghat: np.ndarray, floor: float) -> np.ndarray:
    return 1.0 - g / np.maximum(ghat, floor)


def nll_gradient_slices(
    observed, predicted, config: OpticalConfig, pad: bool = True, ratio_floor: float | None = None
) -> list[RealGrid2D]:
    """Per-slice likelihood gradients for real slices.

    grad_z = Re[ P_{-z} (1 - g / g_hat) ], the exact adjoint application of
    the (optionally padded) forward map to the ratio residual. The ratio
    denominator is clamped to the floor.
    """
    g = _intensity_array(observed)
    ghat = _intensity_array(predicted)
    floor = _auto_floor(g) if ratio_floor is None else float(ratio_floor)
    adj = stack_adjoint(
        _ratio_residual(g, ghat, floor),
        config.pitch_x, config.pitch_y, config.wavelength, config.slice_distances, pad=pad,
    )
    return [RealGrid2D(a.real, config.pitch_x, config.pitch_y) for a in adj]


def nll_gradient_slices_complex(
    observed, predicted, config: OpticalConfig, pad: bool = True, ratio_floor: float | None = None
) -> list[ComplexGrid2D]:
    """Per-slice gradients for complex slices, packed as complex grids.

    The real part of each returned grid is the gradient with respect to
    the slice's real part, the imaginary part the gradient with respect
    to its imaginary part: grad_z = P_{-z}(1 - g / g_hat).
    """
    g = _intensity_array(observed)
    ghat = _intensity_array(predicted)
    floor = _auto_floor(g) if ratio_floor is None else float(ratio_floor)
    adj = stack_adjoint(
        _ratio_residual(g, ghat, floor),
        config.pitch_x, config.pitch_y, config.wavelength, config.slice_distances, pad=pad,
    )
    return [ComplexGrid2D(a, config.pitch_x, config.pitch_y) for a in adj]


def _forward_diffs(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dx = np.zeros_like(w)
    dy = np.zeros_like(w)
    dx[:, :-1] = w[:, 1:] - w[:, :-1]
    dy[:-1, :] = w[1:, :] - w[:-1, :]
    return dx, dy


def tv_value(w) -> float:
    """Isotropic total variation with forward differences, replicated edges."""
    arr = w.data if isinstance(w, RealGrid2D) else np.asarray(w, dtype=np.float64)
    dx, dy = _forward_diffs(arr)
    return float(np.sum(np.hypot(dx, dy)))


def _tv_gradient_array(w: np.ndarray, epsilon: float) -> np.ndarray:
    dx, dy = _forward_diffs(w)
    phi = np.sqrt(dx * dx + dy * dy + epsilon * epsilon)
    px = dx / phi
    py = dy / phi
    out = np.zeros_like(w)
    out[:, 1:] += px[:, :-1]
    out[:, :-1] -= px[:, :-1]
    out[1:, :] += py[:-1, :]
    out[:-1, :] -= py[:-1, :]
    return out


def tv_gradient(w, epsilon: float):
    """Exact gradient of the smoothed TV sum sqrt(|grad w|^2 + eps^2).

    This is the negative divergence of the normalized gradient field with
    the adjoint boundary handling of the forward-difference operator, so a
    finite-difference check against the smoothed TV value passes to
    rounding error.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if isinstance(w, RealGrid2D):
        return w.with_data(_tv_gradient_array(w.data, float(epsilon)))
    return _tv_gradient_array(np.asarray(w, dtype=np.float64), float(epsilon))


def _unwrap(value):
    return value.data if isinstance(value, RealGrid2D) else np.asarray(value, dtype=np.float64)


def _rewrap(template, arr: np.ndarray):
    return template.with_data(arr) if isinstance(template, RealGrid2D) else arr


def em_step(w, gradient):
    """One multiplicative update w - |w| * gradient."""
    wa, ga = _unwrap(w), _unwrap(gradient)
    if wa.shape != ga.shape:
        raise ValueError(f"shapes differ: {wa.shape} vs {ga.shape}")
    return _rewrap(w, wa - np.abs(wa) * ga)


def alternating_update(w, nll_gradient, tv_gradient, tau: float):
    """Data step then TV step, both gradients evaluated at the input iterate."""
    if not tau >= 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    wa = _unwrap(w)
    w_mle = wa - np.abs(wa) * _unwrap(nll_gradient)
    return _rewrap(w, w_mle - np.abs(w_mle) * (tau * _unwrap(tv_gradient)))


def apply_upper_bound(w, upper_bound, beta: float):
    """Relaxed clip toward a per-pixel upper bound: w > UB -> UB + beta (w - UB)."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    wa, ub = _unwrap(w), _unwrap(upper_bound)
    return _rewrap(w, np.where(wa > ub, ub + beta * (wa - ub), wa))


def _sign_floor(arr: np.ndarray, floor: float) -> np.ndarray:
    """Push magnitudes below the floor out to +-floor, preserving sign.

    Keeps the multiplicative update away from its fixed point at zero
    without destroying legitimately negative values (backpropagated
    backgrounds are negative wherever cos(k0 z) < 0). Exact zeros go to
    +floor.
    """
    if floor <= 0:
        return arr
    small = np.abs(arr) < floor
    return np.where(small, np.where(arr < 0, -floor, floor), arr)


def _trace_ssim(parts: list[np.ndarray], truth_parts: list[np.ndarray]) -> float:
    vals = [
        _ssim(display_normalize(p), t, peak=1.0) for p, t in zip(parts, truth_parts)
    ]
    return float(np.mean(vals))


def _resolve_common(g: np.ndarray, params: ReconParams):
    tau = 0.002 * float(g.mean()) if params.tau is None else float(params.tau)
    floor = _auto_floor(g) if params.ratio_floor is None else float(params.ratio_floor)
    return tau, floor


def _resolve_epsilon(params: ReconParams, init_parts: list[np.ndarray]) -> float:
    if params.tv_epsilon is not None:
        return float(params.tv_epsilon)
    lo = min(float(p.min()) for p in init_parts)
    hi = max(float(p.max()) for p in init_parts)
    span = hi - lo
    return 1e-4 * span if span > 0 else 1e-4


def _iterate(
    g: np.ndarray,
    config: OpticalConfig,
    params: ReconParams,
    complex_mode: bool,
    truth_parts: list[np.ndarray] | None,
) -> tuple[np.ndarray, ReconTrace]:
    px, py, lam, zs = config.pitch_x, config.pitch_y, config.wavelength, config.slice_distances
    n_slices = len(zs)
    pad = params.pad
    tau, floor = _resolve_common(g, params)

    if params.init_mode == "backpropagation":
        bp = stack_adjoint(g, px, py, lam, zs, pad=pad)
        w_re = bp.real.copy()
        w_im = bp.imag.copy() if complex_mode else None
        w_re = _sign_floor(w_re, 1e-6 * float(np.abs(w_re).mean()))
        if complex_mode:
            w_im = _sign_floor(w_im, 1e-6 * float(np.abs(w_im).mean()))
    else:
        # DC-matched flat start: levels d_z with sum_z cos(k0 z) d_z = mean(g),
        # minimum-norm, so the initial prediction already carries the right DC
        k0 = 2.0 * np.pi / lam
        cosz = np.cos(k0 * np.asarray(zs))
        denom = float(np.sum(cosz**2))
        if denom > np.finfo(np.float64).tiny:
            levels = cosz * float(g.mean()) / denom
        else:
            levels = np.full(n_slices, float(g.mean()) / n_slices)
        w_re = np.broadcast_to(
            levels[:, None, None], (n_slices,) + config.grid_shape
        ).copy()
        w_re = _sign_floor(w_re, 1e-6 * max(float(np.abs(levels).mean()), np.finfo(np.float64).tiny))
        # small nonzero tilt: a zero imaginary part is a multiplicative fixed point
        w_im = np.full_like(w_re, 0.01 * float(np.abs(levels).mean())) if complex_mode else None

    parts = [w_re, w_im] if complex_mode else [w_re]
    eps = _resolve_epsilon(params, parts)

    ub = None
    if params.upper_bound is not None:
        if complex_mode:
            raise ValueError("the upper-bound constraint applies to real mode only")
        if isinstance(params.upper_bound, RealGrid2D):
            _check_geometry(params.upper_bound.shape, params.upper_bound.pitch_x,
                            params.upper_bound.pitch_y, config)
            ub = params.upper_bound.data
        else:
            ub = float(params.upper_bound)

    trace = ReconTrace()
    current = (w_re + 1j * w_im) if complex_mode else w_re
    ghat = stack_forward(current, px, py, lam, zs, pad=pad)
    prev_nll = float(np.sum(ghat - xlogy(g, np.maximum(ghat, floor))))
    consecutive_up = 0

    for k in range(1, params.max_iters + 1):
        t0 = time.perf_counter()
        adj = stack_adjoint(_ratio_residual(g, ghat, floor), px, py, lam, zs, pad=pad)
        d_re = adj.real
        d_im = adj.imag if complex_mode else None
        t_re = np.stack([_tv_gradient_array(s, eps) for s in w_re])
        t_im = np.stack([_tv_gradient_array(s, eps) for s in w_im]) if complex_mode else None

        for attempt in range(5):
            scale = 0.5**attempt
            mle = w_re - np.abs(w_re) * (scale * d_re)
            new_re = mle - np.abs(mle) * (scale * tau * t_re)
            if ub is not None:
                new_re = np.where(new_re > ub, ub + params.beta * (new_re - ub), new_re)
            if complex_mode:
                mle_im = w_im - np.abs(w_im) * (scale * d_im)
                new_im = mle_im - np.abs(mle_im) * (scale * tau * t_im)
            ok = np.isfinite(new_re).all() and (not complex_mode or np.isfinite(new_im).all())
            if ok:
                if attempt:
                    logger.warning("iteration %d: gradient halved %d time(s) to stay finite",
                                   k, attempt)
                break
        else:
            raise NumericError(
                f"iteration {k}: update non-finite after 4 gradient halvings"
            )

        if complex_mode:
            delta = np.sqrt(np.sum((new_re - w_re) ** 2) + np.sum((new_im - w_im) ** 2))
            norm_prev = np.sqrt(np.sum(w_re**2) + np.sum(w_im**2))
            w_re, w_im = new_re, new_im
            current = w_re + 1j * w_im
        else:
            delta = float(np.linalg.norm(new_re - w_re))
            norm_prev = float(np.linalg.norm(w_re))
            w_re = new_re
            current = w_re

        ghat = stack_forward(current, px, py, lam, zs, pad=pad)
        j_val = float(np.sum(ghat - xlogy(g, np.maximum(ghat, floor))))
        tv_now = sum(tv_value(s) for s in w_re)
        if complex_mode:
            tv_now += sum(tv_value(s) for s in w_im)
        ssim_now = None
        if truth_parts is not None:
            est_parts = list(w_re) + (list(w_im) if complex_mode else [])
            ssim_now = _trace_ssim(est_parts, truth_parts)
        trace.append(k, j_val, tv_now, ssim_now, (time.perf_counter() - t0) * 1e3)

        if j_val > prev_nll + 1e-6 * abs(prev_nll):
            consecutive_up += 1
            if consecutive_up >= 5:
                trace.diverged = True
                logger.warning(
                    "objective increased for 5 consecutive iterations "
                    "(iteration %d, nll %.6g); halting", k, j_val,
                )
                break
        else:
            consecutive_up = 0
        prev_nll = j_val

        if params.stop_rule == "relative_change":
            rel = delta / max(norm_prev, np.finfo(np.float64).tiny)
            if rel < params.stop_delta:
                trace.stopped_early = True
                break

    return current, trace


def _truth_parts(ground_truth: ObjectStack | None, complex_mode: bool) -> list[np.ndarray] | None:
    """Normalized per-slice truth images for trace SSIM.

    Both sides of the comparison go through the display stretch, so the
    ground truth may be given either in object units or with the
    illumination DC folded in; any positive-scale affine difference
    drops out.
    """
    if ground_truth is None:
        return None
    parts = [s.data.real for s in ground_truth.slices]
    if complex_mode:
        parts += [s.data.imag for s in ground_truth.slices]
    return [display_normalize(p) for p in parts]


def _recon_config(hologram: Hologram, config: OpticalConfig | None) -> OpticalConfig:
    if config is None:
        return hologram.config
    _check_geometry(hologram.intensity.shape, hologram.intensity.pitch_x,
                    hologram.intensity.pitch_y, config)
    return config


def reconstruct_real(
    hologram: Hologram,
    params: ReconParams | None = None,
    *,
    config: OpticalConfig | None = None,
    ground_truth: ObjectStack | None = None,
) -> tuple[ObjectStack, ReconTrace]:
    """Reconstruct real object slices from a recorded hologram.

    Returns the estimate stack (real_only) and the per-iteration trace.
    When ground_truth is given, the trace records the mean SSIM over
    slices, computed on display-normalized images. Divergence does not
    raise: the run halts and the trace is flagged.
    """
    cfg = _recon_config(hologram, config)
    params = params or ReconParams()
    truth = _truth_parts(ground_truth, complex_mode=False)
    w, trace = _iterate(hologram.intensity.data, cfg, params, complex_mode=False,
                        truth_parts=truth)
    stack = ObjectStack(
        tuple(ComplexGrid2D(s, cfg.pitch_x, cfg.pitch_y) for s in w.astype(np.complex128)),
        real_only=True,
    )
    return stack, trace


def reconstruct_complex(
    hologram: Hologram,
    params: ReconParams | None = None,
    *,
    config: OpticalConfig | None = None,
    ground_truth: ObjectStack | None = None,
) -> tuple[ObjectStack, ReconTrace]:
    """Reconstruct complex object slices (joint real/imaginary estimate).

    The upper-bound constraint is not available in this mode; params
    carrying one raise ValueError.
    """
    cfg = _recon_config(hologram, config)
    params = params or ReconParams()
    truth = _truth_parts(ground_truth, complex_mode=True)
    w, trace = _iterate(hologram.intensity.data, cfg, params, complex_mode=True,
                        truth_parts=truth)
    stack = ObjectStack(tuple(ComplexGrid2D(s, cfg.pitch_x, cfg.pitch_y) for s in w))
    return stack, trace
