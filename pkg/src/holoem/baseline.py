"""Additive gradient-descent comparator with the same TV machinery.

Minimizes the least-squares data term 0.5 ||g - H w||^2 by plain gradient
descent at step 1/L (L from seeded power iteration on H*H), alternated
with a TV gradient step of the same step size, sharing the TV gradient
and trace plumbing of the statistical reconstruction. This is a simple
shrinkage-thresholding-style reference point, not a faithful port of any
published two-step or fast iterative solver; convergence comparisons
against it should be read with that in mind.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .em import ReconTrace, _trace_ssim, _truth_parts, _tv_gradient_array, tv_value
from .forward import Hologram, ObjectStack, OpticalConfig
from .grid import ComplexGrid2D
from .operators import stack_adjoint, stack_forward

logger = logging.getLogger(__name__)

__all__ = ["BaselineParams", "estimate_step_size", "baseline_reconstruct"]


@dataclass(frozen=True)
class BaselineParams:
    """Controls for the additive comparator.

    step_size=None picks 1/L with L estimated by power iteration;
    tau=None mirrors the statistical solver's default 0.002 * mean(g) so
    comparisons are sparsity-matched.
    """

    max_iters: int = 100
    tau: float | None = None
    step_size: float | None = None
    tv_epsilon: float | None = None
    pad: bool = True
    power_iters: int = 20
    power_seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        if self.tau is not None and not self.tau >= 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.tv_epsilon is not None and not self.tv_epsilon > 0:
            raise ValueError(f"tv_epsilon must be > 0, got {self.tv_epsilon}")
        if self.power_iters < 1:
            raise ValueError(f"power_iters must be >= 1, got {self.power_iters}")


def estimate_step_size(config: OpticalConfig, pad: bool = True,
                       n_iters: int = 20, seed: int = 0) -> float:
    """1/L with L the largest eigenvalue of H*H, by seeded power iteration."""
    px, py, lam, zs = config.pitch_x, config.pitch_y, config.wavelength, config.slice_distances
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal((len(zs),) + config.grid_shape)
    v /= np.linalg.norm(v)
    lam_max = 0.0
    for _ in range(n_iters):
        u = stack_adjoint(stack_forward(v, px, py, lam, zs, pad=pad),
                          px, py, lam, zs, pad=pad).real
        lam_max = float(np.linalg.norm(u))
        if lam_max == 0.0:
            raise ValueError("power iteration collapsed to zero; operator is degenerate")
        v = u / lam_max
    return 1.0 / lam_max


def baseline_reconstruct(
    hologram: Hologram,
    params: BaselineParams | None = None,
    *,
    config: OpticalConfig | None = None,
    ground_truth: ObjectStack | None = None,
) -> tuple[ObjectStack, ReconTrace]:
    """Reconstruct real slices by additive least-squares descent with TV.

    Returns (estimate stack, trace). The trace's nll column records the
    least-squares objective 0.5 ||g - H w||^2 for this solver.
    """
    cfg = hologram.config if config is None else config
    params = params or BaselineParams()
    g = hologram.intensity.data
    px, py, lam, zs = cfg.pitch_x, cfg.pitch_y, cfg.wavelength, cfg.slice_distances
    pad = params.pad

    step = params.step_size
    if step is None:
        step = estimate_step_size(cfg, pad=pad, n_iters=params.power_iters,
                                  seed=params.power_seed)
    tau = 0.002 * float(g.mean()) if params.tau is None else float(params.tau)

    w = stack_adjoint(g, px, py, lam, zs, pad=pad).real
    span = float(w.max() - w.min())
    eps = params.tv_epsilon if params.tv_epsilon is not None else (1e-4 * span if span > 0 else 1e-4)

    truth = _truth_parts(ground_truth, complex_mode=False)
    trace = ReconTrace()
    resid = stack_forward(w, px, py, lam, zs, pad=pad) - g
    prev_obj = 0.5 * float(np.sum(resid**2))
    consecutive_up = 0

    for k in range(1, params.max_iters + 1):
        t0 = time.perf_counter()
        grad = stack_adjoint(resid, px, py, lam, zs, pad=pad).real
        t_grad = np.stack([_tv_gradient_array(s, eps) for s in w])
        w = (w - step * grad) - step * tau * t_grad
        resid = stack_forward(w, px, py, lam, zs, pad=pad) - g
        obj = 0.5 * float(np.sum(resid**2))
        tv_now = sum(tv_value(s) for s in w)
        ssim_now = None if truth is None else _trace_ssim(list(w), truth)
        trace.append(k, obj, tv_now, ssim_now, (time.perf_counter() - t0) * 1e3)
        if obj > prev_obj:
            consecutive_up += 1
            if consecutive_up >= 5:
                trace.diverged = True
                logger.warning("baseline objective increased 5 iterations running; halting")
                break
        else:
            consecutive_up = 0
        prev_obj = obj

    stack = ObjectStack(
        tuple(ComplexGrid2D(s, cfg.pitch_x, cfg.pitch_y) for s in w.astype(np.complex128)),
        real_only=True,
    )
    return stack, trace
