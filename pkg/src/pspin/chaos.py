"""Chaos diagnostics for the classical map: largest Lyapunov exponent
(numerical and strong-kick analytic estimate), finite-time exponent fields,
chaotic-sea area from recurrence times, and phase-portrait similarity."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .classical import unit_vector
from .params import ModelParams

__all__ = [
    "LyapunovResult", "AnalyticLyapunov", "AreaResult", "SimilarityResult",
    "lyapunov_qr", "lyapunov_analytic", "local_lyapunov_field",
    "fibonacci_sphere", "chaotic_area", "phase_space_similarity",
    "max_lyapunov_over_seeds",
]

DEFAULT_TRANSIENT = 1000
CONVERGENCE_TOL = 1e-3
N_HISTORY = 100


@dataclass
class LyapunovResult:
    """Largest Lyapunov exponent of one orbit (per-step log stretch rate).

    `history` holds running means at evenly spaced checkpoints;
    `converged` is False when the estimates over the last decade of steps
    (from n_steps/10 onward) vary by more than 1e-3.
    """

    value: float
    n_steps: int
    transient_discarded: int
    seed_point: np.ndarray
    history: np.ndarray
    converged: bool


def lyapunov_qr(params: ModelParams, seed_point, n_steps: int,
                n_transient: int = DEFAULT_TRANSIENT) -> LyapunovResult:
    """Largest Lyapunov exponent via per-step QR re-orthonormalization of the
    tangent frame, accumulating log R11 after an initial transient.

    Deterministic for a given seed point; n_steps >= 1e4 is recommended for
    converged asymptotic values.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if n_transient < 0:
        raise ValueError("n_transient must be >= 0")
    v = unit_vector(seed_point)
    history = np.zeros(min(N_HISTORY, n_steps))
    value = _kernels.lyapunov_qr_accum(v[0], v[1], v[2], params.p, params.k,
                                       params.alpha, n_steps, n_transient,
                                       history)
    # convergence flag from the checkpoints in the last decade of steps
    tail = history[history.shape[0] // 10:]
    converged = bool(tail.size == 0 or (tail.max() - tail.min()) <= CONVERGENCE_TOL)
    return LyapunovResult(value=float(value), n_steps=n_steps,
                          transient_discarded=n_transient, seed_point=v,
                          history=history, converged=converged)


@dataclass(frozen=True)
class AnalyticLyapunov:
    """Strong-kick estimate of the largest exponent; `valid` is False where
    the formula is nonpositive (small k or precession angle at a multiple of
    pi), in which case value is 0."""

    value: float
    valid: bool


def lyapunov_analytic(params: ModelParams) -> AnalyticLyapunov:
    """ln[(p-1) sin(alpha) k] - (p-1), the sphere-averaged log of the
    dominant tangent stretch, valid deep in the chaotic regime."""
    arg = (params.p - 1) * math.sin(params.alpha) * params.k
    if arg <= 0.0:
        return AnalyticLyapunov(0.0, False)
    value = math.log(arg) - (params.p - 1)
    if value <= 0.0:
        return AnalyticLyapunov(0.0, False)
    return AnalyticLyapunov(value, True)


def local_lyapunov_field(params: ModelParams, points, n_steps: int) -> np.ndarray:
    """Finite-time largest-exponent estimate for each initial condition
    (same QR accumulation as lyapunov_qr, no transient discard)."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return _kernels.lyapunov_field(np.ascontiguousarray(pts), params.p,
                                   params.k, params.alpha, n_steps, 0)


_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def fibonacci_sphere(n_tot: int) -> np.ndarray:
    """n_tot approximately uniform, deterministic points on the unit sphere
    (golden-angle spiral; the y-coordinate is the uniformly spaced one, so
    the spiral winds around the precession axis)."""
    if n_tot < 1:
        raise ValueError("n_tot must be >= 1")
    i = np.arange(n_tot)
    y = 1.0 - 2.0 * (i + 0.5) / n_tot
    r = np.sqrt(1.0 - y * y)
    phi = i * _GOLDEN_ANGLE
    return np.stack([r * np.cos(phi), y, r * np.sin(phi)], axis=1)


@dataclass
class AreaResult:
    """Chaotic-sea area estimate from recurrence times.

    a_ch = 4*pi * n_escaped / n_tot, where n_escaped is the mean (over the
    t_max list) number of initial conditions that never re-enter the
    d_min-ball around their start within t_max steps. n_escaped is fractional
    because of the t_max averaging. recurrence_times[i] is the first return
    time of initial condition i (max(t_max) + 1 when it never returns).
    """

    a_ch: float
    n_escaped: float
    n_tot: int
    d_min: float
    t_max_list: tuple[int, ...]
    recurrence_times: np.ndarray = field(repr=False)

    @property
    def a_reg(self) -> float:
        return 4.0 * math.pi - self.a_ch


def chaotic_area(params: ModelParams, n_tot: int, d_min: float,
                 t_max_list) -> AreaResult:
    """Estimate the chaotic-sea area by counting non-recurrent initial
    conditions on a Fibonacci-sphere grid.

    An initial condition escapes for a given t_max when its orbit never
    re-enters the chord-distance ball of radius d_min around the start
    within t_max steps; the escape count is averaged over t_max_list.
    """
    if n_tot < 1:
        raise ValueError("n_tot must be >= 1")
    if d_min <= 0:
        raise ValueError("d_min must be > 0")
    t_list = tuple(int(t) for t in t_max_list)
    if not t_list or any(t < 1 for t in t_list):
        raise ValueError("t_max_list must be a nonempty list of positive ints")
    pts = fibonacci_sphere(n_tot)
    t_rec = _kernels.recurrence_times(pts, params.p, params.k, params.alpha,
                                      max(t_list), d_min)
    n_escaped = float(np.mean([(t_rec > t).sum() for t in t_list]))
    a_ch = 4.0 * math.pi * n_escaped / n_tot
    return AreaResult(a_ch=a_ch, n_escaped=n_escaped, n_tot=n_tot,
                      d_min=d_min, t_max_list=t_list,
                      recurrence_times=t_rec)


@dataclass
class SimilarityResult:
    """Averaged phase-portrait similarity between two nearby parameter sets.

    s_bar is the mean over initial conditions of the product of the three
    per-component Pearson correlations between the paired trajectories;
    initial conditions with zero variance in any component (exact fixed
    points) are excluded and counted in n_excluded.
    """

    s_bar: float
    n_tot: int
    n_excluded: int
    n_kicks: int
    params: ModelParams
    params_perturbed: ModelParams
    values: np.ndarray = field(repr=False)


def phase_space_similarity(params: ModelParams, d_alpha: float, d_k: float,
                           n_tot: int, n_kicks: int) -> SimilarityResult:
    """Compare the phase portraits at (k, alpha) and (k + d_k, alpha +
    d_alpha) from the same Fibonacci-sphere initial conditions, iterating
    n_kicks steps per trajectory."""
    if n_tot < 1:
        raise ValueError("n_tot must be >= 1")
    if n_kicks < 2:
        raise ValueError("n_kicks must be >= 2")
    perturbed = ModelParams(p=params.p, k=params.k + d_k,
                            alpha=params.alpha + d_alpha)
    pts = fibonacci_sphere(n_tot)
    vals = _kernels.similarity_per_point(pts, params.p, params.k, params.alpha,
                                         perturbed.k, perturbed.alpha, n_kicks)
    n_excluded = int(np.isnan(vals).sum())
    s_bar = float(np.nanmean(vals)) if n_excluded < n_tot else math.nan
    return SimilarityResult(s_bar=s_bar, n_tot=n_tot, n_excluded=n_excluded,
                            n_kicks=n_kicks, params=params,
                            params_perturbed=perturbed, values=vals)


def max_lyapunov_over_seeds(params: ModelParams, n_steps: int,
                            n_transient: int = DEFAULT_TRANSIENT,
                            n_seeds: int = 8) -> float:
    """Largest exponent over a deterministic set of Fibonacci-sphere seeds.

    A single seed can land inside a regular island and under-report; taking
    the maximum over a small seed set is the scan policy for exponent maps.
    """
    seeds = fibonacci_sphere(n_seeds)
    return max(lyapunov_qr(params, s, n_steps, n_transient).value
               for s in seeds)
