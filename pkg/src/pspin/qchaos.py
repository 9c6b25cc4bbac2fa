"""Quantum chaos diagnostics: adjacent-ratio statistics and their normalized
indicator, inverse participation ratios and Floquet-eigenvector localization,
OTOC time series with COE normalization, and the quantum Lyapunov fit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .floquet import (SpectralData, SpinRepresentation, _jy_eigensystem,
                      eigensystem, floquet_operator, parity_blocks,
                      rotation_x_pi_operator, spin_operators)
from .params import ModelParams

__all__ = [
    "R_POISSON", "R_COE", "RatioStatistics", "OtocSeries", "CoeNormalization",
    "QuantumLyapunovFit", "mean_adjacent_ratio", "normalized_gamma", "ipr",
    "floquet_delta", "floquet_gamma", "localization_delta", "otoc_series",
    "coe_sample", "coe_normalization", "fit_quantum_lyapunov",
    "symmetry_resolved_phases",
]

R_POISSON = 2.0 * math.log(2.0) - 1.0   # uncorrelated (Poisson) mean ratio
R_COE = 0.5307                          # circular-orthogonal-ensemble mean ratio

DEGENERACY_TOL = 1e-12
MIN_USABLE_SPACINGS = 10


@dataclass
class RatioStatistics:
    """Mean adjacent spacing ratio of a circular spectrum.

    ratios[j] = min(d_j, d_{j+1}) / max(d_j, d_{j+1}) over the cyclic
    sequence of spacings (the wrap-around spacing included, so one spacing
    per phase); spacings below 1e-12 are excluded and counted.
    """

    r_bar: float
    ratios: np.ndarray
    excluded_degenerate: int


def _circular_spacings(phases: np.ndarray) -> tuple[np.ndarray, int]:
    ph = np.sort(np.asarray(phases, dtype=float))
    d = np.diff(ph)
    wrap = 2.0 * math.pi - (ph[-1] - ph[0])
    d = np.append(d, wrap)
    keep = d >= DEGENERACY_TOL
    return d[keep], int((~keep).sum())


def mean_adjacent_ratio(phases) -> RatioStatistics:
    """Adjacent spacing-ratio statistics of a set of eigenphases.

    Raises ValueError with fewer than 10 usable spacings.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.size < MIN_USABLE_SPACINGS:
        raise ValueError("need at least 10 phases")
    d, excluded = _circular_spacings(phases)
    if d.size < MIN_USABLE_SPACINGS:
        raise ValueError(f"only {d.size} usable spacings after excluding "
                         f"{excluded} degenerate ones")
    r = np.minimum(d, np.roll(d, -1)) / np.maximum(d, np.roll(d, -1))
    return RatioStatistics(r_bar=float(r.mean()), ratios=r,
                           excluded_degenerate=excluded)


def normalized_gamma(r_bar: float) -> float:
    """Affine rescaling of the mean ratio: 0 at the Poisson value, 1 at the
    COE value (values outside [0, 1] are legitimate fluctuations)."""
    return (r_bar - R_POISSON) / (R_COE - R_POISSON)


def ipr(state, reference_basis) -> float:
    """Inverse participation ratio of a normalized state in the columns of
    reference_basis: 1 for a basis vector, dim for the flat superposition."""
    psi = np.asarray(state)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state norm {norm:.12f} deviates from 1 by more than 1e-10")
    amps = np.asarray(reference_basis).conj().T @ psi
    return float(1.0 / (np.abs(amps) ** 4).sum())


def floquet_delta(spectral: SpectralData, rep: SpinRepresentation) -> float:
    """COE-normalized mean localization of eigenvectors in the Jy eigenbasis:
    delta = sum_l IPR_l / ((dim/3) * dim). Equals 3/dim when every
    eigenvector is a Jy eigenstate (nondegenerate zero-kick spectrum) and 1
    for COE-like delocalized vectors without symmetry constraints."""
    _, v = _jy_eigensystem(rep.n_spins)
    amps = v.conj().T @ spectral.vectors
    iprs = 1.0 / (np.abs(amps) ** 4).sum(axis=0)
    d = rep.dim
    return float(iprs.sum() * 3.0 / (d * d))


# ---------------------------------------------------------------------------
# symmetry-resolved spectral statistics
# ---------------------------------------------------------------------------

_HALF_PI_TOL = 1e-12


def _rx_subsectors(block: np.ndarray, basis: np.ndarray,
                   rep: SpinRepresentation) -> list[np.ndarray] | None:
    """Split a parity block by the pi-rotation about x when it commutes
    (integer j at alpha = pi/2); returns None when it does not commute."""
    rx = basis.conj().T @ rotation_x_pi_operator(rep) @ basis
    if np.abs(rx @ block - block @ rx).max() > 1e-8:
        return None
    # rx restricted to a commuting sector is a Hermitian involution (+-1)
    w, v = np.linalg.eigh((rx + rx.conj().T) / 2.0)
    out = []
    for sign in (-1.0, 1.0):
        sub = v[:, np.abs(w - sign) < 0.5]
        if sub.shape[1]:
            out.append(sub.conj().T @ block @ sub)
    return out


def symmetry_resolved_phases(params: ModelParams,
                             rep: SpinRepresentation) -> list[np.ndarray]:
    """Eigenphase lists of the Floquet unitary, one per resolved symmetry
    sector.

    Odd p has no unitary symmetry: one list with the full spectrum. Even p
    is split into the two parity sectors; at alpha = pi/2 with integer total
    spin the parity-even sector additionally commutes with the pi-rotation
    about x and is split once more (in the parity-odd sector that rotation
    anticommutes with the unitary, which pairs phases mu <-> mu + pi and
    leaves the spacing statistics unbiased).
    """
    u = floquet_operator(params, rep)
    if params.p % 2 == 1:
        return [eigensystem(u).phases]
    blocks = parity_blocks(u)
    matrices: list[np.ndarray] = []
    at_half_pi = abs(params.alpha - math.pi / 2.0) < _HALF_PI_TOL
    for block, basis in ((blocks.symmetric, blocks.symmetric_basis),
                         (blocks.antisymmetric, blocks.antisymmetric_basis)):
        subs = _rx_subsectors(block, basis, rep) if at_half_pi else None
        if subs:
            matrices.extend(subs)
        else:
            matrices.append(block)
    return [eigensystem(b).phases for b in matrices]


def floquet_gamma(params: ModelParams, rep: SpinRepresentation) -> tuple[RatioStatistics, float]:
    """Normalized adjacent-ratio indicator of the Floquet spectrum with all
    unitary symmetries resolved; the per-sector ratio samples are pooled
    before averaging."""
    ratios = []
    excluded = 0
    for phases in symmetry_resolved_phases(params, rep):
        stats = mean_adjacent_ratio(phases)
        ratios.append(stats.ratios)
        excluded += stats.excluded_degenerate
    pooled = np.concatenate(ratios)
    stats = RatioStatistics(r_bar=float(pooled.mean()), ratios=pooled,
                            excluded_degenerate=excluded)
    return stats, normalized_gamma(stats.r_bar)


def localization_delta(params: ModelParams, rep: SpinRepresentation) -> float:
    """Eigenvector localization indicator with the parity symmetry resolved.

    Odd p: delta of the full spectrum in the Jy basis. Even p: the parity
    sectors are diagonalized separately, each eigenvector's IPR is taken in
    its sector of the Jy basis, and the COE reference is applied per sector
    (a parity-confined delocalized vector can only reach a sector-sized IPR,
    so the full-basis normalization would saturate at 1/2).
    """
    u = floquet_operator(params, rep)
    if params.p % 2 == 1:
        return floquet_delta(eigensystem(u), rep)
    blocks = parity_blocks(u)
    total = 0.0
    norm = 0.0
    for block in (blocks.symmetric, blocks.antisymmetric):
        vecs = eigensystem(block).vectors  # already in the sector Jy basis
        iprs = 1.0 / (np.abs(vecs) ** 4).sum(axis=0)
        d_s = block.shape[0]
        total += iprs.sum()
        norm += d_s * d_s / 3.0
    return float(total / norm)


# ---------------------------------------------------------------------------
# OTOC
# ---------------------------------------------------------------------------


@dataclass
class OtocSeries:
    """Infinite-temperature square-commutator series C(n) for kick counts
    n = 0..n_max, with the COE normalization level."""

    n: np.ndarray
    c: np.ndarray
    c_coe: float
    params: ModelParams
    rep: SpinRepresentation


def _square_commutator(v_op: np.ndarray, w_evolved: np.ndarray, dim: int) -> float:
    """C = (2/dim) (tr(V^2 W^2) - Re tr(V W V W)) for Hermitian V, W."""
    vw = v_op @ w_evolved
    c = (2.0 / dim) * (np.trace(vw @ w_evolved @ v_op).real
                       - np.trace(vw @ vw).real)
    return float(c)


def otoc_series(params: ModelParams, rep: SpinRepresentation, n_max: int,
                v_op: np.ndarray | None = None, w_op: np.ndarray | None = None,
                coe_samples: int = 20, rng_seed: int = 0) -> OtocSeries:
    """Square-commutator growth C(n) between V and the Heisenberg-evolved W
    at infinite temperature (both default to Jz, commuting at n = 0), with
    the COE saturation level attached."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if v_op is None or w_op is None:
        _, _, jz = spin_operators(rep)
        if v_op is None:
            v_op = jz
        if w_op is None:
            w_op = jz
    u = floquet_operator(params, rep).matrix
    uh = u.conj().T
    w = np.array(w_op, dtype=complex)
    c = np.zeros(n_max + 1)
    c[0] = _square_commutator(v_op, w, rep.dim)
    for n in range(1, n_max + 1):
        w = uh @ w @ u
        w = (w + w.conj().T) / 2.0
        c[n] = _square_commutator(v_op, w, rep.dim)
    norm = coe_normalization(rep, coe_samples, rng_seed, v_op=v_op, w_op=w_op)
    return OtocSeries(n=np.arange(n_max + 1), c=c, c_coe=norm.c_coe,
                      params=params, rep=rep)


def coe_sample(dim: int, rng_seed) -> np.ndarray:
    """A circular-orthogonal-ensemble matrix (symmetric unitary), built as
    Q Q^T from a Haar unitary Q (QR of a complex Ginibre matrix with the
    R-diagonal phases absorbed); deterministic per seed."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = np.random.default_rng(rng_seed)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    q = q * (diag / np.abs(diag))
    return q @ q.T


@dataclass(frozen=True)
class CoeNormalization:
    """COE reference values: the ensemble mean of C(1) (the saturation scale
    of the square commutator under a random time step), the analytic mean
    eigenvector IPR dim/3, and the sampled mean IPR for cross-checking."""

    c_coe: float
    delta_coe: float
    mean_ipr_sampled: float
    n_samples: int


def coe_normalization(rep: SpinRepresentation, n_samples: int, rng_seed,
                      v_op: np.ndarray | None = None,
                      w_op: np.ndarray | None = None,
                      sample_ipr: bool = False) -> CoeNormalization:
    """Ensemble mean of the one-step square commutator with COE time steps;
    optionally also samples the mean eigenvector IPR (computational basis)
    to cross-check the dim/3 reference."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if v_op is None or w_op is None:
        _, _, jz = spin_operators(rep)
        if v_op is None:
            v_op = jz
        if w_op is None:
            w_op = jz
    rng = np.random.default_rng(rng_seed)
    dim = rep.dim
    c_vals = []
    ipr_vals = []
    for _ in range(n_samples):
        u = coe_sample(dim, rng)
        w1 = u.conj().T @ w_op @ u
        w1 = (w1 + w1.conj().T) / 2.0
        c_vals.append(_square_commutator(v_op, w1, dim))
        if sample_ipr:
            vecs = eigensystem(u).vectors
            ipr_vals.append(float((1.0 / (np.abs(vecs) ** 4).sum(axis=0)).mean()))
    mean_ipr = float(np.mean(ipr_vals)) if ipr_vals else math.nan
    return CoeNormalization(c_coe=float(np.mean(c_vals)), delta_coe=dim / 3.0,
                            mean_ipr_sampled=mean_ipr, n_samples=n_samples)


@dataclass(frozen=True)
class QuantumLyapunovFit:
    """Exponential growth rate of the square commutator: the least-squares
    slope of ln C(n) over the window [n_lo, n_hi]."""

    lam_q: float
    n_lo: int
    n_hi: int
    residual: float


def fit_quantum_lyapunov(series: OtocSeries, floor_mult: float = 100.0,
                         f_lo: float = 0.01, f_hi: float = 0.3,
                         stationarity_min: float = 0.55) -> QuantumLyapunovFit | None:
    """Extract the quantum Lyapunov exponent from the exponential section of
    an OTOC series, or return None (no-window) for non-chaotic series.

    The fit window is the approach to scrambling saturation: kicks where
    C is inside [f_lo, f_hi] * C_COE. A window is accepted only when (i) the
    series grows at least floor_mult times above its first nonzero value,
    (ii) it actually enters the window, (iii) it has >= 4 points, and (iv)
    the growth rate is stationary: the mean log-slope over the last quarter
    of the pre-window rise is at least stationarity_min times the mean over
    the first quarter (exponential growth has a constant rate; the algebraic
    growth of regular shearing decays and is rejected here).
    """
    c = series.c
    positive = np.nonzero(c > 0.0)[0]
    if positive.size == 0:
        return None
    c_floor = c[positive[0]]
    if c.max() < floor_mult * c_floor:
        return None
    lo_level = f_lo * series.c_coe
    hi_level = f_hi * series.c_coe
    inside = np.nonzero((c >= lo_level) & (c <= hi_level))[0]
    inside = inside[inside >= 1]
    if inside.size == 0:
        return None
    # the window is the first contiguous in-band run (plateau fluctuations
    # that dip back into the band are not part of the growth section)
    n_lo = int(inside.min())
    n_hi = n_lo
    while n_hi + 1 < c.size and lo_level <= c[n_hi + 1] <= hi_level:
        n_hi += 1
    if n_hi - n_lo + 1 < 4:
        return None
    # stationarity gate over the rise up to the window entry
    rise = np.log(np.maximum(c[positive[0]:n_lo + 1], 1e-300))
    slopes = np.diff(rise)
    if slopes.size >= 8:
        q = max(slopes.size // 4, 2)
        early = float(np.mean(slopes[:q]))
        late = float(np.mean(slopes[-q:]))
        if early > 0.0 and late < stationarity_min * early:
            return None
    ns = np.arange(n_lo, n_hi + 1)
    window = c[n_lo:n_hi + 1]
    if np.any(window <= 0.0):
        return None
    coeffs, residuals, *_ = np.polyfit(ns, np.log(window), 1, full=True)
    rms = math.sqrt(residuals[0] / ns.size) if residuals.size else 0.0
    return QuantumLyapunovFit(lam_q=float(coeffs[0]), n_lo=n_lo, n_hi=n_hi,
                              residual=rms)
