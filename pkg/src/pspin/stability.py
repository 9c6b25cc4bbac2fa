"""Fixed points, stability classification, and local bifurcation analysis
for the classical kicked p-spin map."""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from math import gcd

import numpy as np

from .classical import step, tangent_map, unit_vector
from .params import ModelParams

__all__ = [
    "StabilityKind", "StabilityClass", "FixedPointRecord", "LocalMap2D",
    "classify_fixed_point", "find_fixed_points", "onset_of_new_fixed_points",
    "equator_orbit_eigenvalues", "pole_bifurcation_alphas", "pole_local_map",
    "bifurcated_orbit_positions", "equator_orbit_local_trace",
]

log = logging.getLogger(__name__)

FIXED_POINT_TOL = 1e-9
PARABOLIC_TOL = 1e-9
RESONANCE_PHASE_TOL = 1e-6
RESONANCE_L_MAX = 12


class StabilityKind(Enum):
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"
    INVERSION_HYPERBOLIC = "inversion_hyperbolic"
    PARABOLIC = "parabolic"


@dataclass(frozen=True)
class StabilityClass:
    """Stability of a fixed point from the trace of the on-sphere 2x2 block.

    eccentricity = |trace|/2; resonance is the order l when the elliptic
    eigenvalue phase is (numerically) a fraction 2*pi*q/l with q, l coprime
    and l <= 12.
    """

    kind: StabilityKind
    trace: float
    eccentricity: float
    resonance: int | None = None


@dataclass(frozen=True)
class FixedPointRecord:
    point: np.ndarray
    stability: StabilityClass
    block_eigenvalues: tuple[complex, complex]


def _block_trace(point, params: ModelParams) -> float:
    # one eigenvalue of the full Jacobian is 1; the on-sphere block trace
    # is therefore tr(M) - 1
    return float(np.trace(tangent_map(point, params))) - 1.0


def _block_eigenvalues(trace: float) -> tuple[complex, complex]:
    disc = trace * trace - 4.0
    root = cmath.sqrt(disc)
    return ((trace - root) / 2.0, (trace + root) / 2.0)


def _detect_resonance(trace: float) -> int | None:
    theta = math.acos(max(-1.0, min(1.0, trace / 2.0)))
    for ell in range(3, RESONANCE_L_MAX + 1):
        for q in range(1, ell // 2 + 1):
            if gcd(q, ell) != 1:
                continue
            if abs(theta - 2.0 * math.pi * q / ell) < RESONANCE_PHASE_TOL:
                return ell
    return None


def classify_fixed_point(point, params: ModelParams) -> StabilityClass:
    """Classify a fixed point of the map by its tangent-block trace.

    Raises ValueError when `point` is not a fixed point to within 1e-9.
    """
    v = unit_vector(point)
    residual = np.abs(step(v, params) - v).max()
    if residual >= FIXED_POINT_TOL:
        raise ValueError(
            f"not a fixed point: |F(x) - x| = {residual:.3e} >= {FIXED_POINT_TOL:g}")
    trace = _block_trace(v, params)
    ecc = abs(trace) / 2.0
    if abs(abs(trace) - 2.0) < PARABOLIC_TOL:
        kind = StabilityKind.PARABOLIC
        resonance = None
    elif trace > 2.0:
        kind = StabilityKind.HYPERBOLIC
        resonance = None
    elif trace < -2.0:
        kind = StabilityKind.INVERSION_HYPERBOLIC
        resonance = None
    else:
        kind = StabilityKind.ELLIPTIC
        resonance = _detect_resonance(trace)
    return StabilityClass(kind=kind, trace=trace, eccentricity=ecc,
                          resonance=resonance)


def _fixed_point_function(z, p: int, k: float, alpha: float):
    """Scalar function whose roots (in the Z coordinate) locate the
    off-pole fixed points; written with sin/cos to stay finite where the
    cotangent of the half twist angle diverges."""
    w = 0.5 * k * z ** (p - 1)
    t2 = math.tan(alpha / 2.0) ** 2
    csc2 = 1.0 / math.sin(alpha / 2.0) ** 2
    sw2 = np.sin(w) ** 2
    cw2 = np.cos(w) ** 2
    return z * z - sw2 / (cw2 * t2 + sw2 * csc2)


def _bisect_root(f, a, b, fa, fb, tol=1e-12, max_iter=200):
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm <= 0.0:
            b, fb = m, fm
        else:
            a, fa = m, fm
        if b - a < tol:
            break
    return 0.5 * (a + b)


def _record_for_point(v, params: ModelParams) -> FixedPointRecord:
    stab = classify_fixed_point(v, params)
    return FixedPointRecord(point=v, stability=stab,
                            block_eigenvalues=_block_eigenvalues(stab.trace))


def find_fixed_points(params: ModelParams, grid_resolution: int = 2000) -> list[FixedPointRecord]:
    """Locate all fixed points: the poles plus the roots of the off-pole
    fixed-point condition, found by sign-change bracketing on a uniform grid
    over Z in [-1, 1] refined by bisection.

    Roots whose reconstructed point leaves the unit sphere (or fails the
    fixed-point residual check) are reported via the module logger and
    dropped.
    """
    if grid_resolution < 100:
        raise ValueError("grid_resolution must be >= 100")
    p, k, alpha = params.p, params.k, params.alpha

    def f(z):
        return _fixed_point_function(z, p, k, alpha)

    records = [_record_for_point(np.array([0.0, 1.0, 0.0]), params),
               _record_for_point(np.array([0.0, -1.0, 0.0]), params)]

    zs = np.linspace(-1.0, 1.0, grid_resolution + 1)
    fs = _fixed_point_function(zs, p, k, alpha)
    roots = []
    for i in range(grid_resolution):
        fa, fb = fs[i], fs[i + 1]
        if fa == 0.0:
            roots.append(zs[i])
        elif fa * fb < 0.0:
            roots.append(_bisect_root(f, zs[i], zs[i + 1], fa, fb))
    if fs[-1] == 0.0:
        roots.append(zs[-1])

    half_angle = alpha / 2.0
    cot_half = math.cos(half_angle) / math.sin(half_angle)
    seen = {(0, 1_000_000_000, 0), (0, -1_000_000_000, 0)}
    for z in roots:
        if abs(z) < 1e-9:
            continue  # pole root, already included
        x = -cot_half * z
        y2 = 1.0 - x * x - z * z
        if not math.isfinite(x) or y2 < -FIXED_POINT_TOL:
            log.warning("spurious fixed-point root Z=%.6g (off the unit sphere)", z)
            continue
        y2 = max(y2, 0.0)
        found = False
        for y in (math.sqrt(y2), -math.sqrt(y2)):
            v = unit_vector(np.array([x, y, z]))
            if np.abs(step(v, params) - v).max() < FIXED_POINT_TOL:
                key = tuple(int(round(c * 1e9)) for c in v)
                if key not in seen:
                    seen.add(key)
                    records.append(_record_for_point(v, params))
                found = True
        if not found:
            log.warning("spurious fixed-point root Z=%.6g "
                        "(reconstruction fails the residual check)", z)
    return records


def _has_nontrivial_root(p: int, k: float, alpha: float,
                         n_grid: int = 4000, z_min: float = 1e-3) -> bool:
    """True when the fixed-point condition becomes negative somewhere away
    from Z = 0 (it is >= 0 at the endpoints, so negativity implies roots)."""
    for lo, hi in ((z_min, 1.0), (-1.0, -z_min)):
        zs = np.linspace(lo, hi, n_grid)
        if np.min(_fixed_point_function(zs, p, k, alpha)) < 0.0:
            return True
    return False


def onset_of_new_fixed_points(p: int, alpha: float, k_max: float = 50.0,
                              tol: float = 1e-3) -> float | None:
    """Smallest kick strength at which off-pole fixed points exist, located
    by bisection in k; None when no onset is found below k_max."""
    if p < 2:
        raise ValueError("p must be >= 2")
    coarse = 0.25
    k_prev = 0.0
    k_found = None
    k = coarse
    while k <= k_max + 1e-12:
        if _has_nontrivial_root(p, k, alpha):
            k_found = k
            break
        k_prev = k
        k += coarse
    if k_found is None:
        return None
    lo, hi = k_prev, k_found
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _has_nontrivial_root(p, mid, alpha):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


_EQUATOR_ORBIT = (np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, -1.0]),
                  np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))


def equator_orbit_eigenvalues(k: float, p: int) -> tuple[complex, complex]:
    """Nontrivial multiplier pair of the period-4 equator orbit at
    alpha = pi/2.

    Odd p: both 1 (parabolic for every k). Even p > 2: exp(-+ 2ik). For
    p = 2 the pair is computed from the on-sphere block of the numerically
    multiplied four-step tangent map (the stability boundary is
    (2 cos k + k sin k)^2 = 4, first crossed at k = pi).
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if p == 2:
        block = _equator_orbit_block(k, p)
        ev = np.linalg.eigvals(block)
        order = np.argsort(ev.imag, kind="stable")
        return (complex(ev[order[0]]), complex(ev[order[1]]))
    if p % 2 == 1:
        return (1.0 + 0.0j, 1.0 + 0.0j)
    return (cmath.exp(-2.0j * k), cmath.exp(2.0j * k))


def _equator_orbit_block(k: float, p: int) -> np.ndarray:
    """On-sphere 2x2 block of the four-step tangent map at (1, 0, 0),
    in the tangent basis {e_y, e_z}."""
    params = ModelParams(p=p, k=k, alpha=math.pi / 2.0)
    m = np.eye(3)
    v = _EQUATOR_ORBIT[0]
    for _ in range(4):
        m = tangent_map(v, params) @ m
        v = step(v, params)
    e_y = np.array([0.0, 1.0, 0.0])
    e_z = np.array([0.0, 0.0, 1.0])
    return np.array([[e_y @ m @ e_y, e_y @ m @ e_z],
                     [e_z @ m @ e_y, e_z @ m @ e_z]])


def pole_bifurcation_alphas(l_max: int) -> list[tuple[int, int, float]]:
    """All (q, l, alpha_b) with alpha_b = 2*pi*q/l in (0, pi], q < l coprime,
    3 <= l <= l_max: the precession angles at which the pole multipliers
    e^{+-i alpha} pass through l-th roots of unity (p > 2 models)."""
    if l_max < 3:
        raise ValueError("l_max must be >= 3")
    out = []
    for ell in range(3, l_max + 1):
        for q in range(1, ell):
            if gcd(q, ell) != 1:
                continue
            alpha_b = 2.0 * math.pi * q / ell
            if alpha_b <= math.pi + 1e-15:
                out.append((q, ell, alpha_b))
    out.sort(key=lambda t: (t[2], t[1]))
    return out


@dataclass(frozen=True)
class LocalMap2D:
    """Polynomial area-preserving map for the dynamics near a pole, in the
    local transverse coordinates (dx, dz):

        dx' = sin(a) dz + cos(a) (dx - k_eff dz^(p-1))
        dz' = cos(a) dz - sin(a) (dx - k_eff dz^(p-1))

    The Jacobian determinant is identically 1; the polynomial degree in dz
    is p - 1.
    """

    p: int
    k_eff: float
    alpha: float

    @property
    def degree(self) -> int:
        return self.p - 1

    def __call__(self, dx: float, dz: float) -> tuple[float, float]:
        ca, sa = math.cos(self.alpha), math.sin(self.alpha)
        u = dx - self.k_eff * dz ** (self.p - 1)
        return (sa * dz + ca * u, ca * dz - sa * u)

    def jacobian(self, dx: float, dz: float) -> np.ndarray:
        ca, sa = math.cos(self.alpha), math.sin(self.alpha)
        dpoly = self.k_eff * (self.p - 1) * dz ** (self.p - 2)
        return np.array([[ca, sa - ca * dpoly],
                         [-sa, ca + sa * dpoly]])


def pole_local_map(params: ModelParams, pole: int = 1) -> LocalMap2D:
    """Local transverse map at the chosen pole (pole = +1 north, -1 south).

    For even p the south pole obeys the north-pole map with k -> -k; for odd
    p both poles share the same map.
    """
    if pole not in (1, -1):
        raise ValueError("pole must be +1 (north) or -1 (south)")
    k_eff = params.k
    if pole == -1 and params.p % 2 == 0:
        k_eff = -params.k
    return LocalMap2D(p=params.p, k_eff=k_eff, alpha=params.alpha)


def bifurcated_orbit_positions(p: int, k: float, gamma: float) -> tuple[float, float] | None:
    """Leading-order position (dx, dz) of the period-4 orbit shed by a pole
    at precession angle pi/2 + gamma.

    Returns None when the root is not real (even p with the bifurcation on
    the other side of gamma = 0).
    """
    if p < 3:
        raise ValueError("the local bifurcation expansion requires p >= 3")
    if k <= 0:
        raise ValueError("k must be > 0")
    radicand = (4.0 * gamma + 9.0 * gamma ** 3) / k
    root_order = p - 2
    if root_order % 2 == 0:
        if radicand < 0.0:
            return None
        dz = radicand ** (1.0 / root_order)
    else:
        dz = math.copysign(abs(radicand) ** (1.0 / root_order), radicand)
    dx = gamma * k * dz ** (p - 1) - 1.5 * gamma ** 2 * dz
    return (dx, dz)


def equator_orbit_local_trace(p: int, k: float, gamma: float) -> float:
    """Trace of the local four-step map along the equator orbit for odd p at
    precession angle pi/2 + gamma; always >= 2 (the orbit is never elliptic),
    equal to 2 * (1 + cos(k)^4 / 8) at gamma = 0."""
    if p % 2 == 0:
        raise ValueError("the local-trace expansion applies to odd p only; "
                         "even p has the elliptic multiplier pair exp(-+2ik)")
    g2 = gamma * gamma
    inner = 2.0 * g2 - (1.0 - 2.0 * g2) * (1.0 - g2) * math.cos(k) ** 2
    return 2.0 * (1.0 + inner * inner / 8.0)
