"""Classical kicked p-spin map on the unit sphere.

One period consists of a rotation by alpha about the y-axis followed by a
twist about the z-axis whose angle is k * Z^(p-1) evaluated at the rotated
point. All operations act on Cartesian unit vectors (x, y, z) and accept
arrays of shape (..., 3).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .params import ModelParams

__all__ = [
    "ModelParams", "Trajectory", "GreatCircle",
    "unit_vector", "step", "inverse_step", "tangent_map", "trajectory",
    "involution_t", "involution_t_tilde", "rotation_y_pi", "rotation_x_pi",
    "symmetry_curves",
]


def unit_vector(v) -> np.ndarray:
    """Return v normalized to unit length (over the last axis)."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def step(point, params: ModelParams, renormalize: bool = True) -> np.ndarray:
    """Advance a phase point by one kick period.

    The raw image is norm-preserving up to rounding; with renormalize=True
    (the default policy) the result is rescaled to unit length so that drift
    stays bounded over arbitrarily long orbits.
    """
    v = np.asarray(point, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    xr = ca * x + sa * z
    zr = -sa * x + ca * z
    phi = params.k * zr ** (params.p - 1)
    c, s = np.cos(phi), np.sin(phi)
    out = np.stack([c * xr - s * y, s * xr + c * y, zr], axis=-1)
    return unit_vector(out) if renormalize else out


def inverse_step(point, params: ModelParams, renormalize: bool = True) -> np.ndarray:
    """Undo one kick period: untwist about z, then rotate by -alpha about y."""
    v = np.asarray(point, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    phi = params.k * z ** (params.p - 1)
    c, s = np.cos(phi), np.sin(phi)
    xu = c * x + s * y
    yu = -s * x + c * y
    out = np.stack([ca * xu - sa * z, yu, sa * xu + ca * z], axis=-1)
    return unit_vector(out) if renormalize else out


def tangent_map(point, params: ModelParams) -> np.ndarray:
    """Jacobian of the forward map at `point`.

    Composition of the twist Jacobian (evaluated at the rotated point) with
    the y-rotation; det = 1 and the on-sphere 2x2 block carries the
    stability information. The twist-angle derivative uses
    (p-1) * k * Z^(p-2), with Z^0 = 1 at p = 2.
    """
    v = np.asarray(point, dtype=float)
    if v.shape != (3,):
        raise ValueError("tangent_map expects a single 3-vector")
    x, y, z = v
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    xr = ca * x + sa * z
    zr = -sa * x + ca * z
    phi = params.k * zr ** (params.p - 1)
    c, s = np.cos(phi), np.sin(phi)
    cc = (params.p - 1) * params.k * zr ** (params.p - 2)
    x1 = c * xr - s * y
    y1 = s * xr + c * y
    return np.array([
        [ca * c + sa * cc * y1, -s, sa * c - ca * cc * y1],
        [ca * s - sa * cc * x1, c, sa * s + ca * cc * x1],
        [-sa, 0.0, ca],
    ])


@dataclass
class Trajectory:
    """Orbit of a single initial condition: points[m] is the state after m kicks."""

    points: np.ndarray
    params: ModelParams

    def __len__(self) -> int:
        return self.points.shape[0] - 1


def trajectory(point, params: ModelParams, n_steps: int) -> Trajectory:
    """Iterate the map n_steps times from `point` (renormalizing each step)."""
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    v = unit_vector(point)
    out = np.empty((n_steps + 1, 3))
    _kernels.iterate_orbit(v[0], v[1], v[2], params.p, params.k, params.alpha,
                           n_steps, out)
    return Trajectory(points=out, params=params)


def involution_t(point, params: ModelParams) -> np.ndarray:
    """Orientation-reversing involution conjugating the map to its inverse
    (valid for every p)."""
    v = np.asarray(point, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    return np.stack([-ca * x - sa * z, y, -sa * x + ca * z], axis=-1)


def involution_t_tilde(point, params: ModelParams) -> np.ndarray:
    """Second involution; it conjugates the map to its inverse only for even p."""
    v = np.asarray(point, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    return np.stack([ca * x + sa * z, y, sa * x - ca * z], axis=-1)


def rotation_y_pi(point) -> np.ndarray:
    """(x, y, z) -> (-x, y, -z); commutes with the map for even p."""
    v = np.asarray(point, dtype=float)
    return np.stack([-v[..., 0], v[..., 1], -v[..., 2]], axis=-1)


def rotation_x_pi(point) -> np.ndarray:
    """(x, y, z) -> (x, -y, -z)."""
    v = np.asarray(point, dtype=float)
    return np.stack([v[..., 0], -v[..., 1], -v[..., 2]], axis=-1)


@dataclass(frozen=True)
class GreatCircle:
    """Great circle {a*x + b*z = 0} through the y-axis poles.

    `degenerate` is set when both coefficients vanish (the descriptor then
    carries no constraint; this happens for the T-curve as alpha -> 0).
    """

    a: float
    b: float
    degenerate: bool = False

    def points(self, n: int) -> np.ndarray:
        """n points evenly spaced along the circle."""
        if self.degenerate:
            raise ValueError("degenerate great-circle descriptor has no unique circle")
        norm = np.hypot(self.a, self.b)
        e1 = np.array([self.b / norm, 0.0, -self.a / norm])
        e2 = np.array([0.0, 1.0, 0.0])
        t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return np.outer(np.cos(t), e1) + np.outer(np.sin(t), e2)


_DEGENERACY_TOL = 1e-12


def symmetry_curves(params: ModelParams) -> tuple[GreatCircle, GreatCircle]:
    """Fixed-point circles of the two involutions.

    Returns the coefficient pairs of sin(a)*X - (cos(a) -/+ 1)*Z = 0; the
    first circle is pointwise fixed by the T involution, the second by the
    second involution.
    """
    ca, sa = np.cos(params.alpha), np.sin(params.alpha)
    c_t = GreatCircle(sa, -(ca - 1.0))
    c_tt = GreatCircle(sa, -(ca + 1.0))
    if abs(c_t.a) < _DEGENERACY_TOL and abs(c_t.b) < _DEGENERACY_TOL:
        c_t = GreatCircle(c_t.a, c_t.b, degenerate=True)
    if abs(c_tt.a) < _DEGENERACY_TOL and abs(c_tt.b) < _DEGENERACY_TOL:
        c_tt = GreatCircle(c_tt.a, c_tt.b, degenerate=True)
    return c_t, c_tt
