"""Numba kernels for the hot loops: orbit iteration, tangent-frame QR
accumulation, recurrence times and trajectory-pair correlations.

Every kernel renormalizes the phase point to unit length after each step,
and every per-point loop writes to its own output slot, so results are
bit-identical regardless of the number of threads.
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, inline="always")
def _step(x, y, z, p, k, ca, sa):
    """One application of the kicked p-spin map (no renormalization)."""
    xr = ca * x + sa * z
    zr = -sa * x + ca * z
    phi = k * zr ** (p - 1)
    c = np.cos(phi)
    s = np.sin(phi)
    return c * xr - s * y, s * xr + c * y, zr


@njit(cache=True, inline="always")
def _step_tangent(x, y, z, p, k, ca, sa):
    """One map step together with the 3x3 Jacobian at the starting point."""
    xr = ca * x + sa * z
    zr = -sa * x + ca * z
    phi = k * zr ** (p - 1)
    c = np.cos(phi)
    s = np.sin(phi)
    cc = (p - 1) * k * zr ** (p - 2)
    x1 = c * xr - s * y
    y1 = s * xr + c * y
    return (x1, y1, zr,
            ca * c + sa * cc * y1, -s, sa * c - ca * cc * y1,
            ca * s - sa * cc * x1, c, sa * s + ca * cc * x1,
            -sa, 0.0, ca)


@njit(cache=True)
def iterate_orbit(x, y, z, p, k, alpha, n_steps, out):
    """Fill out[m] with the orbit point after m steps; out has n_steps+1 rows."""
    ca = np.cos(alpha)
    sa = np.sin(alpha)
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    for m in range(1, n_steps + 1):
        x, y, z = _step(x, y, z, p, k, ca, sa)
        inv = 1.0 / np.sqrt(x * x + y * y + z * z)
        x *= inv
        y *= inv
        z *= inv
        out[m, 0] = x
        out[m, 1] = y
        out[m, 2] = z


@njit(cache=True)
def lyapunov_qr_accum(x, y, z, p, k, alpha, n_steps, n_transient, history):
    """Largest-exponent estimate by QR re-orthonormalization every step.

    The full 3x3 tangent frame is propagated and re-orthonormalized with
    modified Gram-Schmidt; log R11 is accumulated after the transient.
    `history` (possibly empty) receives running means at evenly spaced
    checkpoints. Returns the final mean of log R11 over n_steps.
    """
    ca = np.cos(alpha)
    sa = np.sin(alpha)
    q11, q21, q31 = 1.0, 0.0, 0.0
    q12, q22, q32 = 0.0, 1.0, 0.0
    q13, q23, q33 = 0.0, 0.0, 1.0
    acc = 0.0
    nhist = history.shape[0]
    stride = n_steps // nhist if nhist > 0 else 0
    if stride < 1:
        stride = 1
    hidx = 0
    for it in range(n_steps + n_transient):
        (x, y, z,
         m11, m12, m13,
         m21, m22, m23,
         m31, m32, m33) = _step_tangent(x, y, z, p, k, ca, sa)
        inv = 1.0 / np.sqrt(x * x + y * y + z * z)
        x *= inv
        y *= inv
        z *= inv
        # W = M Q
        w11 = m11 * q11 + m12 * q21 + m13 * q31
        w21 = m21 * q11 + m22 * q21 + m23 * q31
        w31 = m31 * q11 + m32 * q21 + m33 * q31
        w12 = m11 * q12 + m12 * q22 + m13 * q32
        w22 = m21 * q12 + m22 * q22 + m23 * q32
        w32 = m31 * q12 + m32 * q22 + m33 * q32
        w13 = m11 * q13 + m12 * q23 + m13 * q33
        w23 = m21 * q13 + m22 * q23 + m23 * q33
        w33 = m31 * q13 + m32 * q23 + m33 * q33
        # modified Gram-Schmidt, column by column
        r11 = np.sqrt(w11 * w11 + w21 * w21 + w31 * w31)
        inv1 = 1.0 / r11
        q11 = w11 * inv1
        q21 = w21 * inv1
        q31 = w31 * inv1
        d = q11 * w12 + q21 * w22 + q31 * w32
        w12 -= d * q11
        w22 -= d * q21
        w32 -= d * q31
        r22 = np.sqrt(w12 * w12 + w22 * w22 + w32 * w32)
        inv2 = 1.0 / r22
        q12 = w12 * inv2
        q22 = w22 * inv2
        q32 = w32 * inv2
        d = q11 * w13 + q21 * w23 + q31 * w33
        w13 -= d * q11
        w23 -= d * q21
        w33 -= d * q31
        d = q12 * w13 + q22 * w23 + q32 * w33
        w13 -= d * q12
        w23 -= d * q22
        w33 -= d * q32
        r33 = np.sqrt(w13 * w13 + w23 * w23 + w33 * w33)
        inv3 = 1.0 / r33
        q13 = w13 * inv3
        q23 = w23 * inv3
        q33 = w33 * inv3
        if it >= n_transient:
            acc += np.log(r11)
            ns = it - n_transient + 1
            if nhist > 0 and ns % stride == 0 and hidx < nhist:
                history[hidx] = acc / ns
                hidx += 1
    return acc / n_steps


@njit(cache=True, parallel=True)
def lyapunov_field(points, p, k, alpha, n_steps, n_transient):
    """Finite-time largest exponent for each initial condition."""
    n = points.shape[0]
    out = np.empty(n)
    empty = np.empty(0)
    for i in prange(n):
        out[i] = lyapunov_qr_accum(points[i, 0], points[i, 1], points[i, 2],
                                   p, k, alpha, n_steps, n_transient, empty)
    return out


@njit(cache=True, parallel=True)
def recurrence_times(points, p, k, alpha, t_max, d_min):
    """First time each orbit re-enters the chord ball of radius d_min around
    its start; t_max+1 marks no recurrence within t_max steps."""
    n = points.shape[0]
    out = np.empty(n, dtype=np.int64)
    ca = np.cos(alpha)
    sa = np.sin(alpha)
    d2 = d_min * d_min
    for i in prange(n):
        x0 = points[i, 0]
        y0 = points[i, 1]
        z0 = points[i, 2]
        x, y, z = x0, y0, z0
        t_rec = t_max + 1
        for m in range(1, t_max + 1):
            x, y, z = _step(x, y, z, p, k, ca, sa)
            inv = 1.0 / np.sqrt(x * x + y * y + z * z)
            x *= inv
            y *= inv
            z *= inv
            dx = x - x0
            dy = y - y0
            dz = z - z0
            if dx * dx + dy * dy + dz * dz < d2:
                t_rec = m
                break
        out[i] = t_rec
    return out


@njit(cache=True, parallel=True)
def similarity_per_point(points, p, k1, a1, k2, a2, n_kicks):
    """Product of the three per-component Pearson correlations between the
    two trajectories of each initial condition (NaN where any component has
    zero variance)."""
    n = points.shape[0]
    out = np.empty(n)
    ca1 = np.cos(a1)
    sa1 = np.sin(a1)
    ca2 = np.cos(a2)
    sa2 = np.sin(a2)
    for i in prange(n):
        ta = np.empty((3, n_kicks))
        tb = np.empty((3, n_kicks))
        xa, ya, za = points[i, 0], points[i, 1], points[i, 2]
        xb, yb, zb = xa, ya, za
        for m in range(n_kicks):
            xa, ya, za = _step(xa, ya, za, p, k1, ca1, sa1)
            inv = 1.0 / np.sqrt(xa * xa + ya * ya + za * za)
            xa *= inv
            ya *= inv
            za *= inv
            xb, yb, zb = _step(xb, yb, zb, p, k2, ca2, sa2)
            inv = 1.0 / np.sqrt(xb * xb + yb * yb + zb * zb)
            xb *= inv
            yb *= inv
            zb *= inv
            ta[0, m] = xa
            ta[1, m] = ya
            ta[2, m] = za
            tb[0, m] = xb
            tb[1, m] = yb
            tb[2, m] = zb
        s = 1.0
        ok = True
        for c in range(3):
            ma = ta[c].mean()
            mb = tb[c].mean()
            va = 0.0
            vb = 0.0
            cab = 0.0
            for m in range(n_kicks):
                da = ta[c, m] - ma
                db = tb[c, m] - mb
                va += da * da
                vb += db * db
                cab += da * db
            if va < 1e-20 or vb < 1e-20:
                ok = False
                break
            s *= cab / np.sqrt(va * vb)
        out[i] = s if ok else np.nan
    return out
