"""Collective spin operators, the kicked p-spin Floquet unitary, its spectral
decomposition and parity blocks, Heisenberg evolution, and a small binary
container for caching operators and spectra on disk."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import schur

from .params import ModelParams

__all__ = [
    "SpinRepresentation", "FloquetOperator", "SpectralData", "ParityBlocks",
    "spin_operators", "floquet_operator", "eigensystem", "parity_blocks",
    "parity_operator", "rotation_x_pi_operator", "heisenberg_evolve",
    "save_floquet", "load_floquet", "save_spectrum", "load_spectrum",
]

UNITARITY_TOL = 1e-12
PARITY_COMMUTATOR_TOL = 1e-8
EIGEN_RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class SpinRepresentation:
    """Symmetric subspace of n_spins spin-1/2 particles: total spin
    j = n_spins/2, dimension n_spins + 1, basis ordered m = j, j-1, ..., -j
    (eigenbasis of Jz)."""

    n_spins: int

    def __post_init__(self):
        if not isinstance(self.n_spins, int) or isinstance(self.n_spins, bool):
            raise TypeError("n_spins must be an integer")
        if self.n_spins < 1:
            raise ValueError("n_spins must be >= 1")

    @property
    def j(self) -> float:
        return self.n_spins / 2.0

    @property
    def dim(self) -> int:
        return self.n_spins + 1

    @property
    def m_values(self) -> np.ndarray:
        return self.j - np.arange(self.dim)


def spin_operators(rep: SpinRepresentation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense (Jx, Jy, Jz) in the Jz eigenbasis; [Jx, Jy] = i Jz."""
    j = rep.j
    m = rep.m_values
    jp = np.zeros((rep.dim, rep.dim), dtype=complex)
    for i in range(1, rep.dim):
        mm = m[i]
        jp[i - 1, i] = math.sqrt(j * (j + 1) - mm * (mm + 1))
    jm = jp.conj().T
    jx = (jp + jm) / 2.0
    jy = (jp - jm) / 2.0j
    jz = np.diag(m.astype(complex))
    return jx, jy, jz


@lru_cache(maxsize=16)
def _jy_eigensystem(n_spins: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending, = -j..j) and eigenvectors of Jy, cached per
    representation since every rotation about y reuses them."""
    rep = SpinRepresentation(n_spins)
    _, jy, _ = spin_operators(rep)
    w, v = np.linalg.eigh(jy)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def _rotation_y(angle: float, rep: SpinRepresentation) -> np.ndarray:
    w, v = _jy_eigensystem(rep.n_spins)
    return (v * np.exp(-1j * angle * w)) @ v.conj().T


@lru_cache(maxsize=16)
def _jx_eigensystem(n_spins: int) -> tuple[np.ndarray, np.ndarray]:
    rep = SpinRepresentation(n_spins)
    jx, _, _ = spin_operators(rep)
    w, v = np.linalg.eigh(jx)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def parity_operator(rep: SpinRepresentation) -> np.ndarray:
    """exp(-i pi Jy), the pi-rotation about the precession axis."""
    return _rotation_y(math.pi, rep)


def rotation_x_pi_operator(rep: SpinRepresentation) -> np.ndarray:
    """exp(-i pi Jx)."""
    w, v = _jx_eigensystem(rep.n_spins)
    return (v * np.exp(-1j * math.pi * w)) @ v.conj().T


@dataclass
class FloquetOperator:
    """One-period unitary of the kicked p-spin: diagonal kick times the
    y-rotation, in the Jz eigenbasis."""

    matrix: np.ndarray
    params: ModelParams
    rep: SpinRepresentation


def floquet_operator(params: ModelParams, rep: SpinRepresentation) -> FloquetOperator:
    """U = exp(-i k/(p j^(p-1)) Jz^p) exp(-i alpha Jy).

    The kick is applied as a diagonal phase on the Jz basis; the rotation is
    built from the cached Jy eigendecomposition.
    """
    j = rep.j
    m = rep.m_values
    kick = np.exp(-1j * (params.k / (params.p * j ** (params.p - 1))) * m ** params.p)
    u = kick[:, None] * _rotation_y(params.alpha, rep)
    return FloquetOperator(matrix=u, params=params, rep=rep)


def _as_matrix(u) -> np.ndarray:
    return u.matrix if isinstance(u, FloquetOperator) else np.asarray(u)


@dataclass
class SpectralData:
    """Eigenphases mu (sorted ascending in (-pi, pi]) and matching
    eigenvector columns of a unitary, with the convention U v = e^{-i mu} v."""

    phases: np.ndarray
    vectors: np.ndarray


def eigensystem(u) -> SpectralData:
    """Full spectral decomposition of a unitary via the complex Schur form
    (orthonormal eigenvectors even across degenerate clusters).

    Raises ValueError when any residual ||U v - e^{-i mu} v|| exceeds 1e-6,
    which signals a non-unitary input or a solver failure.
    """
    mat = _as_matrix(u)
    t, q = schur(mat, output="complex")
    lam = np.diag(t)
    mu = -np.angle(lam)
    mu = np.where(mu <= -math.pi, mu + 2.0 * math.pi, mu)
    order = np.argsort(mu, kind="stable")
    mu = mu[order]
    vecs = q[:, order]
    residual = np.linalg.norm(mat @ vecs - vecs * np.exp(-1j * mu), axis=0).max()
    if residual > EIGEN_RESIDUAL_TOL:
        raise ValueError(f"eigendecomposition residual {residual:.3e} exceeds "
                         f"{EIGEN_RESIDUAL_TOL:g}; input may not be unitary")
    return SpectralData(phases=mu, vectors=vecs)


@dataclass
class ParityBlocks:
    """Projection of a parity-commuting unitary onto the two eigensectors of
    exp(-i pi Jy); `symmetric` is the sector containing the m = j state of
    the Jy basis (parity eigenvalue +1 up to a global phase convention)."""

    symmetric: np.ndarray
    antisymmetric: np.ndarray
    symmetric_basis: np.ndarray
    antisymmetric_basis: np.ndarray


def _parity_classes(rep: SpinRepresentation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    w, v = _jy_eigensystem(rep.n_spins)
    # parity phases e^{-i pi m} fall into two classes distinguished by the
    # integer parity of j - m; class 0 contains m = j
    cls = np.round(rep.j - w).astype(int) % 2
    return w, v, cls


def parity_blocks(u, rep: SpinRepresentation | None = None) -> ParityBlocks:
    """Split a unitary into its two parity sectors.

    Raises ValueError when the unitary does not commute with the parity
    operator to within 1e-8 (odd-p misuse).
    """
    if rep is None:
        if not isinstance(u, FloquetOperator):
            raise ValueError("rep is required when passing a raw matrix")
        rep = u.rep
    mat = _as_matrix(u)
    par = parity_operator(rep)
    comm = np.abs(par @ mat - mat @ par).max()
    if comm > PARITY_COMMUTATOR_TOL:
        raise ValueError(f"parity commutator {comm:.3e} exceeds "
                         f"{PARITY_COMMUTATOR_TOL:g}: no parity block structure")
    _, v, cls = _parity_classes(rep)
    v_sym = v[:, cls == 0]
    v_anti = v[:, cls == 1]
    return ParityBlocks(symmetric=v_sym.conj().T @ mat @ v_sym,
                        antisymmetric=v_anti.conj().T @ mat @ v_anti,
                        symmetric_basis=v_sym,
                        antisymmetric_basis=v_anti)


def heisenberg_evolve(w_op: np.ndarray, u, n: int) -> np.ndarray:
    """W(n) = U^dagger^n W U^n by iterated conjugation, re-symmetrized after
    each step to pin Hermiticity."""
    if n < 0:
        raise ValueError("n must be >= 0")
    mat = _as_matrix(u)
    uh = mat.conj().T
    w = np.array(w_op, dtype=complex)
    for _ in range(n):
        w = uh @ w @ mat
        w = (w + w.conj().T) / 2.0
    return w


# ---------------------------------------------------------------------------
# binary container for cached operators / spectra
#
# layout (little-endian):
#   magic     8 bytes  b"PSPNOPS1"
#   kind      u8       1 = operator, 2 = spectrum
#   n_spins   u32
#   p         i32
#   k         f64
#   alpha     f64
#   dim       u32
#   payload   kind 1: dim*dim complex128 (row-major)
#             kind 2: dim float64 phases + dim*dim complex128 vectors
# ---------------------------------------------------------------------------

_MAGIC = b"PSPNOPS1"
_HEADER = struct.Struct("<8sBIidd")


class ContainerFormatError(ValueError):
    """Raised when an operator/spectrum container file is malformed."""


def _write_header(fh, kind: int, params: ModelParams, rep: SpinRepresentation):
    fh.write(_HEADER.pack(_MAGIC, kind, rep.n_spins, params.p, params.k,
                          params.alpha))


def _read_header(fh):
    raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise ContainerFormatError("truncated container header")
    magic, kind, n_spins, p, k, alpha = _HEADER.unpack(raw)
    if magic != _MAGIC:
        raise ContainerFormatError("bad magic; not an operator container")
    return kind, n_spins, p, k, alpha


def save_floquet(op: FloquetOperator, path) -> None:
    """Persist a Floquet operator to the versioned binary container."""
    with open(path, "wb") as fh:
        _write_header(fh, 1, op.params, op.rep)
        fh.write(np.ascontiguousarray(op.matrix, dtype="<c16").tobytes())


def load_floquet(path) -> FloquetOperator:
    with open(path, "rb") as fh:
        kind, n_spins, p, k, alpha = _read_header(fh)
        if kind != 1:
            raise ContainerFormatError(f"container holds kind {kind}, not an operator")
        rep = SpinRepresentation(n_spins)
        data = fh.read()
    expected = rep.dim * rep.dim * 16
    if len(data) != expected:
        raise ContainerFormatError("operator payload has the wrong size")
    mat = np.frombuffer(data, dtype="<c16").reshape(rep.dim, rep.dim).copy()
    return FloquetOperator(matrix=mat, params=ModelParams(p=p, k=k, alpha=alpha),
                           rep=rep)


def save_spectrum(spectral: SpectralData, params: ModelParams,
                  rep: SpinRepresentation, path) -> None:
    """Persist a spectral decomposition to the versioned binary container."""
    with open(path, "wb") as fh:
        _write_header(fh, 2, params, rep)
        fh.write(np.ascontiguousarray(spectral.phases, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(spectral.vectors, dtype="<c16").tobytes())


def load_spectrum(path) -> tuple[SpectralData, ModelParams, SpinRepresentation]:
    with open(path, "rb") as fh:
        kind, n_spins, p, k, alpha = _read_header(fh)
        if kind != 2:
            raise ContainerFormatError(f"container holds kind {kind}, not a spectrum")
        rep = SpinRepresentation(n_spins)
        data = fh.read()
    d = rep.dim
    expected = d * 8 + d * d * 16
    if len(data) != expected:
        raise ContainerFormatError("spectrum payload has the wrong size")
    phases = np.frombuffer(data[:d * 8], dtype="<f8").copy()
    vectors = np.frombuffer(data[d * 8:], dtype="<c16").reshape(d, d).copy()
    return (SpectralData(phases=phases, vectors=vectors),
            ModelParams(p=p, k=k, alpha=alpha), rep)
