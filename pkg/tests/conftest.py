import numpy as np
import pytest

from pspin.floquet import SpinRepresentation, _jy_eigensystem, spin_operators


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_unit(rng, n=None):
    """Uniform random unit vector(s) on the sphere."""
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def coherent_state(rep: SpinRepresentation, direction) -> np.ndarray:
    """Spin coherent state pointing along `direction`: the stretched state
    rotated from the +z axis, so that <J>/j equals the direction."""
    x, y, z = np.asarray(direction, dtype=float)
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    psi = np.zeros(rep.dim, dtype=complex)
    psi[0] = 1.0  # m = j along z
    wy, vy = _jy_eigensystem(rep.n_spins)
    psi = (vy * np.exp(-1j * theta * wy)) @ (vy.conj().T @ psi)
    psi = np.exp(-1j * phi * rep.m_values) * psi
    return psi


def spin_expectation(rep: SpinRepresentation, psi: np.ndarray) -> np.ndarray:
    jx, jy, jz = spin_operators(rep)
    return np.array([np.vdot(psi, op @ psi).real for op in (jx, jy, jz)]) / rep.j
