import numpy as np
import pytest

from pspin import (ModelParams, SpinRepresentation, eigensystem,
                   floquet_operator, heisenberg_evolve, load_floquet,
                   load_spectrum, parity_blocks, parity_operator,
                   save_floquet, save_spectrum, spin_operators,
                   trajectory, unit_vector)
from pspin.floquet import ContainerFormatError, _jy_eigensystem
from pspin.qchaos import coe_sample

from conftest import coherent_state, spin_expectation

PI = np.pi


class TestSpinOperators:
    def test_spin_half(self):
        jx, jy, jz = spin_operators(SpinRepresentation(1))
        assert np.allclose(jz, np.diag([0.5, -0.5]))
        assert np.allclose(jx, np.array([[0, 0.5], [0.5, 0]]))

    def test_commutator_closure(self):
        jx, jy, jz = spin_operators(SpinRepresentation(2))
        assert np.abs(jx @ jy - jy @ jx - 1j * jz).max() < 1e-14
        # j = 1 ladder elements: sqrt(2)/2 off the diagonal of Jx
        assert jx[0, 1] == pytest.approx(1 / np.sqrt(2))
        assert jx[1, 2] == pytest.approx(1 / np.sqrt(2))

    @pytest.mark.parametrize("n_spins", [1, 2, 5, 16, 64])
    def test_traces(self, n_spins):
        rep = SpinRepresentation(n_spins)
        _, _, jz = spin_operators(rep)
        j = rep.j
        assert abs(np.trace(jz)) < 1e-12
        assert np.trace(jz @ jz).real == pytest.approx(j * (j + 1) * rep.dim / 3.0)

    def test_hermiticity(self):
        for op in spin_operators(SpinRepresentation(7)):
            assert np.abs(op - op.conj().T).max() < 1e-14

    def test_rotation_phases_on_jy_eigenvectors(self):
        rep = SpinRepresentation(12)
        alpha = 0.731
        u = floquet_operator(ModelParams(p=2, k=0.0, alpha=alpha), rep).matrix
        w, v = _jy_eigensystem(rep.n_spins)
        phases = np.exp(-1j * alpha * w)
        assert np.abs(u @ v - v * phases).max() < 1e-12


class TestFloquetOperator:
    def test_spin_half_kick_is_global_phase(self):
        rep = SpinRepresentation(1)
        params = ModelParams(p=2, k=1.3, alpha=0.9)
        u = floquet_operator(params, rep).matrix
        rot = floquet_operator(ModelParams(p=2, k=0.0, alpha=0.9), rep).matrix
        assert np.abs(u - np.exp(-1j * params.k / 4.0) * rot).max() < 1e-14

    def test_unitarity(self):
        rep = SpinRepresentation(128)
        u = floquet_operator(ModelParams(p=3, k=4.0, alpha=1.1), rep).matrix
        assert np.abs(u.conj().T @ u - np.eye(rep.dim)).max() < 1e-12

    def test_parity_commutation_even_p(self):
        rep = SpinRepresentation(64)
        par = parity_operator(rep)
        for p in (2, 4):
            u = floquet_operator(ModelParams(p=p, k=3.0, alpha=1.2), rep).matrix
            assert np.abs(u @ par - par @ u).max() < 1e-10

    def test_parity_commutator_fails_odd_p(self):
        rep = SpinRepresentation(64)
        par = parity_operator(rep)
        for p in (3, 5):
            u = floquet_operator(ModelParams(p=p, k=3.0, alpha=1.2), rep).matrix
            assert np.abs(u @ par - par @ u).max() > 1e-3


class TestEigensystem:
    def test_identity(self):
        out = eigensystem(np.eye(8, dtype=complex))
        assert np.abs(out.phases).max() < 1e-14

    def test_rotation_spectrum_k0(self):
        # phases are the rotation angles m * alpha reduced to (-pi, pi];
        # compared on the unit circle since +-pi meet at the branch point
        rep = SpinRepresentation(4)
        u = floquet_operator(ModelParams(p=2, k=0.0, alpha=PI / 2), rep)
        out = eigensystem(u)
        expected = np.array([m * PI / 2 for m in (-2, -1, 0, 1, 2)])
        got = np.sort_complex(np.round(np.exp(-1j * out.phases), 10))
        want = np.sort_complex(np.round(np.exp(-1j * expected), 10))
        assert np.abs(got - want).max() < 1e-10
        assert out.phases.min() > -PI and out.phases.max() <= PI

    def test_transpose_invariance_coe(self):
        u = coe_sample(64, rng_seed=5)
        a = np.sort(eigensystem(u).phases)
        b = np.sort(eigensystem(u.T).phases)
        assert np.abs(a - b).max() < 1e-8

    def test_eigenvector_matrix_unitary(self):
        rep = SpinRepresentation(96)
        u = floquet_operator(ModelParams(p=2, k=6.0, alpha=PI / 2), rep)
        out = eigensystem(u)
        d = rep.dim
        assert np.abs(out.vectors.conj().T @ out.vectors - np.eye(d)).max() < 1e-8

    def test_phase_ordering_and_range(self):
        rep = SpinRepresentation(32)
        out = eigensystem(floquet_operator(ModelParams(p=3, k=2.0, alpha=1.0), rep))
        assert np.all(np.diff(out.phases) >= 0)
        assert out.phases.min() > -PI and out.phases.max() <= PI + 1e-15

    def test_rejects_non_unitary(self):
        m = np.diag([1.0, 2.0, 0.5, 1.0]).astype(complex)
        with pytest.raises(ValueError):
            eigensystem(m)


class TestParityBlocks:
    def test_sector_dimensions(self):
        rep = SpinRepresentation(4)
        u = floquet_operator(ModelParams(p=2, k=1.0, alpha=1.0), rep)
        blocks = parity_blocks(u)
        assert blocks.symmetric.shape == (3, 3)
        assert blocks.antisymmetric.shape == (2, 2)

    def test_blocks_unitary(self):
        rep = SpinRepresentation(65)
        u = floquet_operator(ModelParams(p=4, k=2.7, alpha=0.8), rep)
        blocks = parity_blocks(u)
        for b in (blocks.symmetric, blocks.antisymmetric):
            assert np.abs(b.conj().T @ b - np.eye(b.shape[0])).max() < 1e-10

    def test_union_of_block_spectra(self):
        rep = SpinRepresentation(32)
        u = floquet_operator(ModelParams(p=2, k=3.0, alpha=1.3), rep)
        blocks = parity_blocks(u)
        merged = np.sort(np.concatenate([eigensystem(blocks.symmetric).phases,
                                         eigensystem(blocks.antisymmetric).phases]))
        full = np.sort(eigensystem(u).phases)
        assert np.abs(merged - full).max() < 1e-8

    def test_rejects_odd_p(self):
        rep = SpinRepresentation(32)
        u = floquet_operator(ModelParams(p=3, k=3.0, alpha=1.3), rep)
        with pytest.raises(ValueError):
            parity_blocks(u)


class TestHeisenberg:
    def test_identity_at_n0(self, rng):
        rep = SpinRepresentation(16)
        u = floquet_operator(ModelParams(p=2, k=2.0, alpha=1.0), rep)
        w = rng.normal(size=(rep.dim, rep.dim))
        w = w + w.T
        assert np.array_equal(heisenberg_evolve(w, u, 0), w.astype(complex))

    def test_trace_preserved(self, rng):
        rep = SpinRepresentation(24)
        u = floquet_operator(ModelParams(p=3, k=2.5, alpha=1.1), rep)
        a = rng.normal(size=(rep.dim, rep.dim)) + 1j * rng.normal(size=(rep.dim, rep.dim))
        w = a + a.conj().T
        evolved = heisenberg_evolve(w, u, 50)
        assert np.trace(evolved) == pytest.approx(np.trace(w), abs=1e-10)
        assert np.abs(evolved - evolved.conj().T).max() < 1e-12

    def test_spectrum_preserved(self):
        rep = SpinRepresentation(24)
        u = floquet_operator(ModelParams(p=2, k=4.0, alpha=PI / 2), rep)
        _, _, jz = spin_operators(rep)
        evolved = heisenberg_evolve(jz, u, 30)
        a = np.sort(np.linalg.eigvalsh(evolved))
        b = np.sort(np.linalg.eigvalsh(jz))
        assert np.abs(a - b).max() < 1e-8


class TestClassicalCorrespondence:
    def test_coherent_state_tracks_map(self):
        # a spin coherent state at N_s = 256 follows the classical orbit of
        # its center for the first few kicks
        rep = SpinRepresentation(256)
        params = ModelParams(p=2, k=1.0, alpha=PI / 2)
        x0 = unit_vector([0.55, 0.6, 0.55])
        psi = coherent_state(rep, x0)
        assert np.abs(spin_expectation(rep, psi) - x0).max() < 1e-6
        u = floquet_operator(params, rep).matrix
        classical = trajectory(x0, params, 5).points
        for n in range(1, 6):
            psi = u @ psi
            assert np.abs(spin_expectation(rep, psi) - classical[n]).max() < 0.05


class TestBinaryContainer:
    def test_operator_round_trip(self, tmp_path):
        rep = SpinRepresentation(12)
        params = ModelParams(p=3, k=2.25, alpha=1.375)
        op = floquet_operator(params, rep)
        path = tmp_path / "op.pspin"
        save_floquet(op, path)
        loaded = load_floquet(path)
        assert loaded.params == params
        assert loaded.rep == rep
        assert np.array_equal(loaded.matrix, op.matrix)

    def test_spectrum_round_trip(self, tmp_path):
        rep = SpinRepresentation(10)
        params = ModelParams(p=2, k=1.5, alpha=0.5)
        spectral = eigensystem(floquet_operator(params, rep))
        path = tmp_path / "spec.pspin"
        save_spectrum(spectral, params, rep, path)
        loaded, lparams, lrep = load_spectrum(path)
        assert lparams == params and lrep == rep
        assert np.array_equal(loaded.phases, spectral.phases)
        assert np.array_equal(loaded.vectors, spectral.vectors)

    def test_bad_magic_raises(self, tmp_path):
        path = tmp_path / "junk.pspin"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        with pytest.raises(ContainerFormatError):
            load_floquet(path)

    def test_truncated_payload_raises(self, tmp_path):
        rep = SpinRepresentation(8)
        op = floquet_operator(ModelParams(p=2, k=1.0, alpha=1.0), rep)
        path = tmp_path / "op.pspin"
        save_floquet(op, path)
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(ContainerFormatError):
            load_floquet(path)

    def test_kind_mismatch_raises(self, tmp_path):
        rep = SpinRepresentation(8)
        op = floquet_operator(ModelParams(p=2, k=1.0, alpha=1.0), rep)
        path = tmp_path / "op.pspin"
        save_floquet(op, path)
        with pytest.raises(ContainerFormatError):
            load_spectrum(path)
