import math

import numpy as np
import pytest

from pspin import (ModelParams, R_COE, R_POISSON, SpinRepresentation,
                   coe_normalization, coe_sample, eigensystem,
                   fit_quantum_lyapunov, floquet_delta, floquet_gamma,
                   floquet_operator, heisenberg_evolve, ipr,
                   localization_delta, mean_adjacent_ratio, normalized_gamma,
                   otoc_series, spin_operators)
from pspin.qchaos import OtocSeries, symmetry_resolved_phases

PI = np.pi


class TestMeanAdjacentRatio:
    def test_picket_fence_is_one(self):
        phases = np.linspace(-PI, PI, 33)[1:]  # 32 equally spaced on circle
        stats = mean_adjacent_ratio(phases)
        assert stats.r_bar == pytest.approx(1.0, abs=1e-12)
        assert stats.ratios.size == 32

    def test_uniform_phases_near_poisson(self):
        values = []
        for s in range(10):
            rng = np.random.default_rng(3000 + s)
            values.append(mean_adjacent_ratio(
                rng.uniform(-PI, PI, 2048)).r_bar)
        assert np.mean(values) == pytest.approx(R_POISSON, abs=0.01)

    def test_degenerate_spacings_excluded(self):
        base = np.linspace(-2.0, 2.0, 40)
        phases = np.concatenate([base, base[:3]])  # three exact duplicates
        stats = mean_adjacent_ratio(phases)
        assert stats.excluded_degenerate == 3

    def test_too_few_phases_rejected(self):
        with pytest.raises(ValueError):
            mean_adjacent_ratio(np.linspace(0, 1, 9))

    def test_shift_and_reversal_invariance(self, rng):
        phases = rng.uniform(-PI, PI, 512)
        a = mean_adjacent_ratio(phases).r_bar
        shifted = np.angle(np.exp(1j * (phases + 1.234)))
        b = mean_adjacent_ratio(shifted).r_bar
        c = mean_adjacent_ratio(-phases).r_bar
        assert a == pytest.approx(b, abs=1e-12)
        assert a == pytest.approx(c, abs=1e-12)


class TestNormalizedGamma:
    def test_fixed_points(self):
        assert normalized_gamma(R_POISSON) == 0.0
        assert normalized_gamma(R_COE) == pytest.approx(1.0)

    def test_affine(self):
        mid = 0.5 * (R_POISSON + R_COE)
        assert normalized_gamma(mid) == pytest.approx(0.5)
        assert normalized_gamma(0.6) > 1.0  # fluctuations pass through


class TestIpr:
    def test_basis_vector(self):
        basis = np.eye(16, dtype=complex)
        state = basis[:, 3]
        assert ipr(state, basis) == pytest.approx(1.0)

    def test_uniform_superposition(self):
        d = 32
        basis = np.eye(d, dtype=complex)
        state = np.ones(d) / math.sqrt(d)
        assert ipr(state, basis) == pytest.approx(d)

    def test_phase_invariance(self, rng):
        d = 24
        basis = np.eye(d, dtype=complex)
        state = rng.normal(size=d) + 1j * rng.normal(size=d)
        state /= np.linalg.norm(state)
        rotated_basis = basis * np.exp(1j * rng.uniform(0, 2 * PI, d))
        assert ipr(state, basis) == pytest.approx(ipr(state, rotated_basis))

    def test_rejects_unnormalized(self):
        basis = np.eye(8, dtype=complex)
        with pytest.raises(ValueError):
            ipr(np.ones(8), basis)

    def test_haar_state_near_half_dim(self):
        d = 513
        vals = []
        for s in range(20):
            rng = np.random.default_rng(4000 + s)
            psi = rng.normal(size=d) + 1j * rng.normal(size=d)
            psi /= np.linalg.norm(psi)
            vals.append(ipr(psi, np.eye(d, dtype=complex)))
        assert np.mean(vals) == pytest.approx(d / 2.0, rel=0.10)

    def test_range_bounds(self, rng):
        d = 20
        basis = np.eye(d, dtype=complex)
        for _ in range(20):
            psi = rng.normal(size=d) + 1j * rng.normal(size=d)
            psi /= np.linalg.norm(psi)
            value = ipr(psi, basis)
            assert 1.0 - 1e-9 <= value <= d + 1e-9


class TestFloquetDelta:
    def test_zero_kick_fully_localized(self):
        # generic alpha keeps the rotation spectrum nondegenerate, so the
        # eigenvectors are the Jy states themselves; odd p uses the full
        # spectrum
        rep = SpinRepresentation(128)
        params = ModelParams(p=3, k=0.0, alpha=1.0)
        delta = localization_delta(params, rep)
        assert delta == pytest.approx(3.0 / rep.dim, abs=1e-6)
        spectral = eigensystem(floquet_operator(params, rep))
        assert floquet_delta(spectral, rep) == pytest.approx(3.0 / rep.dim, abs=1e-6)

    def test_p3_more_delocalized_than_p2_at_small_k(self):
        rep = SpinRepresentation(256)
        d3 = localization_delta(ModelParams(p=3, k=1.0, alpha=PI / 2), rep)
        d2 = localization_delta(ModelParams(p=2, k=1.0, alpha=PI / 2), rep)
        assert d3 > d2

    def test_even_p_full_basis_delta_is_parity_capped(self):
        # for even p every eigenvector lives in one parity sector of the Jy
        # basis, so the plain full-basis delta saturates near 1/2 while the
        # parity-resolved delta reaches 1 in the chaotic regime
        rep = SpinRepresentation(256)
        params = ModelParams(p=2, k=6.0, alpha=PI / 2)
        full = floquet_delta(eigensystem(floquet_operator(params, rep)), rep)
        resolved = localization_delta(params, rep)
        assert full < 0.6
        assert resolved == pytest.approx(1.0, abs=0.15)


class TestFloquetGamma:
    def test_full_spectrum_lower_than_blocks_in_chaos(self):
        rep = SpinRepresentation(256)
        params = ModelParams(p=2, k=6.0, alpha=PI / 2)
        full = mean_adjacent_ratio(
            eigensystem(floquet_operator(params, rep)).phases)
        stats, gamma = floquet_gamma(params, rep)
        assert full.r_bar < stats.r_bar
        assert gamma == pytest.approx(1.0, abs=0.15)

    def test_sector_count(self):
        rep = SpinRepresentation(64)
        # odd p: one sector; even p generic alpha: two; even p at pi/2
        # (integer spin): three
        assert len(symmetry_resolved_phases(ModelParams(p=3, k=2.0, alpha=1.0), rep)) == 1
        assert len(symmetry_resolved_phases(ModelParams(p=2, k=2.0, alpha=1.0), rep)) == 2
        assert len(symmetry_resolved_phases(ModelParams(p=2, k=2.0, alpha=PI / 2), rep)) == 3

    def test_sector_sizes_sum(self):
        rep = SpinRepresentation(64)
        phases = symmetry_resolved_phases(ModelParams(p=4, k=3.0, alpha=PI / 2), rep)
        assert sum(len(ph) for ph in phases) == rep.dim


class TestCoeSample:
    def test_symmetric_unitary(self):
        u = coe_sample(64, rng_seed=9)
        assert np.abs(u - u.T).max() < 1e-12
        assert np.abs(u.conj().T @ u - np.eye(64)).max() < 1e-12

    def test_deterministic_per_seed(self):
        assert np.array_equal(coe_sample(16, 3), coe_sample(16, 3))
        assert not np.array_equal(coe_sample(16, 3), coe_sample(16, 4))


class TestCoeNormalization:
    def test_positive_and_analytic_reference(self):
        rep = SpinRepresentation(64)
        norm = coe_normalization(rep, 10, rng_seed=2)
        assert norm.c_coe > 0.0
        assert norm.delta_coe == pytest.approx(rep.dim / 3.0)

    def test_concentration_under_doubling(self):
        rep = SpinRepresentation(256)
        a = coe_normalization(rep, 20, rng_seed=11).c_coe
        b = coe_normalization(rep, 40, rng_seed=11).c_coe
        assert b == pytest.approx(a, rel=0.05)

    def test_sampled_ipr_near_third(self):
        rep = SpinRepresentation(256)
        norm = coe_normalization(rep, 5, rng_seed=7, sample_ipr=True)
        assert norm.mean_ipr_sampled == pytest.approx(rep.dim / 3.0, rel=0.10)


class TestOtocSeries:
    def test_commuting_at_time_zero(self):
        rep = SpinRepresentation(32)
        series = otoc_series(ModelParams(p=2, k=2.0, alpha=1.0), rep, 5,
                             coe_samples=3, rng_seed=0)
        assert series.c[0] == 0.0

    def test_real_and_nonnegative(self):
        rep = SpinRepresentation(48)
        series = otoc_series(ModelParams(p=3, k=3.0, alpha=PI / 2), rep, 30,
                             coe_samples=3, rng_seed=0)
        assert np.all(series.c >= -1e-10)

    def test_brute_force_commutator_norm_oracle(self):
        # C(n) equals ||[W(n), V]||_F^2 / dim with W(n) evolved explicitly
        rep = SpinRepresentation(63)
        params = ModelParams(p=2, k=2.0, alpha=1.1)
        series = otoc_series(params, rep, 20, coe_samples=3, rng_seed=1)
        u = floquet_operator(params, rep)
        _, _, jz = spin_operators(rep)
        for n in range(21):
            wn = heisenberg_evolve(jz, u, n)
            comm = wn @ jz - jz @ wn
            oracle = np.linalg.norm(comm, "fro") ** 2 / rep.dim
            assert abs(series.c[n] - oracle) <= 1e-10 * max(1.0, oracle)


def _synthetic_series(c_values, c_coe) -> OtocSeries:
    c = np.asarray(c_values, dtype=float)
    return OtocSeries(n=np.arange(c.size), c=c, c_coe=c_coe,
                      params=ModelParams(p=2, k=1.0, alpha=1.0),
                      rep=SpinRepresentation(16))


class TestQuantumLyapunovFit:
    def test_no_window_for_flat_series(self):
        c = np.concatenate([[0.0], np.full(30, 2.0)])
        assert fit_quantum_lyapunov(_synthetic_series(c, 1e6)) is None

    def test_recovers_exponential_rate(self):
        rate = 0.8
        n = np.arange(0, 31)
        c = 1e-4 * np.exp(rate * n)
        c = np.minimum(c, 60.0)  # saturation plateau above the fit band
        c[0] = 0.0
        fit = fit_quantum_lyapunov(_synthetic_series(c, 100.0))
        assert fit is not None
        assert fit.lam_q == pytest.approx(rate, rel=1e-6)
        assert fit.n_lo < fit.n_hi
        # window sits strictly before saturation
        assert c[fit.n_hi] < 0.5 * c.max()

    def test_rejects_algebraic_growth(self):
        # quadratic shearing enters the window band but has a decaying
        # log-slope; the stationarity gate returns no-window
        n = np.arange(0, 61)
        c = 0.002 * n.astype(float) ** 2
        fit = fit_quantum_lyapunov(_synthetic_series(c, 200.0))
        assert fit is None

    def test_short_window_is_rejected(self):
        n = np.arange(0, 8)
        c = 1e-3 * np.exp(2.5 * n)
        c[0] = 0.0
        series = _synthetic_series(c, c.max() / 0.3 * 0.9)
        # only ~2 points fall inside the band
        assert fit_quantum_lyapunov(series) is None
