import numpy as np
import pytest

from gaugechain import (
    BlockSequence,
    Chain,
    ResonatorParams,
    assemble_chain,
    eigenvalues,
    gauge_capacitance,
    gauge_weight,
    material_matrix,
    mode_profile,
    sample_sequence,
    spectrum,
    standard_blocks,
    symmetrise,
    total_lyapunov,
)
from gaugechain.capacitance import SpectralData

from conftest import random_chain

# frozen reference values: gauge_weight(2) = 2 / (1 - e^-2), once by hand
WEIGHT_2 = 2.3130352854993315
MONOMER_C = WEIGHT_2 / 2.0          # 1.1565176427496657
MONOMER_LAMBDA = 0.5 * MONOMER_C    # 0.5782588213748329


def monomer_chain(gamma=1.0):
    return Chain.from_resonators([ResonatorParams(1.0, 2.0, 2.0, gamma)])


class TestGaugeWeight:
    def test_removable_singularity(self):
        assert gauge_weight(0.0) == 1.0

    def test_difference_identity(self):
        # w(z) - w(-z) = z follows from w(-z) = w(z) e^{-z}
        for z in (0.1, 1.0, 10.0):
            assert gauge_weight(z) - gauge_weight(-z) == pytest.approx(z, abs=1e-12)

    def test_exponential_ratio(self):
        assert gauge_weight(-2.0) / gauge_weight(2.0) == pytest.approx(np.exp(-2.0), rel=1e-13)

    def test_positive(self, rng):
        z = rng.uniform(-30, 30, 1000)
        assert np.all(gauge_weight(z) > 0)

    def test_branches_agree_at_switch_point(self):
        # series and direct evaluation must agree to ~1e-13 around 1e-4
        for z in (0.5e-4, 0.9e-4, 1.1e-4, 2e-4):
            series = 1.0 + z / 2 + z * z / 12 - z**4 / 720
            direct = z / (-np.expm1(-z))
            assert series == pytest.approx(direct, rel=1e-13)
            assert gauge_weight(z) == pytest.approx(direct, rel=1e-13)

    def test_vectorised(self):
        z = np.array([-1.0, 0.0, 1.0])
        out = gauge_weight(z)
        assert out.shape == (3,)
        assert out[1] == 1.0


class TestGaugeCapacitance:
    def test_monomer_value(self):
        cap = gauge_capacitance(monomer_chain())
        assert cap.diag[0] == pytest.approx(MONOMER_C, rel=1e-14)

    def test_interior_row_sums_vanish_at_zero_gamma(self, rng):
        chain = random_chain(rng, 12, gamma_range=(0.0, 0.0))
        dense = gauge_capacitance(chain).to_dense()
        sums = dense.sum(axis=1)
        assert np.allclose(sums[1:-1], 0.0, atol=1e-14)

    def test_dimer_entries_at_zero_gamma(self):
        chain = assemble_chain(standard_blocks(0.0), BlockSequence(np.array([1, 1])))
        cap = gauge_capacitance(chain)
        s = chain.s
        # interior diagonals are 1/s_{i-1} + 1/s_i, off-diagonals -1/s_i
        assert np.allclose(cap.diag[1:-1], 1 / s[:-2] + 1 / s[1:-1])
        assert np.allclose(cap.upper, -1 / s[:-1])
        assert np.allclose(cap.lower, -1 / s[:-1])

    def test_asymmetry_with_gamma(self):
        chain = assemble_chain(standard_blocks(1.0), BlockSequence(np.array([0, 0])))
        cap = gauge_capacitance(chain)
        assert not np.allclose(cap.upper, cap.lower)


class TestMaterialMatrix:
    def test_standard_blocks(self):
        lib = standard_blocks(1.0)
        chain = assemble_chain(lib, BlockSequence(np.array([0, 1])))
        assert material_matrix(chain)[0] == pytest.approx(0.5)   # monomer
        assert material_matrix(chain)[1] == pytest.approx(1.0)   # dimer resonator

    def test_arithmetic(self):
        chain = Chain.from_resonators([ResonatorParams(2.0, 4.0, 1.0, 0.0)])
        assert material_matrix(chain)[0] == pytest.approx(1.0)


class TestSymmetrise:
    def test_zero_gamma_is_identity_transform(self, rng):
        chain = random_chain(rng, 10, gamma_range=(0.0, 0.0))
        sym = symmetrise(chain)
        assert np.allclose(sym.log_transform, 0.0, atol=1e-14)
        cap = gauge_capacitance(chain)
        assert np.allclose(sym.diag, cap.diag)
        assert np.allclose(-sym.offdiag, cap.upper)

    def test_uniform_gamma_decay_slope(self):
        gamma = 1.0
        lib = standard_blocks(gamma)
        chain = assemble_chain(lib, sample_sequence(lib, 40, seed=2))
        sym = symmetrise(chain)
        n = chain.num_resonators
        slope = (sym.log_transform[-1] - sym.log_transform[0]) / (n - 1)
        # dominated by -gamma * mean(ell) / 2
        assert slope == pytest.approx(-0.5 * gamma * chain.ell.mean(), rel=0.05)

    def test_dense_similarity(self, rng):
        for _ in range(5):
            chain = random_chain(rng, 20, gamma_range=(0.0, 1.0))
            sym = symmetrise(chain)
            dense_c = gauge_capacitance(chain).to_dense()
            r = np.exp(sym.log_transform)
            recovered = np.diag(1 / r) @ dense_c @ np.diag(r)
            assert np.max(np.abs(recovered - sym.to_dense())) < 1e-10

    def test_transform_recursion_multiplicative(self, rng):
        chain = random_chain(rng, 25, gamma_range=(0.0, 1.5))
        sym = symmetrise(chain)
        gl = chain.gamma * chain.ell
        lhs = sym.log_transform[1:] - sym.log_transform[:-1]
        rhs = 0.5 * (np.log(gauge_weight(-gl[1:])) - np.log(gauge_weight(gl[:-1])))
        assert np.allclose(lhs, rhs, atol=1e-12)


class TestSpectrum:
    def test_single_resonator(self):
        data = spectrum(monomer_chain())
        assert data.count == 1
        assert data.eigenvalues[0] == pytest.approx(MONOMER_LAMBDA, rel=1e-14)

    def test_hermitian_limit_against_dense_oracle(self, rng):
        for _ in range(5):
            chain = random_chain(rng, 30, gamma_range=(0.0, 0.0))
            dense = np.diag(material_matrix(chain)) @ gauge_capacitance(chain).to_dense()
            oracle = np.sort(np.linalg.eigvals(dense).real)
            lam = spectrum(chain).eigenvalues
            assert np.max(np.abs(lam - oracle)) < 1e-9

    def test_nonreciprocal_against_dense_oracle(self, rng):
        for _ in range(5):
            chain = random_chain(rng, 30, gamma_range=(0.5, 1.5))
            dense = np.diag(material_matrix(chain)) @ gauge_capacitance(chain).to_dense()
            vals = np.linalg.eigvals(dense)
            assert np.max(np.abs(vals.imag)) < 1e-8
            lam = spectrum(chain).eigenvalues
            assert np.max(np.abs(lam - np.sort(vals.real))) < 1e-8

    def test_symvectors_orthonormal(self, rng):
        chain = random_chain(rng, 40, gamma_range=(0.0, 1.0))
        w = spectrum(chain).symvectors
        gram = w.T @ w
        assert np.max(np.abs(gram - np.eye(w.shape[1]))) < 1e-10

    def test_gauge_vectors_match_dense_eigenvectors(self, rng):
        chain = random_chain(rng, 16, gamma_range=(0.1, 0.6))
        data = spectrum(chain)
        dense = np.diag(material_matrix(chain)) @ gauge_capacitance(chain).to_dense()
        vals, vecs = np.linalg.eig(dense)
        order = np.argsort(vals.real)
        vecs = vecs[:, order].real
        for k in range(chain.num_resonators):
            u = data.gauge_vector(k)
            u = u / np.linalg.norm(u)
            o = vecs[:, k] / np.linalg.norm(vecs[:, k])
            assert abs(np.dot(u, o)) > 1 - 1e-6

    def test_gauge_vectors_sup_normalised(self, rng):
        chain = random_chain(rng, 20, gamma_range=(0.0, 1.0))
        data = spectrum(chain)
        assert np.allclose(np.max(data.log_magnitude, axis=0), 0.0, atol=1e-14)

    def test_edge_decay_slope(self):
        # uniform gamma pushes the log-domain gauge vectors down along the
        # chain at roughly half the per-site decay budget
        gamma = 0.5
        lib = standard_blocks(gamma, monomer_probability=0.0)  # periodic dimers
        chain = assemble_chain(lib, sample_sequence(lib, 100, seed=1))
        data = spectrum(chain)
        n = chain.num_resonators
        k = data.count // 2
        logmag = data.log_magnitude[:, k]
        window = slice(n // 4, 3 * n // 4)
        sites = np.arange(n)[window]
        slope = np.polyfit(sites, logmag[window], 1)[0]
        assert slope == pytest.approx(-0.5 * gamma * chain.ell.mean(), rel=0.2)

    def test_lambda_max_truncates(self, rng):
        chain = random_chain(rng, 30, gamma_range=(0.0, 1.0))
        full = spectrum(chain)
        cut = float(np.median(full.eigenvalues))
        part = spectrum(chain, lambda_max=cut)
        assert part.count == int(np.sum(full.eigenvalues <= cut))
        assert np.allclose(part.eigenvalues, full.eigenvalues[: part.count])


class TestModeProfile:
    def test_constant_vector(self):
        chain = assemble_chain(standard_blocks(1.0), BlockSequence(np.array([0, 1, 0])))
        n = chain.num_resonators
        data = SpectralData(
            eigenvalues=np.zeros(1),
            symvectors=np.ones((n, 1)) / np.sqrt(n),
            signs=np.ones((n, 1), dtype=np.int8),
            log_magnitude=np.zeros((n, 1)),
        )
        prof = mode_profile(chain, data, 0, margin=2.0)
        assert np.allclose(prof.values, 1.0)

    def test_single_gap_ramp(self):
        chain = Chain.from_resonators(
            [ResonatorParams(1, 1, 1, 0), ResonatorParams(1, 1, 1, 0)]
        )
        data = SpectralData(
            eigenvalues=np.zeros(1),
            symvectors=np.ones((2, 1)),
            signs=np.array([[1], [0]], dtype=np.int8),
            log_magnitude=np.array([[0.0], [-np.inf]]),
        )
        prof = mode_profile(chain, data, 0, margin=0.5)
        # constant 1 on the first resonator, affine down to 0 across the gap
        left, right = chain.coordinates()
        inside_first = (prof.x >= left[0]) & (prof.x <= right[0])
        assert np.allclose(prof.values[inside_first], 1.0)
        mid_gap = 0.5 * (right[0] + left[1])
        assert np.interp(mid_gap, prof.x, prof.values) == pytest.approx(0.5)
        inside_second = (prof.x >= left[1]) & (prof.x <= right[1])
        assert np.allclose(prof.values[inside_second], 0.0)

    def test_constant_outside_array(self):
        chain = assemble_chain(standard_blocks(0.5), BlockSequence(np.array([0, 1])))
        data = spectrum(chain)
        prof = mode_profile(chain, data, 0, margin=3.0)
        left, right = chain.coordinates()
        outside_left = prof.x < left[0]
        outside_right = prof.x > right[-1]
        assert np.allclose(prof.values[outside_left], prof.values[outside_left][0])
        assert np.allclose(prof.values[outside_right], prof.values[outside_right][-1])

    def test_piecewise_constant_on_resonators(self):
        chain = assemble_chain(standard_blocks(0.5), BlockSequence(np.array([1, 0])))
        data = spectrum(chain)
        prof = mode_profile(chain, data, 1)
        left, right = chain.coordinates()
        for j in range(chain.num_resonators):
            mask = (prof.x >= left[j]) & (prof.x <= right[j])
            vals = prof.values[mask]
            assert np.allclose(vals, vals[0])

    def test_skin_mode_peaks_left(self):
        # oracle: the top mode of this realisation has a negative Lyapunov
        # exponent, so its profile must peak in the leftmost quarter
        lib = standard_blocks(1.0)
        chain = assemble_chain(lib, sample_sequence(lib, 50, seed=2))
        data = spectrum(chain)
        k = int(np.argmax(data.eigenvalues))
        assert total_lyapunov(chain, complex(data.eigenvalues[k])).total < 0
        prof = mode_profile(chain, data, k, margin=1.0)
        span = prof.x[-1] - prof.x[0]
        xmax = prof.x[int(np.argmax(np.abs(prof.values)))]
        assert (xmax - prof.x[0]) / span < 0.25

    def test_index_out_of_range(self):
        chain = monomer_chain()
        data = spectrum(chain)
        with pytest.raises(IndexError):
            mode_profile(chain, data, 5)


def test_eigenvalues_only_path_matches(rng):
    chain = random_chain(rng, 25, gamma_range=(0.0, 1.0))
    assert np.allclose(eigenvalues(chain), spectrum(chain).eigenvalues)
