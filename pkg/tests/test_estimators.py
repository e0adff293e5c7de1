import numpy as np
import pytest

from irlnqs import ansatz as ans
from irlnqs.estimators import (
    DensePCapError,
    build_batch,
    build_connected_cache,
    dense_heff,
    dense_qgt,
    energy_gradient,
    estimate_energy,
    heff_matvec,
    heff_offdiag_matvec,
)
from irlnqs.hamiltonian import build_dense_hamiltonian
from irlnqs.hilbert import enumerate_sector


@pytest.fixture(scope="module")
def setup(h2_integrals, h2_sector):
    """Real-positive initial state: E_loc is real, so the collapsed
    correlator is exactly symmetric and matches its dense oracle."""
    arch = ans.Architecture(h2_sector.n_orbitals, 3)
    params = ans.init_parameters(arch, seed=9)
    batch = build_batch(params, h2_integrals, h2_sector)
    energy = estimate_energy(batch)
    return params, batch, energy


@pytest.fixture(scope="module")
def generic_setup(h2_integrals, h2_sector):
    """Generic complex state; only the connected completion is symmetric here."""
    arch = ans.Architecture(h2_sector.n_orbitals, 3)
    init = ans.init_parameters(arch, seed=9)
    rng = np.random.default_rng(41)
    theta = init.theta + 0.1 * rng.standard_normal(arch.param_count)
    params = ans.AnsatzParameters(arch, theta)
    batch = build_batch(params, h2_integrals, h2_sector)
    energy = estimate_energy(batch)
    return params, batch, energy


def state_vector(params, sector):
    amps = np.array(
        [
            np.exp(ans.log_amplitude(params, x, sector).value)
            for x in enumerate_sector(sector)
        ]
    )
    return amps / np.linalg.norm(amps)


def sandwich_heff(params, batch, energy, integrals, sector):
    """Dense oracle for the connected curvature, built from the sector
    Hamiltonian sandwiched between the tangent vectors psi(x) * O_c(x)."""
    hmat = build_dense_hamiltonian(integrals, sector)
    psi = state_vector(params, sector)
    o_bar = batch.weights @ batch.o_matrix
    tangent = psi[:, None] * (batch.o_matrix - o_bar)
    shifted = hmat - energy.mean * np.eye(len(psi))
    return (tangent.conj().T @ shifted @ tangent).real


class TestBatch:
    def test_exact_weights_are_born_probabilities(self, setup, h2_sector):
        params, batch, _ = setup
        psi = state_vector(params, h2_sector)
        assert np.max(np.abs(batch.weights - np.abs(psi) ** 2)) < 1e-12
        assert batch.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert batch.exact

    def test_stochastic_batch_dedups_caches(self, setup, h2_integrals, h2_sector):
        params, _, _ = setup
        batch = build_batch(params, h2_integrals, h2_sector, n_samples=64, seed=13)
        assert batch.n_samples == 64 and not batch.exact
        assert np.all(batch.weights == 1.0 / 64)
        rows = {}
        for n, x in enumerate(batch.configs):
            if x.bits in rows:
                m = rows[x.bits]
                assert batch.e_loc[n] == batch.e_loc[m]
                assert np.array_equal(batch.o_matrix[n], batch.o_matrix[m])
            rows[x.bits] = n

    def test_caches_are_write_protected(self, setup):
        _, batch, _ = setup
        with pytest.raises(ValueError):
            batch.weights[0] = 0.0


class TestEnergy:
    def test_exact_energy_is_rayleigh_quotient(
        self, setup, h2_integrals, h2_sector
    ):
        params, batch, energy = setup
        hmat = build_dense_hamiltonian(h2_integrals, h2_sector)
        psi = state_vector(params, h2_sector)
        expected = (psi.conj() @ hmat @ psi).real
        assert energy.mean == pytest.approx(expected, abs=1e-12)
        assert energy.std_error == 0.0

    def test_gradient_matches_finite_differences(
        self, setup, h2_integrals, h2_sector
    ):
        params, batch, energy = setup
        grad = energy_gradient(batch, energy)
        arch = params.architecture
        step = 1e-6
        for k in range(0, arch.param_count, 11):
            plus = params.theta.copy()
            plus[k] += step
            minus = params.theta.copy()
            minus[k] -= step
            e_plus = estimate_energy(
                build_batch(ans.AnsatzParameters(arch, plus), h2_integrals, h2_sector)
            ).mean
            e_minus = estimate_energy(
                build_batch(ans.AnsatzParameters(arch, minus), h2_integrals, h2_sector)
            ).mean
            fd = (e_plus - e_minus) / (2.0 * step)
            assert abs(grad[k] - fd) < 1e-6 * max(1.0, abs(fd))


class TestMatvec:
    def test_matches_dense_on_random_vectors(self, setup):
        _, batch, energy = setup
        dense = dense_heff(batch, energy)
        rng = np.random.default_rng(55)
        for _ in range(20):
            v = rng.standard_normal(batch.param_count)
            w = heff_matvec(batch, energy, v)
            assert np.max(np.abs(w - dense @ v)) < 1e-10 * max(
                1.0, np.max(np.abs(dense @ v))
            )

    def test_unit_vectors_extract_dense_columns(self, setup):
        _, batch, energy = setup
        dense = dense_heff(batch, energy)
        for k in range(0, batch.param_count, 5):
            e_k = np.zeros(batch.param_count)
            e_k[k] = 1.0
            assert np.max(np.abs(heff_matvec(batch, energy, e_k) - dense[:, k])) < 1e-12

    def test_linearity(self, setup):
        _, batch, energy = setup
        rng = np.random.default_rng(77)
        v1 = rng.standard_normal(batch.param_count)
        v2 = rng.standard_normal(batch.param_count)
        lhs = heff_matvec(batch, energy, 2.0 * v1 - 3.0 * v2)
        rhs = 2.0 * heff_matvec(batch, energy, v1) - 3.0 * heff_matvec(
            batch, energy, v2
        )
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_wrong_length_raises(self, setup):
        _, batch, energy = setup
        with pytest.raises(ValueError):
            heff_matvec(batch, energy, np.zeros(batch.param_count + 1))

    def test_nonfinite_input_raises(self, setup):
        _, batch, energy = setup
        v = np.zeros(batch.param_count)
        v[0] = np.nan
        with pytest.raises(ValueError):
            heff_matvec(batch, energy, v)


class TestConnectedCompletion:
    def test_full_product_matches_sandwich_oracle(
        self, generic_setup, h2_integrals, h2_sector
    ):
        params, batch, energy = generic_setup
        cache = build_connected_cache(params, h2_integrals, h2_sector, batch)
        oracle = sandwich_heff(params, batch, energy, h2_integrals, h2_sector)
        rng = np.random.default_rng(88)
        for _ in range(10):
            v = rng.standard_normal(batch.param_count)
            w = heff_matvec(batch, energy, v) + heff_offdiag_matvec(batch, cache, v)
            ref = oracle @ v
            assert np.max(np.abs(w - ref)) < 1e-10 * max(1.0, np.max(np.abs(ref)))

    def test_offdiag_linearity(self, generic_setup, h2_integrals, h2_sector):
        params, batch, _ = generic_setup
        cache = build_connected_cache(params, h2_integrals, h2_sector, batch)
        rng = np.random.default_rng(99)
        v1 = rng.standard_normal(batch.param_count)
        v2 = rng.standard_normal(batch.param_count)
        lhs = heff_offdiag_matvec(batch, cache, v1 + 0.5 * v2)
        rhs = heff_offdiag_matvec(batch, cache, v1) + 0.5 * heff_offdiag_matvec(
            batch, cache, v2
        )
        assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestDenseOracles:
    def test_dense_heff_is_symmetric(self, setup):
        _, batch, energy = setup
        dense = dense_heff(batch, energy)
        assert np.array_equal(dense, dense.T)

    def test_qgt_is_positive_semidefinite(self, setup):
        _, batch, _ = setup
        qgt = dense_qgt(batch)
        values = np.linalg.eigvalsh(qgt)
        assert values.min() > -1e-12

    def test_dense_cap_enforced(self, setup):
        _, batch, energy = setup
        with pytest.raises(DensePCapError):
            dense_heff(batch, energy, cap=batch.param_count - 1)
        with pytest.raises(DensePCapError):
            dense_qgt(batch, cap=batch.param_count - 1)
