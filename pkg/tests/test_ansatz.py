from collections import Counter

import numpy as np
import pytest

from irlnqs.ansatz import (
    Architecture,
    AnsatzParameters,
    conditional,
    init_parameters,
    load_checkpoint,
    log_amplitude,
    log_derivative,
    sample,
    save_checkpoint,
)
from irlnqs.hilbert import OccupationVector, Sector, enumerate_sector


@pytest.fixture(scope="module")
def small_setup():
    sector = Sector(4, 1, 1)
    arch = Architecture(4, 3)
    params = init_parameters(arch, seed=5)
    return arch, sector, params


def test_param_count_formula():
    for m, h in [(4, 1), (4, 3), (8, 16), (12, 42)]:
        arch = Architecture(m, h)
        assert arch.param_count == h * (3 * m + 5) + m + 3


def test_theta_length_checked():
    arch = Architecture(4, 2)
    with pytest.raises(ValueError):
        AnsatzParameters(arch, np.zeros(arch.param_count + 1))


def test_probabilities_sum_to_one_in_sector(small_setup):
    arch, sector, params = small_setup
    total = 0.0
    for x in enumerate_sector(sector):
        total += np.exp(2.0 * log_amplitude(params, x, sector).log_prob_half)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_amplitude_vanishes_outside_sector(small_setup):
    arch, sector, params = small_setup
    outside = OccupationVector(0b0011, 4)  # two spin-up electrons
    assert not sector.contains(outside)
    assert log_amplitude(params, outside, sector).log_prob_half == -np.inf


def test_conditionals_are_normalized_and_masked(small_setup):
    arch, sector, params = small_setup
    p0, p1 = conditional(params, (), 0, sector)
    assert p0 + p1 == pytest.approx(1.0, abs=1e-12)
    # once the single up electron is placed, the other up orbital is forced empty
    p0, p1 = conditional(params, (1,), 1, sector)
    assert (p0, p1) == (1.0, 0.0)
    # if orbital 0 is empty, orbital 1 must hold the up electron
    p0, p1 = conditional(params, (0,), 1, sector)
    assert (p0, p1) == (0.0, 1.0)


def test_log_derivative_matches_finite_differences(small_setup):
    arch, sector, params = small_setup
    x = enumerate_sector(sector)[2]
    analytic = log_derivative(params, x, sector)
    step = 1e-6
    for k in range(0, arch.param_count, 7):
        theta_plus = params.theta.copy()
        theta_plus[k] += step
        theta_minus = params.theta.copy()
        theta_minus[k] -= step
        lp = log_amplitude(AnsatzParameters(arch, theta_plus), x, sector)
        lm = log_amplitude(AnsatzParameters(arch, theta_minus), x, sector)
        fd = (lp.value - lm.value) / (2.0 * step)
        scale = max(1.0, abs(analytic[k]))
        assert abs(analytic[k] - fd) / scale < 1e-6


def test_log_derivative_outside_sector_raises(small_setup):
    arch, sector, params = small_setup
    with pytest.raises(ValueError):
        log_derivative(params, OccupationVector(0b0011, 4), sector)


def test_sampler_stays_in_sector(small_setup):
    arch, sector, params = small_setup
    draws = sample(params, sector, 500, seed=17)
    assert len(draws) == 500
    assert all(sector.contains(x) for x in draws)


def test_sampler_frequencies_match_probabilities(small_setup):
    arch, sector, params = small_setup
    n = 20000
    draws = sample(params, sector, n, seed=29)
    counts = Counter(x.bits for x in draws)
    for x in enumerate_sector(sector):
        prob = np.exp(2.0 * log_amplitude(params, x, sector).log_prob_half)
        freq = counts.get(x.bits, 0) / n
        # binomial standard error at 5 sigma
        assert abs(freq - prob) < 5.0 * np.sqrt(prob * (1 - prob) / n) + 1e-12


def test_sampler_is_deterministic(small_setup):
    arch, sector, params = small_setup
    a = [x.bits for x in sample(params, sector, 50, seed=3)]
    b = [x.bits for x in sample(params, sector, 50, seed=3)]
    assert a == b


def test_initial_state_is_real_positive(small_setup):
    arch, sector, params = small_setup
    for x in enumerate_sector(sector):
        assert log_amplitude(params, x, sector).phase == 0.0


def test_checkpoint_round_trip(tmp_path, small_setup):
    arch, sector, params = small_setup
    path = str(tmp_path / "state.chk")
    save_checkpoint(params, sector, path)
    loaded, loaded_sector = load_checkpoint(path)
    assert loaded_sector == sector
    assert loaded.architecture == arch
    assert np.array_equal(loaded.theta, params.theta)


def test_checkpoint_length_mismatch_raises(tmp_path, small_setup):
    arch, sector, params = small_setup
    path = str(tmp_path / "state.chk")
    save_checkpoint(params, sector, path)
    with open(path) as fh:
        lines = fh.readlines()
    with open(path, "w") as fh:
        fh.writelines(lines[:-1])
    with pytest.raises(ValueError):
        load_checkpoint(path)
