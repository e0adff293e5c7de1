from math import comb

import numpy as np
import pytest

from irlnqs.hilbert import (
    OccupationVector,
    Sector,
    SectorTooLargeError,
    classify_excitation,
    enumerate_sector,
)


def bubble_parity(occupied_from, hole, particle):
    """Permutation parity of a single hole -> particle move, computed by
    list surgery instead of bit counting."""
    orbitals = list(occupied_from)
    orbitals[orbitals.index(hole)] = particle
    swaps = 0
    for i in range(len(orbitals)):
        for j in range(i + 1, len(orbitals)):
            if orbitals[i] > orbitals[j]:
                orbitals[i], orbitals[j] = orbitals[j], orbitals[i]
                swaps += 1
    return -1 if swaps % 2 else 1


def test_occupation_vector_counts():
    x = OccupationVector(0b0101, 4)
    assert x.count_up() == 1
    assert x.count_down() == 1
    assert x.occupied_orbitals() == (0, 2)


def test_sector_size_formula():
    for m, nu, nd in [(4, 1, 1), (8, 2, 2), (12, 2, 2), (20, 5, 5)]:
        sector = Sector(m, nu, nd)
        assert sector.size == comb(m // 2, nu) * comb(m // 2, nd)


def test_enumeration_is_complete_and_sorted():
    sector = Sector(8, 2, 1)
    configs = enumerate_sector(sector)
    assert len(configs) == sector.size
    bits = [c.bits for c in configs]
    assert bits == sorted(bits)
    assert len(set(bits)) == len(bits)
    for c in configs:
        assert sector.contains(c)


def test_enumeration_cap():
    sector = Sector(20, 5, 5)
    with pytest.raises(SectorTooLargeError):
        enumerate_sector(sector, cap=100)


def test_single_excitation_classification():
    sector = Sector(8, 2, 2)
    configs = enumerate_sector(sector)
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(400):
        x, y = rng.choice(len(configs), size=2, replace=False)
        x, y = configs[x], configs[y]
        exc = classify_excitation(x, y)
        diff = bin(x.bits ^ y.bits).count("1")
        assert exc.degree == diff // 2
        if exc.degree == 1:
            (hole,), (particle,) = exc.holes, exc.particles
            assert x.occupied(hole) and not x.occupied(particle)
            expected = bubble_parity(x.occupied_orbitals(), hole, particle)
            assert exc.sign == expected
            checked += 1
    assert checked > 20


def test_double_excitation_sign_is_composition():
    # a double is two sequential single moves; parity must compose
    sector = Sector(8, 2, 2)
    configs = enumerate_sector(sector)
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(600):
        i, j = rng.choice(len(configs), size=2, replace=False)
        x, y = configs[i], configs[j]
        exc = classify_excitation(x, y)
        if exc.degree != 2:
            continue
        (h1, h2), (p1, p2) = exc.holes, exc.particles
        mid_bits = (x.bits & ~(1 << h1)) | (1 << p1)
        mid = OccupationVector(mid_bits, x.n_orbitals)
        s1 = bubble_parity(x.occupied_orbitals(), h1, p1)
        s2 = bubble_parity(mid.occupied_orbitals(), h2, p2)
        assert exc.sign == s1 * s2
        checked += 1
    assert checked > 20


def test_identical_configurations_are_degree_zero():
    sector = Sector(4, 1, 1)
    x = enumerate_sector(sector)[0]
    exc = classify_excitation(x, x)
    assert exc.degree == 0
    assert exc.sign == 1
