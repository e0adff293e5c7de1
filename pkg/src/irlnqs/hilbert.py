"""Occupation-number basis states in fixed particle-number sectors.

Spin-orbital layout is blocked: indices 0..M/2-1 are the spin-up spatial
orbitals, M/2..M-1 the spin-down ones.  All types here are immutable
values and every operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

MAX_ORBITALS = 64
DEFAULT_ENUMERATION_CAP = 10**6


class SectorTooLargeError(Exception):
    """Raised when a sector exceeds the configured enumeration cap."""


@dataclass(frozen=True)
class OccupationVector:
    """A Fock basis state |n> as a bitmask over M spin-orbitals."""

    bits: int
    n_orbitals: int

    def __post_init__(self):
        if self.n_orbitals % 2 != 0:
            raise ValueError(f"spin-orbital count must be even, got {self.n_orbitals}")
        if self.n_orbitals > MAX_ORBITALS:
            raise ValueError(
                f"at most {MAX_ORBITALS} spin-orbitals supported, got {self.n_orbitals}"
            )
        if self.bits < 0 or self.bits >> self.n_orbitals:
            raise ValueError("bitmask out of range for orbital count")

    def occupied(self, i: int) -> bool:
        return bool((self.bits >> i) & 1)

    def occupied_orbitals(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n_orbitals) if self.occupied(i))

    def count_up(self) -> int:
        half = self.n_orbitals // 2
        return (self.bits & ((1 << half) - 1)).bit_count()

    def count_down(self) -> int:
        half = self.n_orbitals // 2
        return (self.bits >> half).bit_count()


@dataclass(frozen=True)
class Sector:
    """Fixed particle-number sector (M spin-orbitals, N_up, N_down)."""

    n_orbitals: int
    n_up: int
    n_down: int

    def __post_init__(self):
        if self.n_orbitals % 2 != 0:
            raise ValueError(f"spin-orbital count must be even, got {self.n_orbitals}")
        if self.n_orbitals > MAX_ORBITALS:
            raise ValueError(
                f"at most {MAX_ORBITALS} spin-orbitals supported, got {self.n_orbitals}"
            )
        half = self.n_orbitals // 2
        if not (0 <= self.n_up <= half and 0 <= self.n_down <= half):
            raise ValueError(
                f"electron counts ({self.n_up}, {self.n_down}) out of range for "
                f"{self.n_orbitals} spin-orbitals"
            )

    @property
    def size(self) -> int:
        half = self.n_orbitals // 2
        return comb(half, self.n_up) * comb(half, self.n_down)

    def contains(self, x: OccupationVector) -> bool:
        return (
            x.n_orbitals == self.n_orbitals
            and x.count_up() == self.n_up
            and x.count_down() == self.n_down
        )


@dataclass(frozen=True)
class Excitation:
    """Difference between two occupation vectors.

    degree is popcount(x XOR x')/2; holes/particles list the vacated and
    filled orbital indices in ascending order.  For degree > 2 the sign is
    unspecified (those matrix elements vanish anyway).
    """

    degree: int
    holes: tuple[int, ...]
    particles: tuple[int, ...]
    sign: int


def enumerate_sector(
    sector: Sector, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[OccupationVector]:
    """All configurations of a sector in ascending bitmask order."""
    if sector.size > cap:
        raise SectorTooLargeError(
            f"sector has {sector.size} configurations, above the cap of {cap}; "
            "use stochastic mode"
        )
    half = sector.n_orbitals // 2
    ups = [sum(1 << i for i in occ) for occ in combinations(range(half), sector.n_up)]
    downs = [
        sum(1 << (half + i) for i in occ)
        for occ in combinations(range(half), sector.n_down)
    ]
    masks = sorted(u | d for u in ups for d in downs)
    return [OccupationVector(m, sector.n_orbitals) for m in masks]


def _move_sign(bits: int, hole: int, particle: int) -> int:
    """Parity of moving one electron hole -> particle on the state `bits`.

    Counts occupied orbitals strictly between the two indices; `bits` must
    have the hole occupied and the particle empty.
    """
    lo, hi = (hole, particle) if hole < particle else (particle, hole)
    between = bits & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))
    return -1 if between.bit_count() % 2 else 1


def classify_excitation(x: OccupationVector, x2: OccupationVector) -> Excitation:
    """Classify the excitation taking |x> to |x2> with fermionic parity.

    The sign composes the per-pair parities multiplicatively, moving the
    lowest hole to the lowest particle first (equivalent to sequential
    creation/annihilation operator application).
    """
    if x.n_orbitals != x2.n_orbitals:
        raise ValueError("occupation vectors have different orbital counts")
    diff = x.bits ^ x2.bits
    degree = diff.bit_count() // 2
    holes = tuple(i for i in range(x.n_orbitals) if (diff >> i) & 1 and x.occupied(i))
    particles = tuple(
        i for i in range(x.n_orbitals) if (diff >> i) & 1 and x2.occupied(i)
    )
    if degree == 0:
        return Excitation(0, (), (), 1)
    if degree > 2 or len(holes) != len(particles):
        return Excitation(degree if len(holes) == len(particles) else -1, holes, particles, 1)
    sign = 1
    bits = x.bits
    for h, p in zip(holes, particles):
        sign *= _move_sign(bits, h, p)
        bits = (bits & ~(1 << h)) | (1 << p)
    return Excitation(degree, holes, particles, sign)
