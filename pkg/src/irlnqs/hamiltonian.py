"""Second-quantized molecular Hamiltonians from FCIDUMP integrals.

Integrals are stored in chemists' notation (ij|kl) with the 8-fold real
permutation symmetry expanded at parse time.  Matrix elements between
occupation vectors follow the Slater-Condon rules; the spin-orbital
layout is the blocked convention of :mod:`irlnqs.hilbert`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .hilbert import (
    OccupationVector,
    Sector,
    classify_excitation,
    enumerate_sector,
)

DROP_TOLERANCE = 1e-14
DEFAULT_DENSE_CAP = 2 * 10**4
DUPLICATE_TOLERANCE = 1e-12


class FcidumpError(Exception):
    """Malformed FCIDUMP content."""


class DenseCapError(Exception):
    """Sector too large for the dense oracle."""


@dataclass(frozen=True)
class MolecularIntegrals:
    """Core energy plus one- and two-electron integrals (Hartree).

    h is (n, n) symmetric; g is (n, n, n, n) in chemists' notation with
    full 8-fold symmetry.  Immutable after construction.
    """

    n_spatial: int
    n_electrons: int
    ms2: int
    e_core: float
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.h.setflags(write=False)
        self.g.setflags(write=False)

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_spatial

    def sector(self) -> Sector:
        n_up = (self.n_electrons + self.ms2) // 2
        n_down = self.n_electrons - n_up
        return Sector(self.n_spin_orbitals, n_up, n_down)


@dataclass(frozen=True)
class ConnectedEntry:
    config: OccupationVector
    element: float


def _set_g(g: np.ndarray, i: int, j: int, k: int, l: int, value: float):
    for a, b, c, d in (
        (i, j, k, l),
        (j, i, k, l),
        (i, j, l, k),
        (j, i, l, k),
        (k, l, i, j),
        (l, k, i, j),
        (k, l, j, i),
        (l, k, j, i),
    ):
        old = g[a, b, c, d]
        if old != 0.0 and abs(old - value) > DUPLICATE_TOLERANCE:
            raise FcidumpError(
                f"conflicting duplicate integral ({a + 1} {b + 1}|{c + 1} {d + 1}): "
                f"{old!r} vs {value!r}"
            )
        g[a, b, c, d] = value


def parse_fcidump(text: str | Iterable[str]) -> MolecularIntegrals:
    """Parse Molpro-convention FCIDUMP text into MolecularIntegrals.

    The namelist header must define NORB and NELEC (MS2 defaults to 0);
    ORBSYM/ISYM are tolerated and ignored.  Body lines are
    ``value i j k l`` with 1-based indices: (0 0 0 0) is the core energy,
    (i j 0 0) is h_ij, anything else the chemists' integral (ij|kl).
    """
    if not isinstance(text, str):
        text = "".join(text)

    header_match = re.search(r"&END|/", text, flags=re.IGNORECASE)
    if header_match is None:
        # tolerate headerless separation: first line(s) up to the last '='-bearing line
        raise FcidumpError("missing &END (or '/') terminator after namelist header")
    header = text[: header_match.start()]
    body = text[header_match.end():]

    fields = {}
    for key, value in re.findall(r"([A-Za-z0-9_]+)\s*=\s*([^=,\s]+(?:\s*,\s*[-\d]+)*)",
                                 header):
        fields[key.upper()] = value
    try:
        n_spatial = int(fields["NORB"].split(",")[0])
        n_electrons = int(fields["NELEC"].split(",")[0])
    except (KeyError, ValueError) as exc:
        raise FcidumpError(f"malformed FCIDUMP header: {exc}") from exc
    ms2 = int(fields.get("MS2", "0").split(",")[0])
    if n_spatial < 1:
        raise FcidumpError(f"NORB must be positive, got {n_spatial}")

    e_core = 0.0
    h = np.zeros((n_spatial, n_spatial))
    g = np.zeros((n_spatial,) * 4)
    seen_core = False
    for lineno, line in enumerate(body.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FcidumpError(f"body line {lineno}: expected 'value i j k l', got {line!r}")
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError as exc:
            raise FcidumpError(f"body line {lineno}: {exc}") from exc
        for idx in (i, j, k, l):
            if idx < 0 or idx > n_spatial:
                raise FcidumpError(f"body line {lineno}: index {idx} out of range 0..{n_spatial}")
        if i == j == k == l == 0:
            if seen_core and abs(e_core - value) > DUPLICATE_TOLERANCE:
                raise FcidumpError(f"body line {lineno}: conflicting core energy")
            e_core = value
            seen_core = True
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpError(f"body line {lineno}: bad one-electron indices")
            old = h[i - 1, j - 1]
            if old != 0.0 and abs(old - value) > DUPLICATE_TOLERANCE:
                raise FcidumpError(f"body line {lineno}: conflicting h[{i},{j}]")
            h[i - 1, j - 1] = value
            h[j - 1, i - 1] = value
        elif 0 in (i, j, k, l):
            raise FcidumpError(f"body line {lineno}: bad two-electron indices")
        else:
            _set_g(g, i - 1, j - 1, k - 1, l - 1, value)

    return MolecularIntegrals(
        n_spatial=n_spatial,
        n_electrons=n_electrons,
        ms2=ms2,
        e_core=e_core,
        h=h,
        g=g,
    )


def _spatial(i: int, half: int) -> int:
    return i if i < half else i - half


def _same_spin(i: int, j: int, half: int) -> bool:
    return (i < half) == (j < half)


def matrix_element(
    integrals: MolecularIntegrals, x: OccupationVector, x2: OccupationVector
) -> float:
    """Slater-Condon matrix element <x2|H|x>."""
    if x.n_orbitals != x2.n_orbitals or x.n_orbitals != integrals.n_spin_orbitals:
        raise ValueError("occupation vectors do not match the integral set")
    if (x.count_up(), x.count_down()) != (x2.count_up(), x2.count_down()):
        raise ValueError("occupation vectors lie in different sectors")
    half = integrals.n_spatial
    h, g = integrals.h, integrals.g
    exc = classify_excitation(x, x2)

    if exc.degree == 0:
        occ = x.occupied_orbitals()
        val = integrals.e_core
        for i in occ:
            val += h[_spatial(i, half), _spatial(i, half)]
        for a, i in enumerate(occ):
            si = _spatial(i, half)
            for j in occ[a + 1:]:
                sj = _spatial(j, half)
                val += g[si, si, sj, sj]
                if _same_spin(i, j, half):
                    val -= g[si, sj, sj, si]
        return val

    if exc.degree == 1:
        m, p = exc.holes[0], exc.particles[0]
        if not _same_spin(m, p, half):
            return 0.0
        sm, sp = _spatial(m, half), _spatial(p, half)
        val = h[sm, sp]
        for j in x.occupied_orbitals():
            if j == m:
                continue
            sj = _spatial(j, half)
            val += g[sm, sp, sj, sj]
            if _same_spin(m, j, half):
                val -= g[sm, sj, sj, sp]
        return exc.sign * val

    if exc.degree == 2:
        (m, n), (p, q) = exc.holes, exc.particles
        sm, sn = _spatial(m, half), _spatial(n, half)
        sp, sq = _spatial(p, half), _spatial(q, half)
        direct = (
            g[sm, sp, sn, sq]
            if _same_spin(m, p, half) and _same_spin(n, q, half)
            else 0.0
        )
        cross = (
            g[sm, sq, sn, sp]
            if _same_spin(m, q, half) and _same_spin(n, p, half)
            else 0.0
        )
        return exc.sign * (direct - cross)

    return 0.0


def connected_configurations(
    integrals: MolecularIntegrals,
    x: OccupationVector,
    drop_tolerance: float = DROP_TOLERANCE,
) -> list[ConnectedEntry]:
    """Diagonal entry plus all spin-conserving singles and doubles of x.

    Entries with |element| <= drop_tolerance are omitted (the diagonal is
    always kept).  Order is deterministic: diagonal first, then ascending
    bitmask of the partner configuration.
    """
    half = integrals.n_spatial
    m_orb = integrals.n_spin_orbitals
    occ = x.occupied_orbitals()
    occ_up = [i for i in occ if i < half]
    occ_dn = [i for i in occ if i >= half]
    vir_up = [i for i in range(half) if not x.occupied(i)]
    vir_dn = [i for i in range(half, m_orb) if not x.occupied(i)]

    partners = []
    # singles, spin-conserving
    for holes, virs in ((occ_up, vir_up), (occ_dn, vir_dn)):
        for hole in holes:
            for part in virs:
                partners.append((x.bits & ~(1 << hole)) | (1 << part))
    # doubles: same-spin pairs and opposite-spin pairs
    for holes, virs in ((occ_up, vir_up), (occ_dn, vir_dn)):
        for a in range(len(holes)):
            for b in range(a + 1, len(holes)):
                for c in range(len(virs)):
                    for d in range(c + 1, len(virs)):
                        bits = x.bits & ~(1 << holes[a]) & ~(1 << holes[b])
                        partners.append(bits | (1 << virs[c]) | (1 << virs[d]))
    for hu in occ_up:
        for hd in occ_dn:
            for pu in vir_up:
                for pd in vir_dn:
                    bits = x.bits & ~(1 << hu) & ~(1 << hd)
                    partners.append(bits | (1 << pu) | (1 << pd))

    entries = [ConnectedEntry(x, matrix_element(integrals, x, x))]
    for bits in sorted(partners):
        x2 = OccupationVector(bits, m_orb)
        element = matrix_element(integrals, x, x2)
        if abs(element) > drop_tolerance:
            entries.append(ConnectedEntry(x2, element))
    return entries


def local_energy(
    logpsi: Callable[[OccupationVector], complex],
    integrals: MolecularIntegrals,
    x: OccupationVector,
) -> complex:
    """E_loc(x) = sum_x' <x|H|x'> psi(x')/psi(x) over connected configurations."""
    log_x = complex(logpsi(x))
    if not (np.isfinite(log_x.real) and np.isfinite(log_x.imag)):
        raise ValueError("log-amplitude is not finite at the reference configuration")
    total = 0.0 + 0.0j
    for entry in connected_configurations(integrals, x):
        log_x2 = complex(logpsi(entry.config))
        if log_x2.real == -np.inf:
            continue
        total += entry.element * np.exp(log_x2 - log_x)
    return total


def build_dense_hamiltonian(
    integrals: MolecularIntegrals, sector: Sector, cap: int = DEFAULT_DENSE_CAP
) -> np.ndarray:
    """Explicit sector Hamiltonian in enumerate_sector order."""
    if sector.size > cap:
        raise DenseCapError(
            f"sector has {sector.size} configurations, above the dense cap of {cap}"
        )
    configs = enumerate_sector(sector)
    index = {c.bits: i for i, c in enumerate(configs)}
    n = len(configs)
    mat = np.zeros((n, n))
    for i, x in enumerate(configs):
        for entry in connected_configurations(integrals, x, drop_tolerance=0.0):
            mat[index[entry.config.bits], i] = entry.element
    return mat


def dense_fci_ground_state(
    integrals: MolecularIntegrals, sector: Sector, cap: int = DEFAULT_DENSE_CAP
) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of the dense sector Hamiltonian.

    Amplitudes are unit-norm in enumerate_sector order, with the sign fixed
    so the largest-magnitude component is positive.
    """
    mat = build_dense_hamiltonian(integrals, sector, cap=cap)
    asym = np.max(np.abs(mat - mat.T)) if mat.size else 0.0
    if asym > 1e-12 * max(1.0, np.max(np.abs(mat))):
        raise RuntimeError(f"dense sector Hamiltonian asymmetric by {asym}")
    values, vectors = np.linalg.eigh((mat + mat.T) / 2)
    vec = vectors[:, 0]
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return float(values[0]), vec
