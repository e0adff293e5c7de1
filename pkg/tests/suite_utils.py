"""Shared non-fixture helpers for the test suite."""

import os

import numpy as np

from irlnqs.hamiltonian import MolecularIntegrals

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


def random_integrals(seed: int, n_spatial: int = 2, n_electrons: int = 2,
                     ms2: int = 0) -> MolecularIntegrals:
    """Random symmetric one-/two-electron integrals for oracle tests."""
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((n_spatial, n_spatial))
    h = (h + h.T) / 2
    raw = rng.standard_normal((n_spatial,) * 4)
    # impose the 8-fold real-orbital symmetry of (ij|kl)
    perms = [(0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
             (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0)]
    g = sum(raw.transpose(p) for p in perms) / 8.0
    return MolecularIntegrals(
        n_spatial=n_spatial,
        n_electrons=n_electrons,
        ms2=ms2,
        e_core=float(rng.standard_normal()),
        h=h,
        g=g,
    )
