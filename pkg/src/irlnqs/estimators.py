"""VMC estimators: energy, gradient, and the matrix-free H_eff product.

Exact-enumeration mode weights configurations by |psi|^2 over the full
sector; stochastic mode samples from the ansatz and weights uniformly.
Both S and H_eff use centered (connected) log-derivative statistics, and
all outputs are projected to their real parts at the end.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ansatz as ans
from .hamiltonian import MolecularIntegrals, local_energy
from .hilbert import OccupationVector, Sector, enumerate_sector

DEFAULT_DENSE_P_CAP = 200
IMAG_RESIDUAL_WARN = 1e-8


class DensePCapError(Exception):
    """Parameter count too large for the dense p x p oracles."""


@dataclass(frozen=True)
class SampleBatch:
    """Configurations with weights and per-config E_loc / O caches.

    weights sum to 1; o_matrix is (n_configs, p) complex, e_loc complex.
    n_samples is the stochastic sample count (0 in exact mode).
    """

    configs: tuple[OccupationVector, ...]
    weights: np.ndarray
    e_loc: np.ndarray
    o_matrix: np.ndarray
    n_samples: int = 0

    def __post_init__(self):
        n = len(self.configs)
        if self.weights.shape != (n,) or self.e_loc.shape != (n,):
            raise ValueError("cache shapes do not match the config list")
        if self.o_matrix.shape[0] != n:
            raise ValueError("o_matrix rows do not match the config list")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        for arr in (self.weights, self.e_loc, self.o_matrix):
            arr.setflags(write=False)

    @property
    def param_count(self) -> int:
        return self.o_matrix.shape[1]

    @property
    def exact(self) -> bool:
        return self.n_samples == 0


@dataclass(frozen=True)
class EnergyEstimate:
    mean: float
    variance: float
    std_error: float


def _worker_count() -> int:
    raw = os.environ.get("NQS_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_batch(
    params: ans.AnsatzParameters,
    integrals: MolecularIntegrals,
    sector: Sector,
    n_samples: int = 0,
    seed: int = 0,
    enumeration_cap: int = 10**6,
) -> SampleBatch:
    """Exact-enumeration batch (n_samples=0) or a stochastic one.

    Exact mode enumerates the full sector and weights by |psi|^2;
    stochastic mode draws n_samples configurations, computing caches once
    per distinct configuration.
    """
    if n_samples == 0:
        configs = tuple(enumerate_sector(sector, cap=enumeration_cap))
        log_amps = [ans.log_amplitude(params, x, sector) for x in configs]
        weights = np.exp(2.0 * np.array([la.log_prob_half for la in log_amps]))
        weights = weights / weights.sum()
    else:
        configs = tuple(ans.sample(params, sector, n_samples, seed))
        weights = np.full(len(configs), 1.0 / n_samples)

    def logpsi(x: OccupationVector) -> complex:
        return ans.log_amplitude(params, x, sector).value

    distinct: dict[int, int] = {}
    order = []
    for x in configs:
        if x.bits not in distinct:
            distinct[x.bits] = len(order)
            order.append(x)

    def evaluate(x):
        return (
            local_energy(logpsi, integrals, x),
            ans.log_derivative(params, x, sector),
        )

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, order))
    else:
        results = [evaluate(x) for x in order]

    e_loc = np.array([results[distinct[x.bits]][0] for x in configs])
    o_matrix = np.array([results[distinct[x.bits]][1] for x in configs])
    return SampleBatch(
        configs=configs,
        weights=weights,
        e_loc=e_loc,
        o_matrix=o_matrix,
        n_samples=n_samples,
    )


def _check_imag(value: complex, what: str) -> float:
    if abs(value.imag) > IMAG_RESIDUAL_WARN * max(1.0, abs(value.real)):
        warnings.warn(
            f"{what} has imaginary residual {value.imag:.3e}; "
            "expected a real-symmetric problem",
            stacklevel=3,
        )
    return value.real


def estimate_energy(batch: SampleBatch) -> EnergyEstimate:
    if len(batch.configs) == 0:
        raise ValueError("empty batch")
    mean_c = np.sum(batch.weights * batch.e_loc)
    mean = _check_imag(mean_c, "energy mean")
    variance = float(np.sum(batch.weights * np.abs(batch.e_loc - mean) ** 2))
    std_error = 0.0 if batch.exact else float(np.sqrt(variance / batch.n_samples))
    return EnergyEstimate(mean=mean, variance=variance, std_error=std_error)


def energy_gradient(batch: SampleBatch, energy: EnergyEstimate) -> np.ndarray:
    """F_i = 2 Re(<O_i* E_loc> - <O_i*> E)."""
    if len(batch.configs) == 0:
        raise ValueError("empty batch")
    w = batch.weights
    oc = batch.o_matrix.conj()
    term = (w * batch.e_loc) @ oc - energy.mean * (w @ oc)
    return 2.0 * term.real


def _centered(batch: SampleBatch, energy: EnergyEstimate):
    o_bar = batch.weights @ batch.o_matrix
    return batch.o_matrix - o_bar, batch.e_loc - energy.mean


def heff_matvec(
    batch: SampleBatch, energy: EnergyEstimate, v: np.ndarray
) -> np.ndarray:
    """w = H_eff v accumulated per sample in O(n_configs * p).

    Uses centered O and E_loc; the p x p matrix is never formed.
    """
    if v.shape != (batch.param_count,):
        raise ValueError(
            f"vector length {v.shape} does not match p={batch.param_count}"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite input vector")
    o_c, e_c = _centered(batch, energy)
    proj = o_c @ v  # (n,) complex
    return ((batch.weights * e_c * proj) @ o_c.conj()).real


@dataclass(frozen=True)
class ConnectedCache:
    """Per-batch cache of off-diagonal Hamiltonian couplings.

    The single-configuration product of heff_matvec only sees each sampled
    configuration on its own.  The curvature of the energy also has
    two-configuration terms <x|H|y> psi(y)/psi(x) between a configuration
    and its connected partners; this cache stores those couplings together
    with the log-derivative rows of every partner so the full tangent-space
    product <d_i psi|(H - E)|d_j psi> (connected) can be applied without
    forming the matrix.

    Layout: batch row n maps to distinct configuration dist_index[n]; the
    partners of distinct configuration k occupy the flat slice
    indptr[k]:indptr[k+1] of partner_row / coeff, where coeff holds
    <x|H|y> psi(y)/psi(x) and partner_row indexes rows of partner_o.
    """

    dist_index: np.ndarray
    indptr: np.ndarray
    partner_row: np.ndarray
    coeff: np.ndarray
    partner_o: np.ndarray

    def __post_init__(self):
        for arr in (
            self.dist_index,
            self.indptr,
            self.partner_row,
            self.coeff,
            self.partner_o,
        ):
            arr.setflags(write=False)


def build_connected_cache(
    params: ans.AnsatzParameters,
    integrals: MolecularIntegrals,
    sector: Sector,
    batch: SampleBatch,
) -> ConnectedCache:
    """Collect off-diagonal couplings and partner log-derivatives for a batch."""
    from .hamiltonian import connected_configurations

    distinct: dict[int, int] = {}
    reps: list[int] = []
    for n, x in enumerate(batch.configs):
        if x.bits not in distinct:
            distinct[x.bits] = len(reps)
            reps.append(n)
    dist_index = np.array([distinct[x.bits] for x in batch.configs])

    o_rows: dict[int, int] = {}
    o_list: list[np.ndarray] = []

    def o_row(x: OccupationVector) -> int:
        if x.bits not in o_rows:
            o_rows[x.bits] = len(o_list)
            o_list.append(np.asarray(ans.log_derivative(params, x, sector)))
        return o_rows[x.bits]

    indptr = [0]
    partner_row: list[int] = []
    coeff: list[complex] = []
    for n in reps:
        x = batch.configs[n]
        log_x = complex(ans.log_amplitude(params, x, sector).value)
        for entry in connected_configurations(integrals, x)[1:]:
            log_y = complex(ans.log_amplitude(params, entry.config, sector).value)
            if log_y.real == -np.inf:
                continue
            partner_row.append(o_row(entry.config))
            coeff.append(entry.element * np.exp(log_y - log_x))
        indptr.append(len(partner_row))

    p = batch.param_count
    partner_o = (
        np.array(o_list) if o_list else np.zeros((0, p), dtype=complex)
    )
    return ConnectedCache(
        dist_index=dist_index,
        indptr=np.array(indptr),
        partner_row=np.array(partner_row, dtype=int),
        coeff=np.array(coeff, dtype=complex),
        partner_o=partner_o,
    )


def heff_offdiag_matvec(
    batch: SampleBatch,
    cache: ConnectedCache,
    v: np.ndarray,
) -> np.ndarray:
    """Two-configuration completion of the H_eff product.

    heff_matvec(v) + heff_offdiag_matvec(v) applies the full connected
    curvature <d_i psi|(H - E)|d_j psi>, whose off-diagonal part is

        w_i = Re( sum_n weight_n dO_i*(x_n)
                  sum_y <x_n|H|y> psi(y)/psi(x_n) (q(y) - q(x_n)) )

    with q = (O - <O>) v evaluated at both the sample and its partners.
    The E-dependent pieces cancel between the two terms, so no energy
    argument is needed here.
    """
    if v.shape != (batch.param_count,):
        raise ValueError(
            f"vector length {v.shape} does not match p={batch.param_count}"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite input vector")
    o_bar = batch.weights @ batch.o_matrix
    q_batch = (batch.o_matrix - o_bar) @ v
    q_part = (cache.partner_o - o_bar) @ v if len(cache.partner_o) else np.zeros(0)

    n_dist = len(cache.indptr) - 1
    # representative q per distinct configuration
    q_dist = np.zeros(n_dist, dtype=complex)
    q_dist[cache.dist_index] = q_batch
    seg = np.repeat(np.arange(n_dist), np.diff(cache.indptr))
    corr_dist = np.zeros(n_dist, dtype=complex)
    if len(seg):
        np.add.at(
            corr_dist, seg, cache.coeff * (q_part[cache.partner_row] - q_dist[seg])
        )
    corr = corr_dist[cache.dist_index]
    o_c = batch.o_matrix - o_bar
    return ((batch.weights * corr) @ o_c.conj()).real


def dense_heff(
    batch: SampleBatch, energy: EnergyEstimate, cap: int = DEFAULT_DENSE_P_CAP
) -> np.ndarray:
    """Dense oracle for H_eff; symmetrized, with the asymmetry checked."""
    p = batch.param_count
    if p > cap:
        raise DensePCapError(f"p={p} above the dense cap of {cap}")
    o_c, e_c = _centered(batch, energy)
    mat = (o_c.conj().T * (batch.weights * e_c)) @ o_c
    mat = mat.real
    asym = float(np.max(np.abs(mat - mat.T))) if p else 0.0
    if asym > IMAG_RESIDUAL_WARN:
        warnings.warn(f"dense H_eff asymmetric by {asym:.3e}", stacklevel=2)
    return (mat + mat.T) / 2


def dense_qgt(batch: SampleBatch, cap: int = DEFAULT_DENSE_P_CAP) -> np.ndarray:
    """Centered quantum geometric tensor S_ij = <O_i* O_j>_c (real part)."""
    p = batch.param_count
    if p > cap:
        raise DensePCapError(f"p={p} above the dense cap of {cap}")
    o_bar = batch.weights @ batch.o_matrix
    o_c = batch.o_matrix - o_bar
    mat = (o_c.conj().T * batch.weights) @ o_c
    mat = mat.real
    return (mat + mat.T) / 2
