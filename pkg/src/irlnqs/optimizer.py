"""Outer optimization loops: IRL, standard-Lanczos baseline, and Adam.

The IRL step solves, matrix-free over the current batch, the lowest
eigenpair of the tangent-space energy matrix: the connected curvature
<d_i psi|(H - E)|d_j psi> bordered by the wavefunction row, whose first
column carries the energy gradient F/2.  With the metric taken as the
identity this is a standard Hermitian eigenvalue problem of dimension
p + 1; its lowest eigenvalue is the predicted energy change E_new - E
(always <= 0) and doubles as the convergence signal, while the eigenvector
[c0, c] yields the update direction d = c / c0.  The step scale is picked
from a fixed geometric grid by exact (or batch) energy evaluation, falling
back to steepest descent if the eigen-direction fails to descend.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import ansatz as ans
from . import estimators as est
from . import krylov
from .hamiltonian import MolecularIntegrals
from .hilbert import Sector

HARTREE_TO_KCAL = 627.509474

DEFAULT_LINE_SEARCH_GRID = tuple(2.0**k for k in range(-6, 2))


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "irl"  # irl | sl | adam
    m: int = 20
    tol: float = 1e-12
    max_outer_steps: int = 50
    convergence_eps: float = 1e-10
    line_search: tuple[float, ...] = DEFAULT_LINE_SEARCH_GRID
    adam: AdamConfig = field(default_factory=AdamConfig)
    n_samples: int = 0  # 0 = exact enumeration
    sl_budget: int = 100
    max_restarts: int = 300
    seed: int = 111

    def __post_init__(self):
        if self.method not in ("irl", "sl", "adam"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class TrajectoryRecord:
    step: int
    energy: float
    error_hartree: float
    error_kcal: float
    lambda_min: float
    step_scale: float
    matvecs: int
    wall_clock_ms: float
    converged: bool = False
    stalled: bool = False


@dataclass
class AdamState:
    first: np.ndarray
    second: np.ndarray


def adam_step(
    theta: np.ndarray,
    gradient: np.ndarray,
    state: AdamState,
    t: int,
    hyper: AdamConfig,
) -> tuple[np.ndarray, AdamState]:
    """Standard bias-corrected Adam update; t is the 1-based step index."""
    if gradient.shape != theta.shape:
        raise ValueError("gradient shape does not match parameters")
    first = hyper.beta1 * state.first + (1 - hyper.beta1) * gradient
    second = hyper.beta2 * state.second + (1 - hyper.beta2) * gradient**2
    first_hat = first / (1 - hyper.beta1**t)
    second_hat = second / (1 - hyper.beta2**t)
    theta_new = theta - hyper.learning_rate * first_hat / (
        np.sqrt(second_hat) + hyper.epsilon
    )
    return theta_new, AdamState(first=first, second=second)


def _batch_seed(config: OptimizerConfig, step: int) -> int:
    return (config.seed * 1_000_003 + step) % 2**31


def _energy_at(
    params: ans.AnsatzParameters,
    integrals: MolecularIntegrals,
    sector: Sector,
    config: OptimizerConfig,
    step: int,
) -> float:
    batch = est.build_batch(
        params, integrals, sector, n_samples=config.n_samples,
        seed=_batch_seed(config, step),
    )
    return est.estimate_energy(batch).mean


def outer_step(
    params: ans.AnsatzParameters,
    integrals: MolecularIntegrals,
    sector: Sector,
    config: OptimizerConfig,
    step: int,
) -> tuple[ans.AnsatzParameters, float, float, int, bool]:
    """One IRL or SL outer step.

    Returns (new params, lambda_min, accepted step scale, matvec count,
    solver-converged flag).
    """
    batch = est.build_batch(
        params, integrals, sector, n_samples=config.n_samples,
        seed=_batch_seed(config, step),
    )
    energy = est.estimate_energy(batch)
    gradient = est.energy_gradient(batch, energy)
    cache = est.build_connected_cache(params, integrals, sector, batch)
    p = batch.param_count
    half_f = 0.5 * gradient

    def matvec(u: np.ndarray) -> np.ndarray:
        out = np.empty(p + 1)
        out[0] = half_f @ u[1:]
        out[1:] = (
            u[0] * half_f
            + est.heff_matvec(batch, energy, u[1:])
            + est.heff_offdiag_matvec(batch, cache, u[1:])
        )
        return out

    if config.method == "irl":
        pair = krylov.irl_smallest(
            matvec, p + 1, m=config.m, tol=config.tol,
            max_restarts=config.max_restarts, seed=_batch_seed(config, step),
        )
    else:
        pair = krylov.sl_smallest(
            matvec, p + 1, budget=config.sl_budget, seed=_batch_seed(config, step)
        )

    c0 = pair.vector[0]
    direction = pair.vector[1:]
    if abs(c0) > 1e-12:
        direction = direction / c0
    elif float(gradient @ direction) > 0:
        direction = -direction

    def line_search(d: np.ndarray, best: tuple[float, float]):
        best_scale, best_energy = best
        best_d = d
        for scale in config.line_search:
            candidate = ans.AnsatzParameters(
                params.architecture, params.theta + scale * d
            )
            e_new = _energy_at(candidate, integrals, sector, config, step)
            if np.isfinite(e_new) and e_new < best_energy:
                best_energy = e_new
                best_scale = scale
                best_d = d
        return best_scale, best_energy, best_d

    best_scale, best_energy, best_d = line_search(direction, (0.0, energy.mean))
    if best_scale == 0.0:
        norm = float(np.linalg.norm(gradient))
        if norm > 0.0:
            best_scale, best_energy, best_d = line_search(
                -gradient / norm, (0.0, energy.mean)
            )

    matvecs = pair.n_matvec
    if best_scale > 0.0:
        params = ans.AnsatzParameters(
            params.architecture, params.theta + best_scale * best_d
        )
    return params, float(pair.value), best_scale, matvecs, pair.converged


def run_optimization(
    integrals: MolecularIntegrals,
    sector: Sector,
    config: OptimizerConfig,
    hidden: int = 42,
    reference_energy: float | None = None,
    initial_params: ans.AnsatzParameters | None = None,
) -> tuple[list[TrajectoryRecord], ans.AnsatzParameters]:
    """Full optimization run; records one row per outer step plus step 0.

    Stops when |lambda_min| < convergence_eps (irl/sl) or after
    max_outer_steps.  A partial trajectory is still returned on stall.
    """
    arch = ans.Architecture(sector.n_orbitals, hidden)
    params = initial_params or ans.init_parameters(arch, seed=config.seed)
    t0 = time.perf_counter()

    def error(e: float) -> float:
        return e - reference_energy if reference_energy is not None else float("nan")

    def record(step, energy, lam, scale, matvecs, converged=False, stalled=False):
        err = error(energy)
        return TrajectoryRecord(
            step=step,
            energy=energy,
            error_hartree=err,
            error_kcal=err * HARTREE_TO_KCAL,
            lambda_min=lam,
            step_scale=scale,
            matvecs=matvecs,
            wall_clock_ms=(time.perf_counter() - t0) * 1000.0,
            converged=converged,
            stalled=stalled,
        )

    records = [
        record(0, _energy_at(params, integrals, sector, config, 0), float("nan"), 0.0, 0)
    ]

    adam_state = AdamState(
        first=np.zeros(arch.param_count), second=np.zeros(arch.param_count)
    )
    for step in range(1, config.max_outer_steps + 1):
        if config.method == "adam":
            batch = est.build_batch(
                params, integrals, sector, n_samples=config.n_samples,
                seed=_batch_seed(config, step),
            )
            energy = est.estimate_energy(batch)
            gradient = est.energy_gradient(batch, energy)
            theta_new, adam_state = adam_step(
                params.theta, gradient, adam_state, step, config.adam
            )
            params = ans.AnsatzParameters(arch, theta_new)
            records.append(
                record(step, _energy_at(params, integrals, sector, config, step),
                       float("nan"), config.adam.learning_rate, 0)
            )
            continue

        params, lam, scale, matvecs, _ = outer_step(
            params, integrals, sector, config, step
        )
        energy = _energy_at(params, integrals, sector, config, step)
        converged = abs(lam) < config.convergence_eps
        records.append(
            record(step, energy, lam, scale, matvecs,
                   converged=converged, stalled=scale == 0.0)
        )
        if converged:
            break

    return records, params
