"""Command-line entry point: run optimizations, report sectors, dense FCI.

Exit codes: 0 converged, 1 error, 2 not converged.  Energies are Hartree
internally; kcal/mol appears only in the reporting columns.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .hamiltonian import (
    DEFAULT_DENSE_CAP,
    DenseCapError,
    FcidumpError,
    dense_fci_ground_state,
    parse_fcidump,
)
from .hilbert import SectorTooLargeError
from .optimizer import (
    HARTREE_TO_KCAL,
    AdamConfig,
    OptimizerConfig,
    run_optimization,
)

CSV_HEADER = "step,energy_ha,err_ha,err_kcal,lambda_min,step_scale,matvecs,wall_ms"


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _load_integrals(path: str):
    try:
        with open(path) as fh:
            return parse_fcidump(fh.read())
    except OSError as exc:
        raise SystemExit(f"error: cannot read {path}: {exc}")
    except FcidumpError as exc:
        raise SystemExit(f"error: {path}: {exc}")


def cmd_run(args: argparse.Namespace) -> int:
    integrals = _load_integrals(args.fcidump)
    sector = integrals.sector()
    config = OptimizerConfig(
        method=args.method,
        m=args.m,
        tol=args.tol,
        max_outer_steps=args.max_steps,
        n_samples=0 if args.batch == "exact" else args.ns,
        adam=AdamConfig(learning_rate=args.lr),
        seed=args.seed,
    )

    reference = None
    if sector.size <= DEFAULT_DENSE_CAP:
        reference, _ = dense_fci_ground_state(integrals, sector)

    t0 = time.perf_counter()
    records, params = run_optimization(
        integrals, sector, config, hidden=args.hidden, reference_energy=reference
    )
    wall_seconds = time.perf_counter() - t0

    if args.out_csv:
        with open(args.out_csv, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in records:
                fh.write(
                    ",".join(
                        [
                            str(r.step),
                            _fmt(r.energy),
                            _fmt(r.error_hartree),
                            _fmt(r.error_kcal),
                            _fmt(r.lambda_min),
                            _fmt(r.step_scale),
                            str(r.matvecs),
                            _fmt(r.wall_clock_ms),
                        ]
                    )
                    + "\n"
                )

    final = records[-1]
    converged = final.converged
    summary = {
        "molecule": {
            "n_spin_orbitals": sector.n_orbitals,
            "n_electrons": integrals.n_electrons,
            "n_up": sector.n_up,
            "n_down": sector.n_down,
            "pvc_count": sector.size,
        },
        "n_parameters": params.architecture.param_count,
        "final_energy_ha": final.energy,
        "e_fci_ha": reference,
        "final_error_ha": final.error_hartree,
        "final_error_kcal": final.error_kcal,
        "steps_taken": final.step,
        "total_matvecs": sum(r.matvecs for r in records),
        "wall_clock_seconds": wall_seconds,
        "converged": converged,
        "config": {
            "fcidump": args.fcidump,
            "method": config.method,
            "m": config.m,
            "tol": config.tol,
            "max_outer_steps": config.max_outer_steps,
            "batch": args.batch,
            "n_samples": config.n_samples,
            "seed": config.seed,
            "hidden": args.hidden,
            "learning_rate": config.adam.learning_rate,
            "out_csv": args.out_csv,
            "out_json": args.out_json,
        },
    }
    if args.out_json:
        with open(args.out_json, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(
        f"{config.method}: E = {final.energy:.12f} Ha after {final.step} steps "
        f"({'converged' if converged else 'not converged'})"
    )
    return 0 if converged else 2


def cmd_pvc(args: argparse.Namespace) -> int:
    integrals = _load_integrals(args.fcidump)
    sector = integrals.sector()
    print(f"spin-orbitals M = {sector.n_orbitals}")
    print(f"N_up = {sector.n_up}")
    print(f"N_down = {sector.n_down}")
    print(f"PVC count = {sector.size}")
    return 0


def cmd_fci(args: argparse.Namespace) -> int:
    integrals = _load_integrals(args.fcidump)
    sector = integrals.sector()
    try:
        energy, amplitudes = dense_fci_ground_state(integrals, sector)
    except (DenseCapError, SectorTooLargeError) as exc:
        raise SystemExit(f"error: {exc}")
    print(f"E_FCI = {energy:.12f} Ha")
    if args.out_amplitudes:
        with open(args.out_amplitudes, "w") as fh:
            for value in amplitudes:
                fh.write(_fmt(value) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irlnqs",
        description="Neural-quantum-state optimization via implicitly restarted Lanczos",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="optimize an NQS for an FCIDUMP Hamiltonian")
    run.add_argument("--fcidump", required=True)
    run.add_argument("--method", choices=["irl", "sl", "adam"], default="irl")
    run.add_argument("--m", type=int, default=20, help="Krylov subspace size")
    run.add_argument("--tol", type=float, default=1e-12, help="IRL residual tolerance")
    run.add_argument("--max-steps", type=int, default=50)
    run.add_argument("--batch", choices=["exact", "stochastic"], default="exact")
    run.add_argument("--ns", type=int, default=4096, help="stochastic sample count")
    run.add_argument("--seed", type=int, default=111)
    run.add_argument("--hidden", type=int, default=42, help="hidden layer width")
    run.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate")
    run.add_argument("--out-csv", default=None)
    run.add_argument("--out-json", default=None)
    run.set_defaults(func=cmd_run)

    pvc = sub.add_parser("pvc", help="report the particle-number sector size")
    pvc.add_argument("--fcidump", required=True)
    pvc.set_defaults(func=cmd_pvc)

    fci = sub.add_parser("fci", help="dense FCI ground state (enumerable sectors)")
    fci.add_argument("--fcidump", required=True)
    fci.add_argument("--out-amplitudes", default=None)
    fci.set_defaults(func=cmd_fci)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (SectorTooLargeError, DenseCapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
