"""Command-line entry point: ``phasesteer {bounds,experiment,reproduce}``.

Exit codes: 0 success, 1 invalid input or config, 2 numerical failure,
3 acceptance failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import acceptance, pipeline
from .config import RunConfig, load_config
from .errors import DomainError, PhaseSteerError
from .io import write_csv, write_json

log = logging.getLogger("phasesteer")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_bounds(config: RunConfig, out) -> list[Path]:
    """Fisher, threshold and Van Trees tables for the configured priors."""
    out = _out_dir(out)
    cfg = config.provenance()
    grid = config.grid
    prior = config.prior()
    files = [
        write_csv(out / "fisher_vs_phi.csv", "fisher_vs_phi", pipeline.fisher_vs_phase(config.fisher_v, config.phi_points), cfg),
        write_csv(out / "visibility_sweep.csv", "visibility_sweep", pipeline.visibility_sweep(config.v_points), cfg),
        write_csv(out / "thresholds.csv", "thresholds", pipeline.threshold_rows(), cfg),
        write_json(out / "thresholds.json", "thresholds", {r["mode"]: r["threshold"] for r in pipeline.threshold_rows()}, cfg),
        write_csv(
            out / "inverse_fisher.csv",
            "inverse_fisher",
            pipeline.inverse_fisher_table(config.fisher_v, config.phi_points),
            cfg,
        ),
    ]
    v0_priors = {v0: config.prior(v0=v0) for v0 in config.v0_sweep}
    sigma_priors = {s: config.prior(sigma=s) for s in config.sigma_sweep}
    files.append(write_csv(out / "vt_yfg_v0_sweep.csv", "vt_yfg", pipeline.vt_yfg_sweep(v0_priors, config.bound_n, grid), cfg))
    files.append(
        write_csv(out / "vt_yfg_sigma_sweep.csv", "vt_yfg", pipeline.vt_yfg_sweep(sigma_priors, config.bound_n, grid), cfg)
    )
    files.append(
        write_csv(
            out / "single_parameter_vt.csv",
            "single_parameter_vt",
            pipeline.single_parameter_sweep(prior, config.sigma_sweep, config.v, config.bound_n, grid),
            cfg,
        )
    )
    return files


def write_experiment(config: RunConfig, out) -> list[Path]:
    """Estimator ensemble versus N_Z and one steering-test series per N_Y."""
    out = _out_dir(out)
    cfg = config.provenance()
    prior = config.prior()
    rows = pipeline.variance_ensemble(
        prior,
        config.v,
        config.phi_true,
        config.n_z,
        config.repetitions,
        config.seed,
        interleave=config.interleave,
        resolution=config.grid,
        workers=config.workers,
    )
    files = [write_csv(out / "ensemble.csv", "ensemble", [r.to_dict() for r in rows], cfg)]
    for n_y in config.n_y:
        runs = pipeline.steering_series(
            prior,
            config.v,
            config.phi_true,
            config.test_n_z,
            n_y,
            config.bootstrap_trials,
            config.seed,
            levels=config.levels,
            interleave=config.interleave,
            resolution=config.grid,
        )
        csv_rows = []
        for run in runs:
            for row in run.result.csv_rows():
                csv_rows.append({"N_Z": run.record.n_z, **row})
        columns = ["N_Z", "trial_index", "xi2_mc"] + [f"critical_{p}" for p in config.levels] + ["xi2_observed"]
        files.append(write_csv(out / f"steering_test_NY{n_y}.csv", "steering_test", csv_rows, cfg, columns))
        files.append(
            write_json(
                out / f"steering_test_NY{n_y}.json",
                "steering_test",
                {"N_Y": n_y, "runs": [r.to_dict() for r in runs]},
                cfg,
            )
        )
    return files


def write_reproduce(seed: int, out) -> tuple[list[acceptance.AcceptanceResult], list[Path]]:
    out = _out_dir(out)
    results = acceptance.run_all(seed)
    cfg = {"seed": seed, "suite": list(acceptance.CHECKS)}
    rows = [{"id": r.id, "status": r.status, "title": r.title} for r in results]
    files = [
        write_csv(out / "acceptance_report.csv", "acceptance_report", rows, cfg),
        write_json(
            out / "acceptance_report.json",
            "acceptance_report",
            {"all_passed": all(r.passed for r in results), "results": [r.to_dict() for r in results]},
            cfg,
        ),
    ]
    return results, files


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasesteer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--seed", type=int, help="top-level seed")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--grid", type=int, help="Simpson intervals per quadrature axis (even)")
    common.add_argument("--trials", type=int, help="simulated experiments per N_Z cell")
    common.add_argument("--bootstrap-trials", type=int, help="Poisson bootstrap replicas per test")
    common.add_argument("--workers", type=int, help="worker processes for ensemble sweeps")

    sub.add_parser("bounds", parents=[common], help="Fisher, threshold and Van Trees tables")
    sub.add_parser("experiment", parents=[common], help="simulate, estimate, reconstruct and test")
    sub.add_parser("reproduce", parents=[common], help="run the acceptance suite and write a report")
    return parser


def _config_from_args(args) -> RunConfig:
    return load_config(
        args.config,
        seed=args.seed,
        out=None if args.out is None else str(args.out),
        grid=args.grid,
        repetitions=args.trials,
        bootstrap_trials=args.bootstrap_trials,
        workers=args.workers,
    )


def run(args) -> int:
    if args.command == "reproduce":
        seed = acceptance.DEFAULT_SEED if args.seed is None else args.seed
        if seed < 0:
            raise DomainError("seed must be nonnegative")
        out = args.out if args.out is not None else Path("results") / "reproduce"
        results, files = write_reproduce(seed, out)
        for r in results:
            print(r.line())
        print(f"report written to {files[1]}")
        return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE

    config = _config_from_args(args)
    writer = write_bounds if args.command == "bounds" else write_experiment
    for path in writer(config, config.out):
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PhaseSteerError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
