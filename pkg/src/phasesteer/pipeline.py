"""Pipelines behind the command-line tools: bound tables, estimator ensembles and the steering test series."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds
from .certify import LEVELS, TestResult, bootstrap_test
from .estimation import conditional_bayes_estimate, reconstruct_generator
from .information import conditional_fisher, conditional_fisher_matrix, correlation_coefficient
from .priors import DEFAULT_RESOLUTION, JointPrior
from .simulator import CountRecord, ExperimentConfig, simulate, simulate_generator_branch, simulate_phase_branch


# ---------------------------------------------------------------- bounds tables


def fisher_vs_phase(v_values, points: int) -> list[dict]:
    """Conditional information f(phi|v) over one period; the pole at v = 1 is excluded by construction."""
    phis = np.linspace(0.0, math.pi, points)
    rows = []
    for v in v_values:
        f = conditional_fisher(phis, v)
        rows.extend({"v": float(v), "phi": float(p), "f": float(x)} for p, x in zip(phis, f))
    return rows


def visibility_sweep(points: int) -> list[dict]:
    """f_max (single and multi) against Delta^2 Y = 1 - v^2, with both thresholds inserted as exact rows."""
    thresholds = {m: bounds.violation_threshold(m) for m in ("single", "multi")}
    vs = np.union1d(np.linspace(0.0, 1.0, points), list(thresholds.values()))
    rows = []
    for v in vs:
        single = float(bounds.max_information(v, "single"))
        multi = float(bounds.max_information(v, "multi"))
        dy = float(bounds.model_generator_variance(v))
        rows.append(
            {
                "v": float(v),
                "f_max_single": single,
                "f_max_multi": multi,
                "delta2_Y": dy,
                "violates_single": single > dy,
                "violates_multi": multi > dy,
            }
        )
    return rows


def threshold_rows() -> list[dict]:
    return [{"mode": m, "threshold": bounds.violation_threshold(m)} for m in ("single", "multi")]


def inverse_fisher_table(v_values, points: int) -> list[dict]:
    """Inverse-FIM elements and the correlation coefficient R(phi) = (F^-1)_pv / sqrt((F^-1)_pp (F^-1)_vv)."""
    phis = np.linspace(0.0, math.pi / 2, points)
    rows = []
    for v in v_values:
        if v <= 0.0:
            continue
        for phi in phis:
            inv = conditional_fisher_matrix(phi, v).inverse()
            rows.append(
                {
                    "v": float(v),
                    "phi": float(phi),
                    "Finv_phi_phi": float(inv[0, 0]),
                    "Finv_phi_v": float(inv[0, 1]),
                    "Finv_v_v": float(inv[1, 1]),
                    "R": correlation_coefficient(inv),
                }
            )
    return rows


def vt_yfg_sweep(priors: dict, Ns, resolution: int) -> list[dict]:
    """Bound tables (VT phase bound and VT-YFG lhs) for each labelled prior."""
    rows = []
    for label, prior in priors.items():
        for row in bounds.bound_table(prior, Ns, resolution=resolution):
            rows.append({"mu": prior.phase.mu, "sigma": prior.phase.sigma, "v0": prior.visibility.v0, **row})
    return rows


def single_parameter_sweep(prior: JointPrior, sigmas, v: float, Ns, resolution: int) -> list[dict]:
    rows = []
    for s in sigmas:
        p = JointPrior.from_values(prior.phase.mu, s, prior.visibility.v0)
        for N in Ns:
            V, V_yfg = bounds.single_parameter_vt(p, v, N, resolution)
            rows.append({"sigma": float(s), "v": float(v), "N": N, "V": V, "V_YFG": V_yfg, "violated": V > V_yfg})
    return rows


# ---------------------------------------------------------------- ensembles


@dataclass(frozen=True)
class EnsembleRow:
    n_z: int
    mean_var_phi: float
    se: float
    vt_bound: float
    vt_bound_unconditional: float
    repetitions: int

    def to_dict(self) -> dict:
        return {
            "N_Z": self.n_z,
            "mean_var_phi": self.mean_var_phi,
            "se": self.se,
            "vt_bound": self.vt_bound,
            "vt_bound_unconditional": self.vt_bound_unconditional,
            "repetitions": self.repetitions,
        }


def _variance_job(args):
    prior, v, phi, n_z, seed, index, interleave, resolution = args
    cfg = ExperimentConfig(v=v, phi_true=phi, n_z=n_z, n_y=0, seed=seed, index=index, interleave=interleave)
    return conditional_bayes_estimate(simulate_phase_branch(cfg), prior, resolution).var_phi


def _map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def ensemble_variances(
    prior: JointPrior,
    v: float,
    phi: float,
    n_z: int,
    repetitions: int,
    seed: int,
    *,
    cell: int = 0,
    interleave: str = "stochastic",
    resolution: int = DEFAULT_RESOLUTION,
    workers: int = 1,
) -> np.ndarray:
    """Conditional posterior variances of ``repetitions`` independent experiments.

    Experiment r of sweep cell ``cell`` uses index ``cell * 2**20 + r``, so
    results do not depend on the worker count or on other cells.
    """
    jobs = [(prior, v, phi, n_z, seed, (cell << 20) + r, interleave, resolution) for r in range(repetitions)]
    return np.asarray(_map(_variance_job, jobs, workers))


def variance_ensemble(
    prior: JointPrior,
    v: float,
    phi: float,
    n_z_values,
    repetitions: int,
    seed: int,
    *,
    interleave: str = "stochastic",
    resolution: int = DEFAULT_RESOLUTION,
    workers: int = 1,
) -> list[EnsembleRow]:
    """Mean conditional Var[phi] with its standard error against the Van Trees bounds, per N_Z."""
    rows = []
    for cell, n_z in enumerate(n_z_values):
        var = ensemble_variances(
            prior, v, phi, n_z, repetitions, seed, cell=cell, interleave=interleave, resolution=resolution, workers=workers
        )
        rows.append(
            EnsembleRow(
                int(n_z),
                float(var.mean()),
                float(var.std(ddof=1) / math.sqrt(var.size)),
                bounds.conditional_phase_bound(prior, n_z, resolution),
                bounds.van_trees_phase_bound(bounds.van_trees_matrix(prior, n_z, resolution), n_z),
                int(var.size),
            )
        )
    return rows


# ---------------------------------------------------------------- steering test


@dataclass(frozen=True)
class SteeringRun:
    record: CountRecord
    var_phi: float
    phi_cond: float
    result: TestResult

    def to_dict(self) -> dict:
        return {
            "counts": self.record.to_dict(),
            "estimate": {"phi_cond": self.phi_cond, "var_phi": self.var_phi},
            "generator": reconstruct_generator(self.record.generator_counts).to_dict(),
            "test": self.result.to_dict(),
        }


def steering_run(
    prior: JointPrior,
    config: ExperimentConfig,
    trials: int,
    *,
    levels=LEVELS,
    resolution: int = DEFAULT_RESOLUTION,
    literal_generator: bool = False,
) -> SteeringRun:
    """Simulate one experiment, estimate phi, and run the bootstrap xi^2 test."""
    record = simulate(config)
    est = conditional_bayes_estimate(record.phase_counts, prior, resolution)
    result = bootstrap_test(
        record,
        est.var_phi,
        prior,
        trials,
        config.seed,
        levels=levels,
        literal_generator=literal_generator,
        resolution=resolution,
        stream_key=(config.n_y, config.index),
    )
    return SteeringRun(record, est.var_phi, est.phi_cond, result)


def steering_series(
    prior: JointPrior,
    v: float,
    phi: float,
    n_z_values,
    n_y: int,
    trials: int,
    seed: int,
    *,
    levels=LEVELS,
    interleave: str = "stochastic",
    resolution: int = DEFAULT_RESOLUTION,
) -> list[SteeringRun]:
    """xi^2 test at increasing N_Z sharing one generator-branch record (one Fig. 4 panel).

    The generator tallies are drawn once per N_Y; each N_Z cell draws its
    own phase-branch record.
    """
    gen_cfg = ExperimentConfig(v=v, phi_true=phi, n_z=0, n_y=n_y, seed=seed, index=0, interleave=interleave)
    generator_counts = simulate_generator_branch(gen_cfg)
    runs = []
    for cell, n_z in enumerate(n_z_values):
        cfg = ExperimentConfig(v=v, phi_true=phi, n_z=n_z, n_y=n_y, seed=seed, index=cell, interleave=interleave)
        record = CountRecord(
            simulate_phase_branch(cfg),
            generator_counts,
            {"v": v, "phi_true": phi, "seed": seed, "index": cell, "interleave": interleave},
        )
        est = conditional_bayes_estimate(record.phase_counts, prior, resolution)
        result = bootstrap_test(
            record, est.var_phi, prior, trials, seed, levels=levels, resolution=resolution, stream_key=(n_y, cell)
        )
        runs.append(SteeringRun(record, est.var_phi, est.phi_cond, result))
    return runs


def certification_rate(
    prior: JointPrior,
    v: float,
    phi: float,
    n_z: int,
    n_y: int,
    experiments: int,
    trials: int,
    seed: int,
    *,
    levels=LEVELS,
    resolution: int = DEFAULT_RESOLUTION,
) -> dict:
    """Fraction of independent experiments certified at each level, plus the mean xi^2."""
    certified = {p: 0 for p in levels}
    xi2 = []
    for i in range(experiments):
        cfg = ExperimentConfig(v=v, phi_true=phi, n_z=n_z, n_y=n_y, seed=seed, index=i)
        run = steering_run(prior, cfg, trials, levels=levels, resolution=resolution)
        xi2.append(run.result.xi2)
        for p in levels:
            certified[p] += run.result.verdict[p]
    return {
        "rates": {p: certified[p] / experiments for p in levels},
        "mean_xi2": float(np.mean(xi2)),
        "critical": {p: run.result.critical[p] for p in levels},
    }
