"""Acceptance suite AC-1 ... AC-10 with pinned seeds.

Each check returns an :class:`AcceptanceResult`.  Wall-clock durations are
logged but never written to the report; only whether each budget was met.
"""

from __future__ import annotations

import logging
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds
from .certify import null_rejection_rate
from .information import (
    conditional_fisher,
    conditional_fisher_matrix,
    fisher_matrix_fd,
    fisher_scalar,
    single_parameter_model,
)
from .priors import JointPrior, phase_score_integral, prior_moments
from .qubit import born_phase_branch_joint, conditional_variance, partially_coherent_singlet, PAULI
from .pipeline import certification_rate, variance_ensemble

log = logging.getLogger(__name__)

DEFAULT_SEED = 20240617

TOL_FISHER = 1e-6
TOL_ANCHOR = 1e-6
TOL_SCORE = 1e-4
TOL_NORM = 1e-6
TOL_MEAN = 1e-8
TOL_THRESHOLD = 1e-6

FD_PHIS = (0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2 - 0.01)
FD_VS = (0.5, 0.8, 0.97)
FD_STEP = 1e-5

ANCHOR_F0 = 0.9409  # f(0 | 0.97)
ANCHOR_FINV = 1.125624  # (F^-1)_phi,phi at (pi/4, 0.97)

EXPECTED_THRESHOLDS = {"single": 0.7071068, "multi": 0.7653669}

REFERENCE = {"v": 0.97, "phi": math.pi / 4, "mu": math.pi / 4, "sigma": math.pi / 16, "v0": 0.95}

VT_NS = (10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)
VT_LIMIT_N = 100000
VT_LIMIT_RTOL = 0.01

FIG3_NS = (100, 300, 1000, 3000)
FIG3_REPETITIONS = 300
FIG3_SE_MARGIN = 2.0
FIG3_MAX_RATIO = 3.0

FIG4_NZ = 3000
FIG4_NY = (495, 200)
FIG4_EXPERIMENTS = 200
FIG4_TRIALS = 50
FIG4_LEVEL = 0.005
FIG4_MIN_RATE = 0.70

NULL_V = 0.6
NULL_V0 = 0.6
NULL_LEVEL = 0.05
NULL_MAX_RATE = 0.08

CALIB_LEVELS = (0.05, 0.01, 0.005)
CALIB_DOFS = (9, 99, 999)
CALIB_DRAWS = 10000
CALIB_SE = 3.0

BUDGETS = {"AC-1": 5.0, "AC-4": 1.0, "AC-6": 180.0, "AC-7": 300.0}


@dataclass(frozen=True)
class AcceptanceResult:
    id: str
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    within_budget: bool | None = None

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        return f"{self.id} {self.status}: {self.title}"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "status": self.status,
            "measured": self.measured,
            "expected": self.expected,
            "within_budget": self.within_budget,
        }


def _reference_prior(**overrides) -> JointPrior:
    vals = {k: REFERENCE[k] for k in ("mu", "sigma", "v0")}
    vals.update(overrides)
    return JointPrior.from_values(**vals)


def _budget(ac_id, start) -> bool | None:
    elapsed = time.perf_counter() - start
    log.info("%s took %.2f s", ac_id, elapsed)
    limit = BUDGETS.get(ac_id)
    return None if limit is None else elapsed < limit


def ac1_fisher_oracle(seed: int = DEFAULT_SEED) -> AcceptanceResult:
    start = time.perf_counter()
    worst_f = worst_m = 0.0
    for v in FD_VS:
        model = single_parameter_model(v)
        for phi in FD_PHIS:
            worst_f = max(worst_f, abs(conditional_fisher(phi, v) - fisher_scalar(model, phi, FD_STEP)))
            fd = fisher_matrix_fd(lambda p, w: born_phase_branch_joint(p, w).ravel(), phi, v, FD_STEP)
            worst_m = max(worst_m, float(np.max(np.abs(conditional_fisher_matrix(phi, v).entries - fd.entries))))
    ok_time = _budget("AC-1", start)
    passed = worst_f < TOL_FISHER and worst_m < TOL_FISHER and ok_time
    return AcceptanceResult(
        "AC-1",
        "analytic Fisher information matches Born-rule finite differences",
        passed,
        {"max_abs_diff_scalar": worst_f, "max_abs_diff_matrix": worst_m},
        {"tolerance": TOL_FISHER},
        ok_time,
    )


def ac2_anchors(seed: int = DEFAULT_SEED) -> AcceptanceResult:
    v, phi = REFERENCE["v"], REFERENCE["phi"]
    f0 = conditional_fisher(0.0, v)
    finv = conditional_fisher_matrix(phi, v).inverse()[0, 0]
    f_pv = conditional_fisher_matrix(phi, v).phi_v
    f_pv_other = max(abs(conditional_fisher_matrix(phi, w).phi_v) for w in (0.3, 0.6, 0.9, 0.999))
    state = partially_coherent_singlet(v)
    dy = conditional_variance(state, "Y", PAULI["Y"])
    measured = {
        "f_0": f0,
        "Finv_phi_phi": finv,
        "F_phi_v": max(abs(f_pv), f_pv_other),
        "delta2_Y_cond": dy,
        "one_minus_v2": 1 - v**2,
    }
    passed = (
        abs(f0 - ANCHOR_F0) < TOL_ANCHOR
        and abs(finv - ANCHOR_FINV) < TOL_ANCHOR
        and measured["F_phi_v"] < TOL_ANCHOR
        and abs(dy - (1 - v**2)) < TOL_ANCHOR
    )
    return AcceptanceResult(
        "AC-2",
        "closed-form anchors",
        passed,
        measured,
        {"f_0": ANCHOR_F0, "Finv_phi_phi": ANCHOR_FINV, "F_phi_v": 0.0, "tolerance": TOL_ANCHOR},
    )


def ac3_prior(seed: int = DEFAULT_SEED) -> AcceptanceResult:
    measured = {}
    passed = True
    for label, sigma in (("pi/8", math.pi / 8), ("pi/16", math.pi / 16)):
        prior = _reference_prior(sigma=sigma)
        score = phase_score_integral(prior)
        rel = abs(score * sigma**2 - 1.0)
        mom = prior_moments(prior)
        measured[f"score_rel_err_sigma_{label}"] = rel
        measured[f"mass_sigma_{label}"] = mom.mass
        passed &= rel < TOL_SCORE and abs(mom.mass - 1.0) < TOL_NORM
    for v0 in (0.6, 0.95):
        prior = _reference_prior(v0=v0)
        mom = prior_moments(prior)
        measured[f"v_mean_v0_{v0}"] = mom.v_mean
        passed &= abs(mom.v_mean - v0) < TOL_MEAN and abs(mom.mass - 1.0) < TOL_NORM
    return AcceptanceResult(
        "AC-3",
        "prior score integral, normalisation and raised-cosine mean",
        bool(passed),
        measured,
        {"score_rtol": TOL_SCORE, "mass_tol": TOL_NORM, "mean_tol": TOL_MEAN},
    )


def ac4_thresholds(seed: int = DEFAULT_SEED) -> AcceptanceResult:
    start = time.perf_counter()
    found = {m: bounds.violation_threshold(m) for m in EXPECTED_THRESHOLDS}
    ok_time = _budget("AC-4", start)
    passed = all(abs(found[m] - EXPECTED_THRESHOLDS[m]) < TOL_THRESHOLD for m in found) and ok_time
    return AcceptanceResult(
        "AC-4",
        "violation thresholds by bisection",
        passed,
        found,
        {**EXPECTED_THRESHOLDS, "tolerance": TOL_THRESHOLD},
        ok_time,
    )


def ac5_van_trees(seed: int = DEFAULT_SEED) -> AcceptanceResult:
    prior = _reference_prior()
    values = [bounds.van_trees_phase_bound(bounds.van_trees_matrix(prior, n), n) for n in VT_NS]
    monotone = all(b <= a for a, b in zip(values, values[1:]))
    at_limit = bounds.van_trees_phase_bound(bounds.van_trees_matrix(prior, VT_LIMIT_N), VT_LIMIT_N)
    crb = np.linalg.inv(bounds.prior_averaged_fisher(prior))[0, 0] / VT_LIMIT_N
    rel = abs(at_limit / crb - 1.0)
    return AcceptanceResult(
        "AC-5",
        "Van Trees phase bound is monotone and tends to the prior-averaged CRB",
        bool(monotone and rel < VT_LIMIT_RTOL),
        {"bounds": dict(zip(map(str, VT_NS), values)), "monotone": monotone, "rel_gap_at_1e5": rel},
        {"rel_gap_max": VT_LIMIT_RTOL},
    )


def ac6_estimator_vs_bound(seed: int = DEFAULT_SEED, repetitions: int = FIG3_REPETITIONS) -> AcceptanceResult:
    start = time.perf_counter()
    prior = _reference_prior()
    rows = variance_ensemble(prior, REFERENCE["v"], REFERENCE["phi"], FIG3_NS, repetitions, seed)
    ok_time = _budget("AC-6", start)
    above = all(r.mean_var_phi >= r.vt_bound - FIG3_SE_MARGIN * r.se for r in rows)
    tracks = all(r.mean_var_phi <= FIG3_MAX_RATIO * r.vt_bound for r in rows)
    measured = {
        str(r.n_z): {
            "mean_var_phi": r.mean_var_phi,
            "se": r.se,
            "vt_bound": r.vt_bound,
            "ratio": r.mean_var_phi / r.vt_bound,
            "z": (r.mean_var_phi - r.vt_bound) / r.se,
        }
        for r in rows
    }
    measured["above_bound"] = above
    measured["within_3x"] = tracks
    return AcceptanceResult(
        "AC-6",
        "mean conditional posterior variance respects and tracks the Van Trees bound",
        bool(above and tracks and ok_time),
        measured,
        {"se_margin": FIG3_SE_MARGIN, "max_ratio": FIG3_MAX_RATIO, "repetitions": repetitions},
        ok_time,
    )


def ac7_detection(seed: int = DEFAULT_SEED, experiments: int = FIG4_EXPERIMENTS) -> AcceptanceResult:
    start = time.perf_counter()
    prior = _reference_prior()
    rates, measured = {}, {}
    for n_y in FIG4_NY:
        out = certification_rate(
            prior, REFERENCE["v"], REFERENCE["phi"], FIG4_NZ, n_y, experiments, FIG4_TRIALS, seed
        )
        rates[n_y] = out["rates"][FIG4_LEVEL]
        measured[f"N_Y_{n_y}"] = {"rate": rates[n_y], "mean_xi2": out["mean_xi2"], "critical": out["critical"][FIG4_LEVEL]}
    ok_time = _budget("AC-7", start)
    high, low = FIG4_NY
    detect = rates[high] >= FIG4_MIN_RATE
    ordered = rates[low] < rates[high]
    measured["detection_clause"] = detect
    measured["ordering_clause"] = ordered
    return AcceptanceResult(
        "AC-7",
        "steering is certified at p=0.005 and fewer generator events certify less often",
        bool(detect and ordered and ok_time),
        measured,
        {"min_rate": FIG4_MIN_RATE, "level": FIG4_LEVEL, "ordering": f"rate(N_Y={low}) < rate(N_Y={high})"},
        ok_time,
    )


def ac8_null(seed: int = DEFAULT_SEED, experiments: int = FIG4_EXPERIMENTS) -> AcceptanceResult:
    prior = _reference_prior(v0=NULL_V0)
    out = certification_rate(prior, NULL_V, REFERENCE["phi"], FIG4_NZ, 495, experiments, FIG4_TRIALS, seed)
    rate = out["rates"][NULL_LEVEL]
    return AcceptanceResult(
        "AC-8",
        "no false certification below the thresholds",
        rate <= NULL_MAX_RATE,
        {"rate": rate, "mean_xi2": out["mean_xi2"], "prior_v0": NULL_V0},
        {"max_rate": NULL_MAX_RATE, "level": NULL_LEVEL},
    )


def ac9_calibration(seed: int = DEFAULT_SEED) -> AcceptanceResult:
    measured, passed = {}, True
    for dof in CALIB_DOFS:
        for p in CALIB_LEVELS:
            rate = null_rejection_rate(p, dof, CALIB_DRAWS, seed)
            se = math.sqrt(p * (1 - p) / CALIB_DRAWS)
            ok = abs(rate - p) <= CALIB_SE * se
            measured[f"dof_{dof}_p_{p}"] = {"rate": rate, "z": (rate - p) / se}
            passed &= ok
    return AcceptanceResult(
        "AC-9",
        "lower-tail chi^2 test rejects synthetic null data at the nominal rate",
        bool(passed),
        measured,
        {"draws": CALIB_DRAWS, "tolerance_se": CALIB_SE},
    )


def ac10_determinism(seed: int = DEFAULT_SEED) -> AcceptanceResult:
    """Run the bounds and experiment pipelines twice on a reduced config and compare bytes."""
    from .cli import write_bounds, write_experiment
    from .config import RunConfig

    config = RunConfig(
        seed=seed,
        grid=128,
        n_z=(100, 300),
        repetitions=20,
        test_n_z=(100, 1000),
        bootstrap_trials=10,
        bound_n=(1, 10, 100),
        phi_points=19,
        v_points=11,
    )
    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            out = Path(tmp) / str(k)
            write_bounds(config, out)
            write_experiment(config, out)
            digests.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    same = digests[0] == digests[1]
    differing = sorted(k for k in digests[0] if digests[0][k] != digests[1].get(k))
    return AcceptanceResult(
        "AC-10",
        "same seed gives byte-identical CSV/JSON outputs",
        same,
        {"files": len(digests[0]), "differing": differing},
        {"identical": True},
    )


CHECKS = {
    "AC-1": ac1_fisher_oracle,
    "AC-2": ac2_anchors,
    "AC-3": ac3_prior,
    "AC-4": ac4_thresholds,
    "AC-5": ac5_van_trees,
    "AC-6": ac6_estimator_vs_bound,
    "AC-7": ac7_detection,
    "AC-8": ac8_null,
    "AC-9": ac9_calibration,
    "AC-10": ac10_determinism,
}


def run_all(seed: int = DEFAULT_SEED, only=None) -> list[AcceptanceResult]:
    ids = list(CHECKS) if only is None else list(only)
    results = []
    for ac_id in ids:
        result = CHECKS[ac_id](seed)
        log.info("%s", result.line())
        results.append(result)
    return results
