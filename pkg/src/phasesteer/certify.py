"""The xi^2 steering test: normalised chi^2 critical values and the Poisson bootstrap.

Null hypothesis (local hidden states): N_Z Var[phi] L >= 1.  The statistic
xi^2 = N_Z Var[phi] L is compared with the lower-tail quantile of a
normalised chi^2 variable with N_Z - 1 degrees of freedom; steering is
certified at level p when xi^2 falls below it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaln, ndtri

from . import rng as rngmod
from .bounds import YfgLimit, yfg_limit
from .errors import ConvergenceError, DegenerateError, DomainError
from .estimation import reconstruct_generator
from .priors import DEFAULT_RESOLUTION, JointPrior
from .simulator import CountRecord, poisson_resample

log = logging.getLogger(__name__)

LEVELS = (0.05, 0.01, 0.005)
DEFAULT_FRACTION = 0.95
MAX_SKIP_FRACTION = 0.10


def gammainc_inverse(a: float, p: float, rtol: float = 1e-13, max_iter: int = 200) -> float:
    """x such that P(a, x) = p, with P the regularised lower incomplete gamma function.

    Starts from the Wilson-Hilferty approximation (or the small-x series
    inversion for small ``a``) and refines with safeguarded Halley steps
    inside a shrinking bracket.
    """
    if not a > 0:
        raise DomainError(f"shape parameter must be positive, got {a}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")

    z = ndtri(p)
    c = 1.0 / (9.0 * a)
    x = a * (1.0 - c + z * math.sqrt(c)) ** 3
    if a < 1.0 or x <= 0.0:
        x = math.exp((math.log(p) + gammaln(a + 1.0)) / a)

    lo, hi = 0.0, math.inf
    log_norm = gammaln(a)
    for _ in range(max_iter):
        f = gammainc(a, x) - p
        if f > 0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        dens = math.exp((a - 1.0) * math.log(x) - x - log_norm)
        if dens <= 0.0:
            step = math.nan
        else:
            newton = f / dens
            curv = (a - 1.0) / x - 1.0
            step = newton / max(1.0 - 0.5 * newton * curv, 0.5)
        x_new = x - step
        if math.isfinite(x_new) and abs(x_new - x) <= rtol * x:
            return x_new
        if not (lo < x_new < hi) or not math.isfinite(x_new):
            x_new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * x
        x = x_new
    raise ConvergenceError(f"inverse incomplete gamma did not converge for a={a}, p={p}")


def chi2_lower_quantile(p: float, dof: int) -> float:
    return 2.0 * gammainc_inverse(dof / 2.0, p)


def critical_value(p: float, dof: int) -> float:
    """Lower-tail quantile of chi^2_dof divided by dof."""
    if not 0.0 < p < 0.5:
        raise DomainError(f"confidence level p must lie in (0, 0.5), got {p}")
    if int(dof) != dof or dof < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {dof}")
    return chi2_lower_quantile(p, int(dof)) / dof


def xi_squared(N_Z: float, var_phi: float, L) -> float:
    L_value = L.L if isinstance(L, YfgLimit) else L
    for name, val in (("N_Z", N_Z), ("var_phi", var_phi), ("L", L_value)):
        if not val > 0:
            raise DomainError(f"{name} must be positive, got {val}")
    return float(N_Z * var_phi * L_value)


@dataclass(frozen=True)
class TestResult:
    xi2: float
    L: YfgLimit
    critical: dict
    bootstrap_xi2: tuple
    verdict: dict
    dof: int
    fraction_below: dict = field(default_factory=dict)
    skipped: int = 0
    required_fraction: float = DEFAULT_FRACTION

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "xi2": self.xi2,
            "L": {"L": self.L.L, "generator_term": self.L.generator_term, "score_term": self.L.score_term},
            "critical": {str(p): v for p, v in self.critical.items()},
            "verdict": {str(p): ("certified" if ok else "not-certified") for p, ok in self.verdict.items()},
            "fraction_below": {str(p): v for p, v in self.fraction_below.items()},
            "required_fraction": self.required_fraction,
            "dof": self.dof,
            "skipped": self.skipped,
            "bootstrap_xi2": list(self.bootstrap_xi2),
        }

    def csv_rows(self) -> list[dict]:
        rows = []
        for i, x in enumerate(self.bootstrap_xi2):
            row = {"trial_index": i, "xi2_mc": x}
            for p in LEVELS:
                row[f"critical_{p}"] = self.critical.get(p, math.nan)
            row["xi2_observed"] = self.xi2
            rows.append(row)
        return rows


def bootstrap_test(
    record: CountRecord,
    var_phi: float,
    prior: JointPrior,
    trials: int = 50,
    seed: int = 0,
    *,
    levels=LEVELS,
    required_fraction: float = DEFAULT_FRACTION,
    literal_generator: bool = False,
    resolution: int = DEFAULT_RESOLUTION,
    stream_key: tuple = (),
) -> TestResult:
    """Observed xi^2 plus ``trials`` Poisson-bootstrap replicas of L.

    Each replica resamples the generator-branch tallies, rebuilds
    Delta^2 Y_cond and L (with the observed N_Z in the prior term) and forms
    xi^2_mc = N_Z Var[phi] L_mc.  Level p is certified when the observed xi^2
    and at least ``required_fraction`` of the replicas lie below the critical
    value.
    """
    if trials < 1:
        raise DomainError("bootstrap needs at least one trial")
    n_z = record.n_z
    if n_z < 2:
        raise DegenerateError("steering test needs N_Z >= 2 (dof = N_Z - 1)")
    dof = n_z - 1
    gen_est = reconstruct_generator(record.generator_counts, literal=literal_generator)
    L = yfg_limit(gen_est.delta2_Y_cond, prior, n_z, resolution)
    xi2 = xi_squared(n_z, var_phi, L)

    replicas = []
    skipped = 0
    for t in range(trials):
        resampled = poisson_resample(record, rngmod.stream(seed, rngmod.BOOTSTRAP, *stream_key, t))
        try:
            est = reconstruct_generator(resampled.generator_counts, literal=literal_generator)
        except DegenerateError:
            skipped += 1
            log.warning("bootstrap trial %d skipped: empty generator resample", t)
            continue
        L_mc = yfg_limit(est.delta2_Y_cond, prior, n_z, resolution)
        replicas.append(xi_squared(n_z, var_phi, L_mc))
    if skipped > MAX_SKIP_FRACTION * trials:
        raise DegenerateError(f"{skipped} of {trials} bootstrap trials were degenerate")

    crit = {p: critical_value(p, dof) for p in levels}
    reps = np.asarray(replicas)
    frac = {p: float(np.mean(reps < crit[p])) if reps.size else 0.0 for p in levels}
    verdict = {p: bool(xi2 < crit[p] and frac[p] >= required_fraction) for p in levels}
    return TestResult(xi2, L, crit, tuple(float(x) for x in replicas), verdict, dof, frac, skipped, required_fraction)


def null_rejection_rate(p: float, dof: int, draws: int, seed: int) -> float:
    """Rejection frequency of the lower-tail test on synthetic null data.

    Var[phi] is drawn as (chi^2_dof / dof) / (N_Z L), so xi^2 is a normalised
    chi^2 variable exactly at the boundary of the null hypothesis.
    """
    gen = rngmod.stream(seed, rngmod.CALIBRATION, dof)
    n_z, L = dof + 1, 0.5
    var_phi = gen.chisquare(dof, size=draws) / dof / (n_z * L)
    xi2 = n_z * var_phi * L
    return float(np.mean(xi2 < critical_value(p, dof)))
