"""Bayesian estimation of (phi, v) and reconstruction of the generator variance."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateError, DomainError
from .priors import DEFAULT_RESOLUTION, JointPrior
from .qubit import PHASE_ALICE_LABELS, phase_branch_probabilities

LOG_PROB_FLOOR = math.log(1e-300)


def _alice_index(a) -> int:
    if a in (0, "H", 1):
        return 0
    if a in (1, "V", -1):
        return 1
    raise DomainError(f"Alice outcome must be H/V (or +1/-1), got {a!r}")


def _phase_counts(counts) -> np.ndarray:
    arr = np.asarray(getattr(counts, "phase_counts", counts), dtype=float)
    if arr.shape != (4, 2):
        raise DomainError(f"phase counts must have shape (4, 2), got {arr.shape}")
    return arr


def conditional_log_likelihood(phase_counts, a, phi, v):
    """log H_a = sum_b n_ba log p(b|a) at (phi, v); -inf where an observed outcome is impossible."""
    counts = _phase_counts(phase_counts)[:, _alice_index(a)]
    probs = phase_branch_probabilities(phi, v)[:, _alice_index(a)]
    shape = (4,) + (1,) * (probs.ndim - 1)
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    logp = np.where(logp < LOG_PROB_FLOOR, -np.inf, logp)
    terms = np.where(counts.reshape(shape) > 0, counts.reshape(shape) * logp, 0.0)
    out = terms.sum(axis=0)
    return float(out) if np.ndim(out) == 0 else out


def conditional_likelihood(phase_counts, a, phi, v):
    """H_a = prod_b p(b|a)^n_ba."""
    return np.exp(conditional_log_likelihood(phase_counts, a, phi, v))


@dataclass(frozen=True)
class OutcomePosterior:
    phi_mean: float
    phi_var: float
    v_mean: float
    v_var: float
    log_evidence: float
    n: int

    @property
    def evidence(self) -> float:
        return math.exp(self.log_evidence) if self.log_evidence > -745 else 0.0


@dataclass(frozen=True)
class PosteriorSummary:
    outcomes: dict  # Alice label -> OutcomePosterior

    def __getitem__(self, label) -> OutcomePosterior:
        return self.outcomes[PHASE_ALICE_LABELS[_alice_index(label)]]

    def to_dict(self) -> dict:
        return {k: asdict(v) for k, v in self.outcomes.items()}


@dataclass(frozen=True)
class EstimationResult:
    phi_cond: float
    var_phi: float
    v_cond: float
    weights: tuple[float, float]

    def to_dict(self) -> dict:
        return {"phi_cond": self.phi_cond, "var_phi": self.var_phi, "v_cond": self.v_cond, "weights": list(self.weights)}


class PhaseEstimator:
    """Posterior quadrature on a fixed prior grid.

    Log-probability tables for the eight outcomes are built once per
    (prior, resolution) and reused for every record.
    """

    def __init__(self, prior: JointPrior, resolution: int = DEFAULT_RESOLUTION):
        self.prior = prior
        self.resolution = resolution
        grid = prior.grid(resolution)
        self.grid = grid
        phi, v = grid.mesh()
        self._phi = grid.phi_nodes
        self._v = grid.v_nodes
        self._log_p = np.log(phase_branch_probabilities(phi, v))  # (4, 2, n_phi, n_v)
        self._prior_w = grid.weights * prior.density(phi, v)

    def log_likelihood(self, phase_counts, a) -> np.ndarray:
        counts = _phase_counts(phase_counts)[:, _alice_index(a)]
        return np.tensordot(counts, self._log_p[:, _alice_index(a)], axes=1)

    def outcome_posterior(self, phase_counts, a) -> OutcomePosterior:
        counts = _phase_counts(phase_counts)
        ll = self.log_likelihood(counts, a)
        top = ll.max()
        post = self._prior_w * np.exp(ll - top)
        z = post.sum()
        if not z > 1e-300:
            raise DegenerateError("posterior normalisation vanished on the grid")
        post /= z
        m_phi = post.sum(axis=1)
        m_v = post.sum(axis=0)
        phi_mean = float(m_phi @ self._phi)
        v_mean = float(m_v @ self._v)
        phi_var = float(m_phi @ (self._phi - phi_mean) ** 2)
        v_var = float(m_v @ (self._v - v_mean) ** 2)
        return OutcomePosterior(
            phi_mean, phi_var, v_mean, v_var, float(top + math.log(z)), int(counts[:, _alice_index(a)].sum())
        )

    def estimate(self, phase_counts) -> PosteriorSummary:
        return PosteriorSummary(
            {label: self.outcome_posterior(phase_counts, label) for label in PHASE_ALICE_LABELS}
        )


_ESTIMATORS: dict = {}


def estimator_for(prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> PhaseEstimator:
    key = (prior, resolution)
    est = _ESTIMATORS.get(key)
    if est is None:
        if len(_ESTIMATORS) >= 4:
            _ESTIMATORS.clear()
        est = _ESTIMATORS[key] = PhaseEstimator(prior, resolution)
    return est


def bayes_estimate(phase_counts, prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> PosteriorSummary:
    """Posterior means and variances of phi and v for each Alice outcome."""
    return estimator_for(prior, resolution).estimate(phase_counts)


def combine_conditional(summary: PosteriorSummary, phase_counts) -> EstimationResult:
    """Occurrence-weighted mean and squared-weight variance across Alice outcomes."""
    n_a = _phase_counts(phase_counts).sum(axis=0)
    total = n_a.sum()
    if total <= 0:
        raise DegenerateError("conditional estimate needs N_Z > 0")
    w = n_a / total
    posts = [summary[label] for label in PHASE_ALICE_LABELS]
    phi = sum(wi * p.phi_mean for wi, p in zip(w, posts))
    var = sum(wi**2 * p.phi_var for wi, p in zip(w, posts))
    v = sum(wi * p.v_mean for wi, p in zip(w, posts))
    return EstimationResult(float(phi), float(var), float(v), (float(w[0]), float(w[1])))


def conditional_bayes_estimate(phase_counts, prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> EstimationResult:
    counts = _phase_counts(phase_counts)
    if counts.sum() <= 0:
        raise DegenerateError("conditional estimate needs N_Z > 0")
    return combine_conditional(bayes_estimate(counts, prior, resolution), counts)


@dataclass(frozen=True)
class GeneratorEstimate:
    y_L: float
    y_R: float
    delta2_Y_cond: float
    m_L: int
    m_R: int

    @property
    def n_y(self) -> int:
        return self.m_L + self.m_R

    def to_dict(self) -> dict:
        def clean(x):
            return None if math.isnan(x) else x

        return {
            "Y_L": clean(self.y_L),
            "Y_R": clean(self.y_R),
            "delta2_Y_cond": self.delta2_Y_cond,
            "m_L": self.m_L,
            "m_R": self.m_R,
        }


def reconstruct_generator(generator_counts, literal: bool = False) -> GeneratorEstimate:
    """Conditional Y means and Delta^2 Y_cond from Alice-Y/Bob-Y tallies m[b, a].

    Default: Delta^2 Y_cond = sum_a (m_a / N_Y)(1 - Ybar_a^2).  ``literal=True``
    gives 1 - Y_cond^2 with Y_cond the occurrence-weighted signed mean instead;
    note that this is close to 1 for any singlet-like state because the two
    conditional means have opposite signs.  An Alice outcome with no events
    has weight zero and a NaN mean.
    """
    m = np.asarray(getattr(generator_counts, "generator_counts", generator_counts), dtype=float)
    if m.shape != (2, 2):
        raise DomainError(f"generator counts must have shape (2, 2), got {m.shape}")
    if np.any(m < 0):
        raise DomainError("counts must be nonnegative")
    m_a = m.sum(axis=0)
    n_y = m_a.sum()
    if n_y <= 0:
        raise DegenerateError("generator reconstruction needs N_Y > 0")
    with np.errstate(invalid="ignore", divide="ignore"):
        ybar = np.where(m_a > 0, (m[0] - m[1]) / m_a, np.nan)
    w = m_a / n_y
    if literal:
        y_cond = float(np.nansum(w * ybar))
        delta2 = 1.0 - y_cond**2
    else:
        delta2 = float(np.nansum(w * (1.0 - ybar**2)))
    delta2 = min(max(delta2, 0.0), 1.0)
    return GeneratorEstimate(float(ybar[0]), float(ybar[1]), delta2, int(m_a[0]), int(m_a[1]))
