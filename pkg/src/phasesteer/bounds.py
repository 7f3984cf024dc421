"""Van Trees matrices, the VT phase bound and the steering limit L.

The steering limit combines the conditional generator variance with the
prior's phase score,

    L = Delta^2 Y_cond + (1/N_Z) int (d_phi P)^2 / P,

and a local-hidden-state model must satisfy  N_Z Var[phi] L >= 1.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import DegenerateError, DomainError, SingularMatrixError
from .information import fisher_entries
from .priors import (
    DEFAULT_RESOLUTION,
    JointPrior,
    _check_convergence,
    integrate,
    phase_density,
    phase_density_derivative,
    score_matrix,
)

log = logging.getLogger(__name__)

MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class VanTreesMatrix:
    entries: np.ndarray
    N: float
    fisher_term: np.ndarray
    score_term: np.ndarray

    def inverse(self) -> np.ndarray:
        if not np.all(np.isfinite(self.entries)) or np.linalg.cond(self.entries) >= MAX_CONDITION:
            raise SingularMatrixError("Van Trees matrix is singular or ill-conditioned")
        return np.linalg.inv(self.entries)


@dataclass(frozen=True)
class YfgLimit:
    L: float
    generator_term: float
    score_term: float


@dataclass(frozen=True)
class VtYfgCheck:
    lhs: float
    violated: bool


def _averaged_fisher(prior: JointPrior, resolution: int) -> np.ndarray:
    grid = prior.grid(resolution)
    phi, v = grid.mesh()
    dens = prior.density(phi, v)
    f_pp, f_pv, f_vv = fisher_entries(phi, v)
    a = integrate(dens * f_pp, grid)
    b = integrate(dens * f_pv, grid)
    c = integrate(dens * f_vv, grid)
    return np.array([[a, b], [b, c]])


_AVERAGE_CACHE: dict = {}


def prior_averaged_fisher(prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """int P F_{B|A} over the prior, checked against a doubled grid."""
    key = (prior, resolution)
    if key not in _AVERAGE_CACHE:
        coarse = _averaged_fisher(prior, resolution)
        fine = _averaged_fisher(prior, 2 * resolution)
        _check_convergence(np.diag(coarse), np.diag(fine), "prior-averaged Fisher matrix")
        _AVERAGE_CACHE[key] = (fine, _checked_score(prior, resolution))
    fisher, _ = _AVERAGE_CACHE[key]
    return fisher.copy()


def _checked_score(prior, resolution):
    coarse = score_matrix(prior, resolution)
    fine = score_matrix(prior, 2 * resolution)
    _check_convergence(np.diag(coarse), np.diag(fine), "prior score matrix")
    return fine


def prior_score(prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    prior_averaged_fisher(prior, resolution)
    return _AVERAGE_CACHE[(prior, resolution)][1].copy()


def van_trees_matrix(prior: JointPrior, N: float, resolution: int = DEFAULT_RESOLUTION) -> VanTreesMatrix:
    """V_ij = int P F_ij + (1/N) int d_i P d_j P / P.  ``N = inf`` drops the prior term."""
    if not N >= 1:
        raise DomainError(f"resource count must be >= 1, got {N}")
    fisher = prior_averaged_fisher(prior, resolution)
    score = prior_score(prior, resolution) / N if math.isfinite(N) else np.zeros((2, 2))
    return VanTreesMatrix(fisher + score, float(N), fisher, score)


def van_trees_phase_bound(V: VanTreesMatrix, N: float) -> float:
    """Lower bound (V^-1)_phi,phi / N on the phase variance."""
    return float(V.inverse()[0, 0] / N)


def conditional_van_trees(counts, prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> VanTreesMatrix:
    """Resource-weighted sum of per-Alice-outcome Van Trees matrices.

    ``counts`` is a :class:`~phasesteer.simulator.CountRecord` or the (4, 2)
    phase-count array.  Each outcome a contributes
    w_a (int P F + S / n_a) with w_a = n_a / N_Z; an outcome with n_a = 0 has
    weight zero and its divergent prior term is dropped.
    """
    phase_counts = getattr(counts, "phase_counts", counts)
    n_a = np.asarray(phase_counts, dtype=float).sum(axis=0)
    total = n_a.sum()
    if total <= 0:
        raise DegenerateError("conditional Van Trees matrix needs at least one phase-branch event")
    fisher = prior_averaged_fisher(prior, resolution)
    score = prior_score(prior, resolution)
    entries = np.zeros((2, 2))
    score_part = np.zeros((2, 2))
    for n in n_a:
        if n == 0:
            warnings.warn("an Alice outcome has no events; its prior term is dropped (0 * inf := 0)", stacklevel=2)
            continue
        w = n / total
        entries += w * (fisher + score / n)
        score_part += w * score / n
    return VanTreesMatrix(entries, float(total), entries - score_part, score_part)


def symmetric_conditional_van_trees(prior: JointPrior, N_Z: float, resolution: int = DEFAULT_RESOLUTION) -> VanTreesMatrix:
    """Conditional matrix for the expected split n_H = n_V = N_Z / 2."""
    fisher = prior_averaged_fisher(prior, resolution)
    score = 2.0 * prior_score(prior, resolution) / N_Z
    return VanTreesMatrix(fisher + score, float(N_Z), fisher, score)


def conditional_phase_bound(prior: JointPrior, N_Z: float, resolution: int = DEFAULT_RESOLUTION) -> float:
    """VT bound on the conditional Bayes variance at the expected outcome split."""
    return van_trees_phase_bound(symmetric_conditional_van_trees(prior, N_Z, resolution), N_Z)


def yfg_limit(delta2_Y_cond: float, prior: JointPrior, N_Z: float, resolution: int = DEFAULT_RESOLUTION) -> YfgLimit:
    if not 0.0 <= delta2_Y_cond <= 1.0:
        raise DomainError(f"conditional generator variance must lie in [0, 1], got {delta2_Y_cond}")
    if not N_Z >= 1:
        raise DomainError(f"N_Z must be >= 1, got {N_Z}")
    score = prior_score(prior, resolution)[0, 0] / N_Z if math.isfinite(N_Z) else 0.0
    return YfgLimit(delta2_Y_cond + score, float(delta2_Y_cond), float(score))


def model_generator_variance(v):
    """Delta^2 Y_cond = 1 - v^2 on the partially coherent singlet."""
    return 1.0 - np.asarray(v, dtype=float) ** 2


def prior_generator_variance(prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> float:
    """Prior average of 1 - v^2 over the visibility factor."""
    grid = prior.grid(resolution)
    dens = prior.density(*grid.mesh())
    return integrate(dens * model_generator_variance(grid.mesh()[1]), grid)


def max_information(v, mode: str = "multi"):
    """Best phase information per event: v^2 (single) or v^2 / (2 - v^2) (multi, at phi = pi/4)."""
    v = np.asarray(v, dtype=float)
    if mode == "single":
        return v**2
    if mode == "multi":
        return v**2 / (2.0 - v**2)
    raise DomainError(f"mode must be 'single' or 'multi', got {mode!r}")


def violation_threshold(mode: str = "multi") -> float:
    """Visibility above which the model's information beats 1 - v^2."""
    max_information(0.5, mode)
    return float(bisect(lambda v: max_information(v, mode) - model_generator_variance(v), 0.0, 1.0, xtol=1e-12))


def vt_yfg_check(V: VanTreesMatrix, L: YfgLimit) -> VtYfgCheck:
    lhs = float(V.inverse()[0, 0] * L.L)
    return VtYfgCheck(lhs, lhs < 1.0)


def single_parameter_vt(prior: JointPrior, v: float, N: float, resolution: int = DEFAULT_RESOLUTION) -> tuple[float, float]:
    """Single-parameter (V, V_YFG) at known visibility, phase prior only.

    V = int P(phi) f_{B|A}(phi|v) dphi + S/N and V_YFG = (1 - v^2) + S/N,
    with S the Gaussian phase score.  The VT-YFG inequality is violated when
    V > V_YFG.
    """
    from .information import conditional_fisher
    from .priors import simpson_rule

    lo, hi = prior.phase.window
    nodes, weights = simpson_rule(lo, hi, resolution)
    dens = phase_density(nodes, prior.phase)
    avg = float(weights @ (dens * conditional_fisher(nodes, v)))
    score = float(weights @ (phase_density_derivative(nodes, prior.phase) ** 2 / dens))
    return avg + score / N, float(model_generator_variance(v)) + score / N


def bound_table(prior: JointPrior, Ns, delta2_Y_cond: float | None = None, resolution: int = DEFAULT_RESOLUTION) -> list[dict]:
    """Rows of (N, bound, generator_term, score_term, lhs, violated) over resource counts."""
    if delta2_Y_cond is None:
        delta2_Y_cond = prior_generator_variance(prior, resolution)
    rows = []
    for N in Ns:
        V = van_trees_matrix(prior, N, resolution)
        L = yfg_limit(delta2_Y_cond, prior, N, resolution)
        check = vt_yfg_check(V, L)
        rows.append(
            {
                "N": N,
                "bound": van_trees_phase_bound(V, N),
                "generator_term": L.generator_term,
                "score_term": L.score_term,
                "lhs": check.lhs,
                "violated": check.violated,
            }
        )
    return rows

