"""Factorised prior P(phi, v) and the tensor-product quadrature used everywhere.

The phase prior is Gaussian; the visibility prior is a raised cosine
supported on (2 v0 - 1, 1).  Integrals run on composite Simpson grids over
``mu +/- 6 sigma`` and ``[2 v0 - 1 + eps, 1 - eps]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError

DEFAULT_RESOLUTION = 512
PHASE_WINDOW = 6.0
V_EPS = 1e-9
CONVERGENCE_RTOL = 1e-4


@dataclass(frozen=True)
class PhasePrior:
    mu: float = math.pi / 4
    sigma: float = math.pi / 16

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"phase prior width must be positive, got {self.sigma}")

    @property
    def window(self) -> tuple[float, float]:
        return self.mu - PHASE_WINDOW * self.sigma, self.mu + PHASE_WINDOW * self.sigma


@dataclass(frozen=True)
class VisibilityPrior:
    v0: float = 0.95

    def __post_init__(self):
        if not 0.5 < self.v0 < 1.0:
            raise DomainError(f"expected visibility v0 must lie in (1/2, 1), got {self.v0}")

    @property
    def support(self) -> tuple[float, float]:
        return 2 * self.v0 - 1, 1.0

    @property
    def half_width(self) -> float:
        return 1.0 - self.v0


def phase_density(phi, prior: PhasePrior):
    z = (np.asarray(phi, dtype=float) - prior.mu) / prior.sigma
    return np.exp(-0.5 * z**2) / math.sqrt(2 * math.pi * prior.sigma**2)


def phase_density_derivative(phi, prior: PhasePrior):
    phi = np.asarray(phi, dtype=float)
    return -(phi - prior.mu) / prior.sigma**2 * phase_density(phi, prior)


def visibility_density(v, prior: VisibilityPrior):
    v = np.asarray(v, dtype=float)
    w = prior.half_width
    lo, hi = prior.support
    inside = (v > lo) & (v < hi)
    # (1 + cos u) / (2w) written as cos^2(u/2) / w to avoid cancellation at the edges
    dens = np.cos(0.5 * math.pi * (v - prior.v0) / w) ** 2 / w
    out = np.where(inside, dens, 0.0)
    return float(out) if out.ndim == 0 else out


def visibility_density_derivative(v, prior: VisibilityPrior):
    v = np.asarray(v, dtype=float)
    w = prior.half_width
    lo, hi = prior.support
    inside = (v > lo) & (v < hi)
    d = -math.pi * np.sin(math.pi * (v - prior.v0) / w) / (2 * w**2)
    out = np.where(inside, d, 0.0)
    return float(out) if out.ndim == 0 else out


def visibility_score_density(v, prior: VisibilityPrior):
    """(d_v P_v)^2 / P_v = (pi / w)^2 sin^2(u/2) / w with u = pi (v - v0) / w."""
    v = np.asarray(v, dtype=float)
    w = prior.half_width
    lo, hi = prior.support
    inside = (v > lo) & (v < hi)
    out = np.where(inside, (math.pi / w) ** 2 * np.sin(0.5 * math.pi * (v - prior.v0) / w) ** 2 / w, 0.0)
    return float(out) if out.ndim == 0 else out


def simpson_rule(a: float, b: float, intervals: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson's rule with an even number of intervals."""
    if intervals < 2 or intervals % 2:
        raise DomainError(f"Simpson's rule needs an even number of intervals, got {intervals}")
    nodes = np.linspace(a, b, intervals + 1)
    h = (b - a) / intervals
    weights = np.full(intervals + 1, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    return nodes, weights * h / 3


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    phi_nodes: np.ndarray
    phi_weights: np.ndarray
    v_nodes: np.ndarray
    v_weights: np.ndarray
    resolution: int

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable (phi, v) arrays of shape (n_phi, 1) and (1, n_v)."""
        return self.phi_nodes[:, None], self.v_nodes[None, :]

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.phi_weights, self.v_weights)


@dataclass(frozen=True)
class JointPrior:
    phase: PhasePrior = field(default_factory=PhasePrior)
    visibility: VisibilityPrior = field(default_factory=VisibilityPrior)

    @classmethod
    def from_values(cls, mu=math.pi / 4, sigma=math.pi / 16, v0=0.95) -> "JointPrior":
        return cls(PhasePrior(mu, sigma), VisibilityPrior(v0))

    def density(self, phi, v):
        return phase_density(phi, self.phase) * visibility_density(v, self.visibility)

    def grid(self, resolution: int = DEFAULT_RESOLUTION) -> QuadratureGrid:
        return _grid_for(self, resolution)

    def describe(self) -> dict:
        lo, hi = self.phase.window
        return {
            "mu": self.phase.mu,
            "sigma": self.phase.sigma,
            "v0": self.visibility.v0,
            "phi_window": [lo, hi],
            "v_support": list(self.visibility.support),
        }


_GRID_CACHE: dict = {}


def _grid_for(prior: JointPrior, resolution: int) -> QuadratureGrid:
    key = (prior, resolution)
    grid = _GRID_CACHE.get(key)
    if grid is None:
        lo, hi = prior.phase.window
        phi_nodes, phi_w = simpson_rule(lo, hi, resolution)
        v_lo, v_hi = prior.visibility.support
        v_nodes, v_w = simpson_rule(v_lo + V_EPS, v_hi - V_EPS, resolution)
        for arr in (phi_nodes, phi_w, v_nodes, v_w):
            arr.setflags(write=False)
        grid = QuadratureGrid(phi_nodes, phi_w, v_nodes, v_w, resolution)
        if len(_GRID_CACHE) > 64:
            _GRID_CACHE.clear()
        _GRID_CACHE[key] = grid
    return grid


def integrate(values, grid: QuadratureGrid) -> float:
    """Tensor-product Simpson integral of values sampled on ``grid.mesh()``.

    ``values`` may be an array broadcastable to (n_phi, n_v) or a callable
    ``f(phi, v)`` evaluated on the mesh.
    """
    if callable(values):
        values = values(*grid.mesh())
    values = np.broadcast_to(np.asarray(values, dtype=float), (grid.phi_nodes.size, grid.v_nodes.size))
    if not np.all(np.isfinite(values)):
        raise DomainError("integrand is not finite on every quadrature node")
    return float(grid.phi_weights @ values @ grid.v_weights)


def score_matrix(prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """Prior score matrix  int (d_i P)(d_j P) / P  over (phi, v)."""
    grid = prior.grid(resolution)
    phi, v = grid.mesh()
    p_phi = phase_density(phi, prior.phase)
    p_v = visibility_density(v, prior.visibility)
    d_phi = phase_density_derivative(phi, prior.phase)
    d_v = visibility_density_derivative(v, prior.visibility)
    s_pp = integrate(d_phi**2 / p_phi * p_v, grid)
    s_vv = integrate(p_phi * visibility_score_density(v, prior.visibility), grid)
    s_pv = integrate(d_phi * d_v, grid)
    return np.array([[s_pp, s_pv], [s_pv, s_vv]])


def converged_score_matrix(prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    coarse = score_matrix(prior, resolution)
    fine = score_matrix(prior, 2 * resolution)
    _check_convergence(np.diag(coarse), np.diag(fine), "prior score integral")
    return fine


def _check_convergence(coarse, fine, what):
    coarse = np.asarray(coarse, dtype=float)
    fine = np.asarray(fine, dtype=float)
    scale = np.maximum(np.abs(fine), 1e-300)
    if np.any(np.abs(fine - coarse) > CONVERGENCE_RTOL * scale):
        raise ConvergenceError(f"{what} changed by more than {CONVERGENCE_RTOL:g} relative on grid doubling")


def phase_score_integral(prior: JointPrior, N: float = 1, resolution: int = DEFAULT_RESOLUTION) -> float:
    """(1/N) int (d_phi P)^2 / P dphi dv; equals 1/(N sigma^2) for the Gaussian factor."""
    if not N >= 1:
        raise DomainError(f"resource count must be >= 1, got {N}")
    if math.isinf(N):
        return 0.0
    coarse = score_matrix(prior, resolution)[0, 0]
    fine = score_matrix(prior, 2 * resolution)[0, 0]
    _check_convergence(coarse, fine, "phase score integral")
    return fine / N


def visibility_score_integral(prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> float:
    """int (d_v P)^2 / P dphi dv; pi^2 / (1 - v0)^2 for the raised cosine."""
    coarse = score_matrix(prior, resolution)[1, 1]
    fine = score_matrix(prior, 2 * resolution)[1, 1]
    _check_convergence(coarse, fine, "visibility score integral")
    return fine


@dataclass(frozen=True)
class PriorMoments:
    mass: float
    phi_mean: float
    v_mean: float


def prior_moments(prior: JointPrior, resolution: int = DEFAULT_RESOLUTION) -> PriorMoments:
    grid = prior.grid(resolution)
    dens = prior.density(*grid.mesh())
    phi, v = grid.mesh()
    return PriorMoments(integrate(dens, grid), integrate(phi * dens, grid), integrate(v * dens, grid))
