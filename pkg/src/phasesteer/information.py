"""Scalar and matrix Fisher information for the singlet model.

Parameters are always ordered (phi, v).  Closed forms cover the conditional
information of the phase branch; the finite-difference routines accept any
callable returning outcome probabilities and serve as an independent route.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateError, DomainError, SingularityError

FD_STEP = 1e-5
PROB_FLOOR = 1e-12
V_MAX = 1.0 - 1e-9


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.shape != (2, 2):
            raise DomainError(f"Fisher matrix must be 2x2, got {m.shape}")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def phi_phi(self) -> float:
        return float(self.entries[0, 0])

    @property
    def phi_v(self) -> float:
        return float(self.entries[0, 1])

    @property
    def v_v(self) -> float:
        return float(self.entries[1, 1])

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.entries)


@dataclass(frozen=True)
class EffectiveInfo:
    """Phase information left after profiling out the visibility (a Schur complement)."""

    value: float
    schur_penalty: float

    @property
    def inverse_variance_bound(self) -> float:
        return 1.0 / self.value


def _check_probs(p):
    if np.any(p < -1e-9):
        raise DomainError("probability model returned negative probabilities")


def fisher_scalar(prob_model: Callable[[float], np.ndarray], phi: float, step: float = FD_STEP) -> float:
    """Sum_r (d p / d phi)^2 / p by central differences."""
    if step <= 0:
        raise DomainError("finite-difference step must be positive")
    p = np.asarray(prob_model(phi), dtype=float)
    hi = np.asarray(prob_model(phi + step), dtype=float)
    lo = np.asarray(prob_model(phi - step), dtype=float)
    for arr in (p, hi, lo):
        _check_probs(arr)
    dp = (hi - lo) / (2 * step)
    keep = p >= PROB_FLOOR
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def fisher_matrix_fd(
    prob_model: Callable[[float, float], np.ndarray],
    phi: float,
    v: float,
    step: float = FD_STEP,
) -> FisherMatrix:
    """Two-parameter Fisher matrix of ``prob_model(phi, v)`` by central differences."""
    if step <= 0:
        raise DomainError("finite-difference step must be positive")
    p = np.asarray(prob_model(phi, v), dtype=float)
    _check_probs(p)
    d_phi = (np.asarray(prob_model(phi + step, v)) - np.asarray(prob_model(phi - step, v))) / (2 * step)
    d_v = (np.asarray(prob_model(phi, v + step)) - np.asarray(prob_model(phi, v - step))) / (2 * step)
    keep = p >= PROB_FLOOR
    grads = np.stack([d_phi[keep], d_v[keep]])
    return FisherMatrix(grads @ (grads / p[keep]).T)


def conditional_fisher(phi, v):
    """Single-parameter conditional information v^2 cos^2(phi) / (1 - v^2 sin^2(phi)).

    Vectorised over ``phi`` and ``v``.
    """
    phi = np.asarray(phi, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((v < 0) | (v > 1)):
        raise DomainError("visibility must lie in [0, 1]")
    s2 = np.sin(phi) ** 2
    denom = 1.0 - v**2 * s2
    if np.any(denom <= 1e-15):
        raise SingularityError("conditional Fisher information is singular at v = 1, phi = pi/2 + m pi")
    out = v**2 * np.cos(phi) ** 2 / denom
    return float(out) if out.ndim == 0 else out


def fisher_entries(phi, v):
    """Closed-form (F_pp, F_pv, F_vv) of the phase branch, vectorised.

    Bob alternates X and Z with equal weight, so each entry is the average of
    the two single-setting Fisher matrices.
    """
    phi = np.asarray(phi, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any((v < 0) | (v > V_MAX)):
        raise SingularityError(f"conditional Fisher matrix needs 0 <= v <= {V_MAX}")
    s2 = np.sin(phi) ** 2
    c2 = np.cos(phi) ** 2
    v2 = v**2
    den_z = 1.0 - v2 * s2
    den_x = 1.0 - v2 * c2
    f_pp = 0.5 * v2 * (c2 / den_z + s2 / den_x)
    f_vv = 0.5 * (s2 / den_z + c2 / den_x)
    f_pv = -(v**3) * np.sin(4 * phi) / (8 * (1 - v2) + 2 * v2**2 * np.sin(2 * phi) ** 2)
    return f_pp, f_pv, f_vv


def conditional_fisher_matrix(phi: float, v: float) -> FisherMatrix:
    if not np.isfinite(phi):
        raise DomainError("phase must be finite")
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {v}")
    f_pp, f_pv, f_vv = fisher_entries(phi, v)
    return FisherMatrix(np.array([[f_pp, f_pv], [f_pv, f_vv]]))


def effective_phase_info(F: FisherMatrix) -> EffectiveInfo:
    f_pv, f_vv = F.phi_v, F.v_v
    if f_vv <= 1e-15:
        if f_pv != 0.0:
            raise DegenerateError("visibility information vanishes while correlations do not")
        return EffectiveInfo(F.phi_phi, 0.0)
    penalty = f_pv**2 / f_vv
    return EffectiveInfo(F.phi_phi - penalty, penalty)


def correlation_coefficient(Finv) -> float:
    Finv = np.asarray(Finv, dtype=float)
    if Finv[0, 0] <= 0 or Finv[1, 1] <= 0:
        raise DegenerateError("correlation coefficient needs positive diagonal variances")
    return float(Finv[0, 1] / np.sqrt(Finv[0, 0] * Finv[1, 1]))


def single_parameter_model(v: float) -> Callable[[float], np.ndarray]:
    """Joint outcome probabilities for Alice X and Bob Z as a function of phi."""
    from .qubit import phase_branch_probabilities

    def model(phi):
        cond = phase_branch_probabilities(phi, v)[2:]  # Bob H, V
        return 0.5 * cond.ravel()

    return model


def phase_branch_model(phi, v):
    """Joint probabilities of the 8 phase-branch events, for :func:`fisher_matrix_fd`."""
    from .qubit import phase_branch_joint

    return phase_branch_joint(phi, v).ravel()
