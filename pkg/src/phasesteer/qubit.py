"""Two-qubit model: partially coherent singlet, Bob's phase rotation, assemblages.

All computations live in the singlet frame, where the shared state is

    rho_AB(v) = 1/2 * [[0, 0, 0, 0], [0, 1, -v, 0], [0, -v, 1, 0], [0, 0, 0, 0]]

in the computational basis |00>, |01>, |10>, |11> (0 = H, 1 = V).  The
laboratory state (|HD> + |VA>)/sqrt(2) is obtained from the singlet by the
fixed local map ``Hadamard (Alice) x (-iY) (Bob)``, see
:func:`to_experimental_frame`.  Under that map the laboratory Z measurement of
Alice is the singlet-frame X measurement; the phase branch of the protocol is
therefore modelled with Alice measuring X while its outcomes keep the
laboratory labels H (+1) and V (-1).  Bob's outcomes and Alice's Y outcomes use
the singlet-frame labels D/A (X), L/R (Y), H/V (Z) for +1/-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import DegenerateError, DomainError

I2 = np.eye(2, dtype=complex)
PAULI = MappingProxyType(
    {
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
)
BASIS_LABELS = MappingProxyType({"X": ("D", "A"), "Y": ("L", "R"), "Z": ("H", "V")})
OUTCOMES = (1, -1)

# Phase branch: Alice measures singlet-frame X (recorded as H/V), Bob measures
# X (D/A) or Z (H/V) with equal weight.  Every conditional probability has the
# form p(b|a) = (1 + v cos(phi + offset)) / 2; the offsets follow from Bob's
# conditional Bloch vector a * (-v cos(phi), 0, v sin(phi)).
PHASE_ALICE_LABELS = ("H", "V")
PHASE_BOB_OUTCOMES = (("X", 1), ("X", -1), ("Z", 1), ("Z", -1))  # D, A, H, V
PHASE_BOB_LABELS = ("D", "A", "H", "V")
PHASE_OFFSETS = np.array(
    [
        # a = H (+1)   a = V (-1)
        [np.pi, 0.0],  # b = D
        [0.0, np.pi],  # b = A
        [-np.pi / 2, np.pi / 2],  # b = H
        [np.pi / 2, -np.pi / 2],  # b = V
    ]
)
GENERATOR_LABELS = ("L", "R")

_HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class PauliSetting:
    """A Pauli measurement by one party; outcome +1 is the first basis label."""

    axis: str
    party: str = "bob"

    def __post_init__(self):
        if self.axis not in PAULI:
            raise DomainError(f"unknown Pauli axis {self.axis!r}")
        if self.party not in ("alice", "bob"):
            raise DomainError(f"party must be 'alice' or 'bob', got {self.party!r}")

    @property
    def observable(self) -> np.ndarray:
        return PAULI[self.axis]

    def projector(self, outcome: int) -> np.ndarray:
        _check_outcome(outcome)
        return (I2 + outcome * PAULI[self.axis]) / 2

    def label(self, outcome: int) -> str:
        _check_outcome(outcome)
        return BASIS_LABELS[self.axis][0 if outcome == 1 else 1]


def _check_outcome(outcome):
    if outcome not in OUTCOMES:
        raise DomainError(f"Pauli outcomes are +1 or -1, got {outcome!r}")


def _frozen(matrix):
    out = np.array(matrix, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    matrix: np.ndarray
    v: float

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))
        m = self.matrix
        if m.shape != (4, 4):
            raise DomainError(f"two-qubit state must be 4x4, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > _HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > _HERMITIAN_TOL:
            raise DomainError("density matrix does not have unit trace")
        if np.min(np.linalg.eigvalsh(m)) < -_HERMITIAN_TOL:
            raise DomainError("density matrix is not positive semidefinite")

    @property
    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def bob_marginal(self) -> np.ndarray:
        return np.einsum("ikil->kl", self.matrix.reshape(2, 2, 2, 2))


@dataclass(frozen=True, eq=False)
class ConditionalState:
    """Bob's subnormalised state p(a|K) rho^B_{a|K}."""

    matrix: np.ndarray
    alice_outcome: int
    alice_setting: PauliSetting

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def probability(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> np.ndarray:
        p = self.probability
        if p < 1e-15:
            raise DegenerateError(
                f"Alice outcome {self.alice_outcome} of {self.alice_setting.axis} has zero probability"
            )
        return self.matrix / p

    def expectation(self, observable: np.ndarray) -> float:
        return float(np.trace(observable @ self.normalized()).real)


@dataclass(frozen=True)
class Assemblage:
    entries: Mapping[tuple[str, int], ConditionalState]

    def __getitem__(self, key):
        return self.entries[key]

    def settings(self) -> tuple[str, ...]:
        return tuple(sorted({axis for axis, _ in self.entries}))

    def bob_reduced(self, axis: str) -> np.ndarray:
        """Sum of the subnormalised states for one Alice setting."""
        return sum(self.entries[(axis, a)].matrix for a in OUTCOMES)

    def merged(self, other: "Assemblage") -> "Assemblage":
        return Assemblage({**self.entries, **other.entries})


def partially_coherent_singlet(v: float) -> TwoQubitState:
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {v}")
    m = np.zeros((4, 4), dtype=complex)
    m[1, 1] = m[2, 2] = 0.5
    m[1, 2] = m[2, 1] = -v / 2
    return TwoQubitState(m, float(v))


def phase_rotation(phi: float) -> np.ndarray:
    """exp(-i phi Y / 2)."""
    return np.cos(phi / 2) * I2 - 1j * np.sin(phi / 2) * PAULI["Y"]


def apply_phase(state: TwoQubitState, phi: float) -> TwoQubitState:
    if not np.isfinite(phi):
        raise DomainError("phase must be finite")
    u = np.kron(I2, phase_rotation(phi))
    return TwoQubitState(u @ state.matrix @ u.conj().T, state.v)


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
FRAME_MAP = np.kron(_HADAMARD, -1j * PAULI["Y"])


def to_experimental_frame(state: TwoQubitState) -> TwoQubitState:
    """Map a singlet-frame state to the laboratory frame of (|HD> + |VA>)/sqrt(2)."""
    return TwoQubitState(FRAME_MAP @ state.matrix @ FRAME_MAP.conj().T, state.v)


def assemblage_for(state: TwoQubitState, alice_setting: PauliSetting) -> Assemblage:
    rho = state.matrix.reshape(2, 2, 2, 2)
    entries = {}
    for a in OUTCOMES:
        proj = alice_setting.projector(a)
        # Tr_A[(P_a x I) rho]
        sub = np.einsum("ji,ikjl->kl", proj, rho)
        entries[(alice_setting.axis, a)] = ConditionalState(sub, a, alice_setting)
    return Assemblage(entries)


def outcome_probability(assemblage: Assemblage, a: int, bob_setting: PauliSetting, b: int) -> float:
    """Born-rule conditional probability p(b | a, K) for Alice's setting in the assemblage."""
    axes = assemblage.settings()
    if len(axes) != 1:
        raise DomainError("outcome_probability needs an assemblage for a single Alice setting")
    cond = assemblage[(axes[0], a)]
    return float(np.trace(bob_setting.projector(b) @ cond.normalized()).real)


def joint_probability(state: TwoQubitState, alice_axis: str, a: int, bob_axis: str, b: int) -> float:
    pa = PauliSetting(alice_axis, "alice").projector(a)
    pb = PauliSetting(bob_axis).projector(b)
    return float(np.trace(np.kron(pa, pb) @ state.matrix).real)


def conditional_variance(state: TwoQubitState, alice_axis: str, observable: np.ndarray) -> float:
    """Sum_a p(a|K) Var[O] on Bob's conditional states."""
    asm = assemblage_for(state, PauliSetting(alice_axis, "alice"))
    total = 0.0
    for a in OUTCOMES:
        cond = asm[(alice_axis, a)]
        if cond.probability < 1e-15:
            continue
        mean = cond.expectation(observable)
        total += cond.probability * (cond.expectation(observable @ observable) - mean**2)
    return total


def phase_branch_probabilities(phi, v):
    """Conditional p(b|a) for the phase branch, shape (4, 2, *broadcast(phi, v)).

    Axis 0 runs over Bob outcomes D, A, H, V; axis 1 over Alice outcomes H, V.
    Probabilities for D/A sum to one, as do those for H/V (one Bob setting each).
    """
    phi = np.asarray(phi, dtype=float)
    v = np.asarray(v, dtype=float)
    shape = (4, 2) + (1,) * np.broadcast(phi, v).ndim
    offsets = PHASE_OFFSETS.reshape(shape)
    return 0.5 * (1.0 + v * np.cos(phi + offsets))


def phase_branch_joint(phi, v):
    """Joint probability of the eight phase-branch events with a 50/50 Bob setting choice."""
    return 0.25 * phase_branch_probabilities(phi, v)


def generator_branch_joint(v: float) -> np.ndarray:
    """Joint p(b, a) for Alice and Bob both measuring Y; axes (b, a) over (L, R)."""
    state = partially_coherent_singlet(v)
    return np.array(
        [[joint_probability(state, "Y", a, "Y", b) for a in OUTCOMES] for b in OUTCOMES]
    )


def born_phase_branch_joint(phi: float, v: float) -> np.ndarray:
    """Phase-branch joint probabilities evaluated from density matrices, shape (4, 2).

    Independent of :data:`PHASE_OFFSETS`; used to validate it.  Visibility is
    not range-checked so that finite differences can straddle v = 1.
    """
    m = np.zeros((4, 4), dtype=complex)
    m[1, 1] = m[2, 2] = 0.5
    m[1, 2] = m[2, 1] = -v / 2
    u = np.kron(I2, phase_rotation(phi))
    rho = u @ m @ u.conj().T
    out = np.empty((4, 2))
    for j, a in enumerate(OUTCOMES):
        pa = PauliSetting("X", "alice").projector(a)
        for i, (axis, b) in enumerate(PHASE_BOB_OUTCOMES):
            pb = PauliSetting(axis).projector(b)
            out[i, j] = 0.5 * np.trace(np.kron(pa, pb) @ rho).real
    return out
