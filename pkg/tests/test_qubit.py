import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasesteer.errors import DegenerateError, DomainError
from phasesteer.qubit import (
    OUTCOMES,
    PAULI,
    Assemblage,
    ConditionalState,
    PauliSetting,
    TwoQubitState,
    apply_phase,
    assemblage_for,
    born_phase_branch_joint,
    conditional_variance,
    generator_branch_joint,
    joint_probability,
    partially_coherent_singlet,
    phase_branch_joint,
    phase_branch_probabilities,
    phase_rotation,
    to_experimental_frame,
)

phases = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
visibilities = st.floats(0.0, 1.0)


class TestState:
    def test_singlet_matrix(self):
        rho = partially_coherent_singlet(0.8).matrix
        expected = np.zeros((4, 4))
        expected[1, 1] = expected[2, 2] = 0.5
        expected[1, 2] = expected[2, 1] = -0.4
        np.testing.assert_allclose(rho, expected)

    @given(visibilities)
    def test_valid_density_matrix(self, v):
        rho = partially_coherent_singlet(v).matrix
        assert abs(np.trace(rho) - 1) < 1e-12
        assert np.linalg.eigvalsh(rho).min() > -1e-12

    def test_purity(self):
        assert partially_coherent_singlet(1.0).purity == pytest.approx(1.0)
        assert partially_coherent_singlet(0.0).purity == pytest.approx(0.5)

    def test_visibility_out_of_range(self):
        with pytest.raises(DomainError):
            partially_coherent_singlet(1.2)

    def test_rejects_non_hermitian(self):
        m = np.eye(4, dtype=complex) / 4
        m[0, 1] = 0.1
        with pytest.raises(DomainError):
            TwoQubitState(m, 0.0)

    def test_rejects_negative_state(self):
        with pytest.raises(DomainError):
            TwoQubitState(np.diag([1.5, -0.5, 0, 0]).astype(complex), 0.0)

    def test_experimental_frame(self):
        h, v = np.array([1, 0]), np.array([0, 1])
        d, a = (h + v) / math.sqrt(2), (h - v) / math.sqrt(2)
        psi = (np.kron(h, d) + np.kron(v, a)) / math.sqrt(2)
        rho = to_experimental_frame(partially_coherent_singlet(1.0)).matrix
        np.testing.assert_allclose(rho, np.outer(psi, psi.conj()), atol=1e-12)

    def test_phase_rotation_is_unitary(self):
        u = phase_rotation(0.7)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-14)


class TestAssemblage:
    @given(visibilities, phases, st.sampled_from("XYZ"))
    @settings(max_examples=40)
    def test_no_signalling(self, v, phi, axis):
        state = apply_phase(partially_coherent_singlet(v), phi)
        asm = assemblage_for(state, PauliSetting(axis, "alice"))
        np.testing.assert_allclose(asm.bob_reduced(axis), np.eye(2) / 2, atol=1e-12)

    def test_conditional_bloch_vector(self):
        v, phi = 0.9, 0.4
        asm = assemblage_for(apply_phase(partially_coherent_singlet(v), phi), PauliSetting("X", "alice"))
        for a in OUTCOMES:
            cond = asm[("X", a)]
            bloch = [cond.expectation(PAULI[k]) for k in "XYZ"]
            np.testing.assert_allclose(bloch, a * np.array([-v * math.cos(phi), 0, v * math.sin(phi)]), atol=1e-12)

    def test_zero_probability_state_cannot_be_normalised(self):
        asm = assemblage_for(partially_coherent_singlet(1.0), PauliSetting("Z", "alice"))
        merged = Assemblage({("Z", 1): asm[("Z", 1)]})
        assert merged[("Z", 1)].probability == pytest.approx(0.5)
        zero = ConditionalState(np.zeros((2, 2), dtype=complex), 1, PauliSetting("Z", "alice"))
        with pytest.raises(DegenerateError):
            zero.normalized()


class TestPhaseBranch:
    @given(phases, visibilities)
    def test_matches_born_rule(self, phi, v):
        np.testing.assert_allclose(phase_branch_joint(phi, v), born_phase_branch_joint(phi, v), atol=1e-12)

    @given(phases, visibilities)
    def test_normalised(self, phi, v):
        p = phase_branch_probabilities(phi, v)
        np.testing.assert_allclose(p[:2].sum(axis=0), 1.0)
        np.testing.assert_allclose(p[2:].sum(axis=0), 1.0)
        assert phase_branch_joint(phi, v).sum() == pytest.approx(1.0)

    def test_pure_state_zeros(self):
        # at v = 1, phi = 0 the outcome pairs (D, H) and (A, V) never occur
        p = phase_branch_probabilities(0.0, 1.0)
        assert p[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert p[1, 1] == pytest.approx(0.0, abs=1e-15)

    def test_broadcast_shape(self):
        assert phase_branch_probabilities(np.zeros((3, 1)), np.ones((1, 5)) * 0.5).shape == (4, 2, 3, 5)

    def test_alice_marginal_uniform(self):
        np.testing.assert_allclose(phase_branch_joint(0.3, 0.7).sum(axis=0), [0.5, 0.5])


class TestGeneratorBranch:
    @given(visibilities)
    def test_anticorrelated(self, v):
        m = generator_branch_joint(v)
        assert m.sum() == pytest.approx(1.0)
        corr = m[0, 0] + m[1, 1] - m[0, 1] - m[1, 0]
        assert corr == pytest.approx(-v, abs=1e-12)

    @given(visibilities)
    def test_conditional_variance(self, v):
        state = partially_coherent_singlet(v)
        assert conditional_variance(state, "Y", PAULI["Y"]) == pytest.approx(1 - v**2, abs=1e-12)

    @given(visibilities, phases)
    def test_generator_variance_is_phase_independent(self, v, phi):
        state = apply_phase(partially_coherent_singlet(v), phi)
        assert conditional_variance(state, "Y", PAULI["Y"]) == pytest.approx(1 - v**2, abs=1e-12)

    def test_joint_probability_bad_outcome(self):
        with pytest.raises(DomainError):
            joint_probability(partially_coherent_singlet(0.5), "Y", 2, "Y", 1)
