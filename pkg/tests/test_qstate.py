import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcool.errors import ConfigurationError, InvariantError
from qcool.qstate import (
    BATH_EXCITED,
    BATH_GROUND,
    NoiseModel,
    PauliString,
    StateVector,
    apply_noise_step,
    apply_pauli_string,
    draw_jumps,
    inner_product,
    measure_qubit_z,
    reset_bath_qubit,
    z_plus_probability,
)

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def kron_matrix(factors: dict, n: int) -> np.ndarray:
    # qubit q is bit q, so the highest qubit is the leftmost tensor factor
    out = np.array([[1.0 + 0j]])
    for q in reversed(range(n)):
        out = np.kron(out, PAULI[factors.get(q, "I")])
    return out


def random_state(n, rng):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, v / np.linalg.norm(v))


def test_basis_state_bit_order():
    s = StateVector.basis([1, 0, 0])
    assert s.amplitudes[1] == 1
    assert z_plus_probability(s, 0) == 0.0
    assert z_plus_probability(s, 1) == 1.0


def test_x_on_zero_gives_one():
    s = apply_pauli_string(StateVector.basis([0]), PauliString({0: "X"}))
    np.testing.assert_allclose(s.amplitudes, [0, 1])


def test_y_phase_convention():
    s = apply_pauli_string(StateVector.basis([0]), PauliString({0: "Y"}))
    np.testing.assert_allclose(s.amplitudes, [0, 1j])


@settings(max_examples=60, deadline=None)
@given(
    facs=st.dictionaries(st.integers(0, 3), st.sampled_from("XYZ"), max_size=4),
    coef=st.floats(-3, 3),
    seed=st.integers(0, 2**32 - 1),
)
def test_pauli_string_matches_kronecker(facs, coef, seed):
    s = random_state(4, np.random.default_rng(seed))
    out = apply_pauli_string(s, PauliString(facs, coef))
    np.testing.assert_allclose(out.amplitudes, coef * kron_matrix(facs, 4) @ s.amplitudes, atol=1e-12)


def test_pauli_string_validation():
    with pytest.raises(ConfigurationError):
        PauliString({0: "W"})
    with pytest.raises(ConfigurationError):
        apply_pauli_string(StateVector.basis([0, 0]), PauliString({2: "X"}))


def test_inner_product_conjugate_linear_and_size_check():
    rng = np.random.default_rng(1)
    a, b = random_state(3, rng), random_state(3, rng)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)))
    assert inner_product(a, a) == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        inner_product(a, random_state(2, rng))


def test_measurement_projects_and_normalizes():
    amps = np.array([np.sqrt(0.3), np.sqrt(0.7)], dtype=complex)
    s = StateVector(1, amps)
    outcome, post = measure_qubit_z(s, 0, np.random.default_rng(0))
    assert post.norm() == pytest.approx(1.0, abs=1e-14)
    assert z_plus_probability(post, 0) == (1.0 if outcome == +1 else 0.0)


def test_measurement_of_eigenstate_is_deterministic():
    s = StateVector.basis([0, 1])
    rng = np.random.default_rng(3)
    assert all(measure_qubit_z(s, 1, rng)[0] == -1 for _ in range(50))


def test_reset_returns_bath_to_ground():
    s = StateVector.basis([0, 0])  # bath qubit 1 in the +1 (excited) state
    out = reset_bath_qubit(s, 1, BATH_EXCITED)
    assert z_plus_probability(out, 1) == 0.0
    same = reset_bath_qubit(StateVector.basis([0, 1]), 1, BATH_GROUND)
    assert z_plus_probability(same, 1) == 0.0


def test_zero_weight_outcome_is_an_invariant_error():
    class Always:
        def random(self):
            return 0.0

    # the +1 outcome has weight 1e-20 and the draw selects it anyway
    s = StateVector(1, np.array([1e-10, 1.0], dtype=complex))
    with pytest.raises(InvariantError):
        measure_qubit_z(s, 0, Always())


def test_noise_model_validation():
    with pytest.raises(ConfigurationError):
        NoiseModel("amplitude_damping", 0.1)
    with pytest.raises(ConfigurationError):
        NoiseModel("pauli_x", -1.0)
    with pytest.raises(ConfigurationError):
        NoiseModel("pauli_x", 200.0).check_step(0.01)


def test_noise_none_never_jumps():
    occurs, _ = draw_jumps(NoiseModel("none", 0.5), 0.1, 4, np.random.default_rng(0), 1000)
    assert not occurs.any()


def test_noise_kinds_are_paired():
    rng_a, rng_b = np.random.default_rng(7), np.random.default_rng(7)
    occ_x, _ = draw_jumps(NoiseModel("pauli_x", 0.2), 0.1, 3, rng_a, 500)
    occ_z, w_z = draw_jumps(NoiseModel("pauli_z", 0.2), 0.1, 3, rng_b, 500)
    np.testing.assert_array_equal(occ_x, occ_z)
    assert (w_z == 2).all()


def test_jump_count_mean_matches_rate():
    # 8 target qubits, 1e5 steps: mean jumps per step = 8 * rate * dt
    rate, dt, n_targets, n_steps = 0.01, 0.05, 8, 100_000
    occurs, which = draw_jumps(NoiseModel("depolarizing", rate), dt, n_targets, np.random.default_rng(11), n_steps)
    p = rate * dt
    mean = occurs.sum(axis=1).mean()
    sigma = np.sqrt(n_targets * p * (1 - p) / n_steps)
    assert abs(mean - n_targets * p) < 4 * sigma
    counts = np.bincount(which[occurs], minlength=3)
    assert counts.min() > 0.25 * counts.sum()


def test_apply_noise_step_targets_system_only():
    labels = {("system", 0): 0, ("bath", 0): 1}
    s = StateVector.basis([0, 1], labels)
    noise = NoiseModel("pauli_x", 0.99 / 0.01)
    out, jumps = apply_noise_step(s, noise, 0.01, np.random.default_rng(0))
    assert all(q == 0 for q, _ in jumps)
    assert out.norm() == pytest.approx(1.0)
