import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcool.errors import ConfigurationError
from qcool.hamiltonian import (
    LatticeSpec,
    ScheduleSet,
    annealed_max_coupling,
    bath_position,
    build_model,
    build_tfim,
    coupling_at,
    densify,
    system_position,
    zeeman_at,
)


def test_chain_bonds_are_open():
    assert LatticeSpec("chain", 4).bonds() == [(0, 1), (1, 2), (2, 3)]


def test_square_bonds_row_major():
    bonds = LatticeSpec("square", (3, 3)).bonds()
    assert len(bonds) == 12
    assert (0, 1) in bonds and (0, 3) in bonds and (2, 3) not in bonds


def test_lattice_validation():
    with pytest.raises(ConfigurationError):
        LatticeSpec("chain", 0)
    with pytest.raises(ConfigurationError):
        LatticeSpec("square", (1, 3))
    with pytest.raises(ConfigurationError):
        LatticeSpec("chain", 4, boundary="periodic")
    with pytest.raises(ConfigurationError):
        LatticeSpec("hexagonal", 4)


def test_term_counts():
    terms = build_model(LatticeSpec("square", (3, 3)), 1.0, 1.5)
    assert len(terms.problem_terms) == 9 + 12
    assert len(terms.bath_terms) == 9 and len(terms.coupling_terms) == 9
    assert terms.n_qubits == 18


def test_interleaved_positions():
    assert [system_position(i) for i in range(3)] == [0, 2, 4]
    assert [bath_position(i) for i in range(3)] == [1, 3, 5]
    c = build_model(LatticeSpec("chain", 3), 1.0, 1.0).coupling_terms[2]
    assert c.factors == {4: "X", 5: "X"}


def test_two_site_tfim_matrix():
    # H = g(X0 + X1) + J Z0 Z1, written out by hand in the |b1 b0> basis
    g, J = 0.7, 1.3
    X = np.array([[0, 1], [1, 0]])
    Z = np.diag([1, -1])
    I = np.eye(2)
    ref = g * (np.kron(I, X) + np.kron(X, I)) + J * np.kron(Z, Z)
    terms = build_tfim(LatticeSpec("chain", 2), J, g)
    got = densify(terms.problem_terms, 2, terms.system_positions)
    np.testing.assert_allclose(got, ref, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(g_A=st.floats(-3, 3), J=st.floats(-2, 2), g_P=st.floats(0.1, 3))
def test_total_hamiltonian_is_hermitian(g_A, J, g_P):
    terms = build_model(LatticeSpec("chain", 3), 1.0, g_P)
    H = densify(terms.at(g_A, J), terms.n_qubits)
    assert np.abs(H - H.conj().T).max() <= 1e-12


def test_schedule_endpoints_and_trapezoid():
    s = ScheduleSet(g_max=2.5, g_min=0.1, T=20, t0=2, t1=18, J0=0.5, v=0.9)
    assert zeeman_at(s, 0) == 2.5
    assert zeeman_at(s, 20) == pytest.approx(0.1)
    assert coupling_at(s, 0, 0.5) == 0
    assert coupling_at(s, 1, 0.5) == pytest.approx(0.25)
    assert coupling_at(s, 10, 0.5) == 0.5
    assert coupling_at(s, 20, 0.5) == 0
    assert annealed_max_coupling(s, 2) == pytest.approx(0.5 * 0.81)


def test_schedule_continuity_at_breakpoints():
    s = ScheduleSet(T=20, t0=2, t1=18)
    for t in (s.t0, s.t1):
        left = s.coupling(np.nextafter(t, 0), 1.0)
        right = s.coupling(np.nextafter(t, np.inf), 1.0)
        assert abs(left - right) < 1e-12
    assert s.coupling(s.t0, 1.0) == 1.0 and s.coupling(s.t1, 1.0) == 1.0


def test_schedule_validation():
    with pytest.raises(ConfigurationError):
        ScheduleSet(v=1.5)
    with pytest.raises(ConfigurationError):
        ScheduleSet(t0=5, t1=3)
    with pytest.raises(ConfigurationError):
        ScheduleSet(g_max=0.1, g_min=0.5)
    with pytest.raises(ConfigurationError):
        ScheduleSet().zeeman(25.0)
