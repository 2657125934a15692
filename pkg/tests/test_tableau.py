import numpy as np
import pytest

from mbqr.graph_state import GraphState, ZeroProbabilityError
from mbqr.graphs import Graph
from mbqr.local_clifford import LocalClifford
from mbqr.pauli import PauliString
from mbqr import statevector as sv
from mbqr.tableau import StabilizerTableau

from oracles import collinear


def zzrot_dense(psi, n, a, b, sign):
    idx = np.arange(1 << n)
    par = ((idx >> a) & 1) ^ ((idx >> b) & 1)
    return np.exp(sign * 1j * np.pi / 4 * np.where(par, -1.0, 1.0)) * psi


def random_evolved(rng, n, n_gates=12, start="zero"):
    """Apply the same random Clifford circuit to a tableau and a vector."""
    if start == "zero":
        tab = StabilizerTableau.zero_states(n)
        psi = sv.zero_state(n)
    else:
        tab = StabilizerTableau.plus_states(n)
        psi = sv.plus_state(n)
    h = LocalClifford.h_gate()
    s = LocalClifford.s_gate()
    for _ in range(n_gates):
        kind = rng.integers(5)
        if kind == 0:
            q = int(rng.integers(n))
            tab.apply_local(q, h)
            psi = sv.apply_1q(psi, n, q, h.matrix())
        elif kind == 1:
            q = int(rng.integers(n))
            tab.apply_local(q, s)
            psi = sv.apply_1q(psi, n, q, s.matrix())
        elif kind == 2 and n > 1:
            a, b = map(int, rng.choice(n, size=2, replace=False))
            tab.apply_cz(a, b)
            psi = sv.apply_cz(psi, n, a, b)
        elif kind == 3 and n > 1:
            a, b = map(int, rng.choice(n, size=2, replace=False))
            tab.apply_cnot(a, b)
            psi = sv.apply_cnot(psi, n, a, b)
        elif kind == 4 and n > 1:
            a, b = map(int, rng.choice(n, size=2, replace=False))
            sign = 1 if rng.random() < 0.5 else -1
            tab.apply_zzrot(a, b, sign)
            psi = zzrot_dense(psi, n, a, b, sign)
    return tab, psi


def test_gates_match_dense():
    rng = np.random.default_rng(31)
    for _ in range(40):
        n = int(rng.integers(1, 6))
        tab, psi = random_evolved(rng, n, start="zero" if rng.random() < 0.5 else "plus")
        assert collinear(tab.state_vector(), psi)


def test_rows_stay_valid():
    rng = np.random.default_rng(32)
    tab, _ = random_evolved(rng, 5, n_gates=40)
    StabilizerTableau(tab.rows)  # revalidates commutation and hermiticity


def test_project_z_random_probability():
    rng = np.random.default_rng(33)
    for _ in range(40):
        n = int(rng.integers(1, 5))
        tab, psi = random_evolved(rng, n)
        q = int(rng.integers(n))
        bit = int(rng.integers(2))
        dense = sv.project_qubit(psi, n, q, bit)
        p_dense = float(np.vdot(dense, dense).real)
        work = tab.copy()
        try:
            p = work.project_z(q, bit)
        except ZeroProbabilityError:
            assert p_dense < 1e-12
            continue
        assert abs(float(p) - p_dense) < 1e-12
        assert collinear(work.state_vector(), dense)


def test_project_z_deterministic():
    tab = StabilizerTableau.zero_states(2)
    assert tab.project_z(0, 0) == 1
    with pytest.raises(ZeroProbabilityError):
        tab.project_z(1, 1)


def test_drop_qubit_after_projection():
    rng = np.random.default_rng(34)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        tab, psi = random_evolved(rng, n)
        q = int(rng.integers(n))
        bit = int(rng.integers(2))
        try:
            tab.project_z(q, bit)
        except ZeroProbabilityError:
            continue
        out = tab.drop_qubit(q)
        assert out == bit
        dense = sv.contract_qubit(sv.project_qubit(psi, n, q, bit), n, q, bit)
        assert collinear(tab.state_vector(), dense)


def test_drop_entangled_qubit_raises():
    tab = StabilizerTableau.zero_states(2)
    tab.apply_local(0, LocalClifford.h_gate())
    tab.apply_cnot(0, 1)
    with pytest.raises(ValueError):
        tab.drop_qubit(0)


def test_to_graph_state_random():
    rng = np.random.default_rng(35)
    for _ in range(60):
        n = int(rng.integers(1, 6))
        tab, psi = random_evolved(rng, n, n_gates=int(rng.integers(0, 18)))
        gs = tab.to_graph_state()
        assert collinear(gs.state_vector(), psi)


def test_to_graph_state_ghz():
    tab = StabilizerTableau.zero_states(3)
    tab.apply_local(0, LocalClifford.h_gate())
    tab.apply_cnot(0, 1)
    tab.apply_cnot(0, 2)
    gs = tab.to_graph_state()
    # GHZ reduces to a connected 3-vertex graph
    assert len(gs.graph.edges) in (2, 3)
    assert all(gs.graph.neighbors(v) for v in range(3))
    psi = np.zeros(8, dtype=complex)
    psi[0] = psi[7] = 2 ** -0.5
    assert collinear(gs.state_vector(), psi)


def test_to_graph_state_product_states():
    # |00>: needs the H fallback branch for every column
    gs = StabilizerTableau.zero_states(2).to_graph_state()
    assert gs.graph == Graph.empty(2)
    assert collinear(gs.state_vector(), sv.zero_state(2))
    # |ii>: exercises the S diagonal-clearing branch
    tab = StabilizerTableau.plus_states(2)
    tab.apply_local(0, LocalClifford.s_gate())
    tab.apply_local(1, LocalClifford.s_gate())
    psi = sv.plus_state(2)
    for q in range(2):
        psi = sv.apply_1q(psi, 2, q, LocalClifford.s_gate().matrix())
    assert collinear(tab.to_graph_state().state_vector(), psi)


def test_graph_state_roundtrip():
    rng = np.random.default_rng(36)
    from test_graph_state import random_graph_state

    for _ in range(20):
        n = int(rng.integers(1, 6))
        gs = random_graph_state(rng, n)
        tab = StabilizerTableau.from_graph_state(gs)
        back = tab.to_graph_state()
        assert collinear(back.state_vector(), gs.state_vector())


def test_zzrot_matches_dense():
    rng = np.random.default_rng(37)
    for sign in (1, -1):
        tab = StabilizerTableau.plus_states(3)
        psi = sv.plus_state(3)
        tab.apply_zzrot(0, 2, sign)
        psi = zzrot_dense(psi, 3, 0, 2, sign)
        assert collinear(tab.state_vector(), psi)


def test_rejects_bad_rows():
    with pytest.raises(ValueError):
        StabilizerTableau([PauliString.from_label("XI"), PauliString.from_label("ZI")])
    with pytest.raises(ValueError):
        StabilizerTableau([PauliString(1, 1, 1, 0)])  # iX not Hermitian
    with pytest.raises(ValueError):
        StabilizerTableau([PauliString.from_label("X")] * 2)
