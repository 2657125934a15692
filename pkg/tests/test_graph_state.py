import numpy as np
import pytest

from mbqr.graphs import Graph, complete_graph, path_graph
from mbqr.graph_state import (
    GraphState,
    ZeroProbabilityError,
    complemented,
    measure_pauli,
    measure_sampled,
    z_decouple,
)
from mbqr.local_clifford import LocalClifford, all_elements
from mbqr import statevector as sv

from oracles import (
    PAULI_EIGVECS,
    collinear,
    contract_eigvec,
    pauli_eigenprojector,
    pauli_matrix,
)


def random_graph_state(rng, n, with_corrections=True):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
    gs = GraphState.bare(Graph.from_edges(n, edges))
    if with_corrections:
        elems = all_elements()
        cs = tuple(elems[rng.integers(24)] for _ in range(n))
        gs = GraphState(gs.graph, cs)
    return gs


def check_measurement_against_dense(gs, a, basis, outcome, tol=1e-10):
    """Compare the graph rule with a dense projector computation."""
    psi = gs.state_vector()
    proj = pauli_eigenprojector(gs.n, a, basis, outcome)
    phi = proj @ psi
    p_dense = float(np.vdot(phi, phi).real)
    try:
        post, p_rule = measure_pauli(gs, a, basis, outcome)
    except ZeroProbabilityError:
        assert p_dense < tol
        return
    assert abs(float(p_rule) - p_dense) < tol
    if p_dense < tol:
        return
    rest = contract_eigvec(phi, a, PAULI_EIGVECS[(basis, outcome)])
    assert collinear(rest, post.state_vector(), tol)


def test_measurement_rules_random_cases():
    rng = np.random.default_rng(101)
    for _ in range(150):
        n = int(rng.integers(1, 8))
        gs = random_graph_state(rng, n)
        a = int(rng.integers(n))
        basis = "XYZ"[rng.integers(3)]
        outcome = 1 if rng.random() < 0.5 else -1
        check_measurement_against_dense(gs, a, basis, outcome)


def test_measurement_rules_bare_graphs():
    # no corrections: exercises the raw graph rules directly
    rng = np.random.default_rng(102)
    for _ in range(60):
        n = int(rng.integers(1, 7))
        gs = random_graph_state(rng, n, with_corrections=False)
        a = int(rng.integers(n))
        for basis in "XYZ":
            for outcome in (1, -1):
                check_measurement_against_dense(gs, a, basis, outcome)


def test_z_measurement_cuts_vertex():
    gs = GraphState.bare(path_graph(3))
    post, p = measure_pauli(gs, 1, "Z", 1)
    assert p == 0.5
    assert post.graph == Graph.empty(2)
    assert post.corrections == (LocalClifford.identity(),) * 2
    post_minus, _ = measure_pauli(gs, 1, "Z", -1)
    assert post_minus.corrections == (LocalClifford.pauli("Z"),) * 2


def test_y_measurement_complements_neighborhood():
    gs = GraphState.bare(complete_graph(3))
    post, p = measure_pauli(gs, 0, "Y", 1)
    assert p == 0.5
    assert post.graph == Graph.empty(2)
    assert post.corrections == (LocalClifford.sqrt_iz(-1),) * 2


def test_x_measurement_on_path_end():
    gs = GraphState.bare(path_graph(2))
    post, p = measure_pauli(gs, 0, "X", 1)
    assert p == 0.5
    assert post.graph == Graph.empty(1)
    assert post.corrections == (LocalClifford.sqrt_iy(1),)


def test_x_on_isolated_vertex_is_deterministic():
    gs = GraphState.bare(Graph.empty(2))
    post, p = measure_pauli(gs, 0, "X", 1)
    assert p == 1
    assert post.graph == Graph.empty(1)
    with pytest.raises(ZeroProbabilityError):
        measure_pauli(gs, 0, "X", -1)


def test_z_decouple():
    gs = GraphState.bare(path_graph(3))
    post = z_decouple(gs, 2)
    assert post.graph == path_graph(2)


def test_measure_sampled_matches_forced_branches():
    rng = np.random.default_rng(103)
    gs = random_graph_state(rng, 5)
    for basis in "XYZ":
        post, outcome = measure_sampled(gs, 2, basis, rng)
        forced, _ = measure_pauli(gs, 2, basis, outcome)
        assert post == forced


def test_local_complement_identity_all_small_graphs():
    # |tau_a(G)> equals U_a(G)|G> up to phase, for every graph with n <= 4
    for n in range(2, 5):
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        for mask in range(1 << len(pairs)):
            g = Graph.from_edges(n, [e for k, e in enumerate(pairs) if (mask >> k) & 1])
            for a in range(n):
                lhs = sv.graph_state_vector(g.local_complement(a))
                gs = GraphState.bare(g)
                gs = gs.with_local(a, LocalClifford.sqrt_ix(-1))
                for b in g.neighbors(a):
                    gs = gs.with_local(b, LocalClifford.sqrt_iz(1))
                assert collinear(lhs, gs.state_vector())


def test_complemented_preserves_state():
    rng = np.random.default_rng(104)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        gs = random_graph_state(rng, n)
        a = int(rng.integers(n))
        other = complemented(gs, a)
        assert other.graph == gs.graph.local_complement(a)
        assert collinear(gs.state_vector(), other.state_vector())


def test_stabilizer_generators_fix_state():
    rng = np.random.default_rng(105)
    for _ in range(30):
        n = int(rng.integers(1, 6))
        gs = random_graph_state(rng, n)
        psi = gs.state_vector()
        for gen in gs.stabilizer_generators():
            m = pauli_matrix(n, gen.phase_power, gen.x, gen.z)
            assert np.allclose(m @ psi, psi)


def test_with_local_matches_dense():
    rng = np.random.default_rng(106)
    elems = all_elements()
    for _ in range(20):
        n = int(rng.integers(1, 5))
        gs = random_graph_state(rng, n)
        a = int(rng.integers(n))
        op = elems[rng.integers(24)]
        lhs = gs.with_local(a, op).state_vector()
        rhs = sv.apply_1q(gs.state_vector(), n, a, op.matrix())
        assert collinear(lhs, rhs)
