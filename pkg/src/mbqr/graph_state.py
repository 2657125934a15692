"""Graph states with per-qubit local Clifford corrections.

A state is stored as (G, C) representing (tensor_a C_a) |G>, where |G>
is the graph state of G.  Pauli measurements map such states to such
states by graph surgery plus updated corrections, so arbitrarily long
measurement sequences stay in this closed form.

Measurement rules on a bare graph state |G>, vertex a, outcome t:

* Z: new graph G - a; correction I (t=+1) or prod_{b in N_a} Z_b (t=-1).
* Y: new graph tau_a(G) - a; correction prod_{b in N_a} (-t i Z_b)^{1/2}.
* X with N_a empty: deterministic +1 outcome, no correction.
* X otherwise, with b0 = min N_a:
  new graph tau_{b0}( tau_a(tau_{b0}(G)) - a );
  t=+1: (+i Y_{b0})^{1/2} prod_{b in N_a - N_{b0} - {b0}} Z_b,
  t=-1: (-i Y_{b0})^{1/2} prod_{b in N_{b0} - N_a - {a}} Z_b,
  neighborhoods taken in the original graph.

tau_a is local complementation at a.  Outcome probabilities are exact
(0, 1/2 or 1) and returned as fractions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graphs import Graph
from .local_clifford import LocalClifford
from .pauli import PauliString
from . import statevector as sv


class ZeroProbabilityError(ValueError):
    """Raised when a forced measurement outcome has probability zero."""


@dataclass(frozen=True)
class GraphState:
    graph: Graph
    corrections: tuple[LocalClifford, ...]

    def __post_init__(self) -> None:
        if len(self.corrections) != self.graph.n:
            raise ValueError("need one correction per vertex")

    @staticmethod
    def bare(graph: Graph) -> "GraphState":
        return GraphState(graph, (LocalClifford.identity(),) * graph.n)

    @property
    def n(self) -> int:
        return self.graph.n

    def with_local(self, a: int, op: LocalClifford) -> "GraphState":
        """Apply one more local unitary on qubit a (op acts after everything)."""
        cs = list(self.corrections)
        cs[a] = op @ cs[a]
        return GraphState(self.graph, tuple(cs))

    def stabilizer_generators(self) -> list[PauliString]:
        """Generators C K_a C^dag of the stabilizer group of the full state."""
        out = []
        n = self.n
        for a in range(n):
            g = PauliString(n, 0, 1 << a, self.graph.adjacency_mask(a))
            for q in range(n):
                g = self.corrections[q].conjugate_pauli(g, q)
            out.append(g)
        return out

    def state_vector(self) -> np.ndarray:
        psi = sv.graph_state_vector(self.graph)
        for q, c in enumerate(self.corrections):
            psi = sv.apply_1q(psi, self.n, q, c.matrix())
        return psi


def _rule_correction_z(g: Graph, a: int, t: int) -> dict[int, LocalClifford]:
    if t == 1:
        return {}
    return {b: LocalClifford.pauli("Z") for b in g.neighbors(a)}


def _rule_correction_y(g: Graph, a: int, t: int) -> dict[int, LocalClifford]:
    return {b: LocalClifford.sqrt_iz(-t) for b in g.neighbors(a)}


def _rule_correction_x(g: Graph, a: int, b0: int, t: int) -> dict[int, LocalClifford]:
    na = g.neighbors(a)
    nb = g.neighbors(b0)
    ops: dict[int, LocalClifford] = {b0: LocalClifford.sqrt_iy(t)}
    zs = (na - nb - {b0}) if t == 1 else (nb - na - {a})
    for b in zs:
        ops[b] = LocalClifford.pauli("Z")
    return ops


def measure_pauli(
    gs: GraphState, a: int, basis: str, outcome: int
) -> tuple[GraphState, Fraction]:
    """Project qubit ``a`` onto the ``outcome`` eigenstate of ``basis``.

    Returns the post-measurement state on the remaining qubits (vertex
    ``a`` deleted, higher indices shifted down) and the exact outcome
    probability.  Raises :class:`ZeroProbabilityError` on a forced
    outcome that cannot occur.
    """
    if basis not in ("X", "Y", "Z"):
        raise ValueError(f"basis must be X, Y or Z, got {basis!r}")
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    g = gs.graph
    if not 0 <= a < g.n:
        raise ValueError(f"vertex {a} out of range")

    # Fold the local correction on a into the measured operator:
    # measuring P on C|G> == measuring C_a^dag P C_a on |G>.
    eff = gs.corrections[a].inverse().image_of(PauliString.single(1, 0, basis))
    eff_basis = eff.letters()
    t = outcome * eff.sign()

    def shift(v: int) -> int:
        return v - 1 if v > a else v

    prob = Fraction(1, 2)
    if eff_basis == "Z":
        new_graph = g.removed(a)
        rule_ops = _rule_correction_z(g, a, t)
    elif eff_basis == "Y":
        new_graph = g.local_complement(a).removed(a)
        rule_ops = _rule_correction_y(g, a, t)
    else:
        nbrs = g.neighbors(a)
        if not nbrs:
            if t == -1:
                raise ZeroProbabilityError(
                    f"X on isolated vertex {a} is deterministic; outcome -1 impossible"
                )
            new_graph = g.removed(a)
            rule_ops = {}
            prob = Fraction(1)
        else:
            b0 = min(nbrs)
            new_graph = g.local_complement(b0).local_complement(a).removed(a)
            new_graph = new_graph.local_complement(shift(b0))
            rule_ops = _rule_correction_x(g, a, b0, t)

    new_corr = []
    for b in range(g.n):
        if b == a:
            continue
        c = gs.corrections[b]
        if b in rule_ops:
            c = c @ rule_ops[b]
        new_corr.append(c)
    return GraphState(new_graph, tuple(new_corr)), prob


def measure_sampled(
    gs: GraphState, a: int, basis: str, rng: np.random.Generator
) -> tuple[GraphState, int]:
    """Measure with a random outcome drawn from the exact distribution."""
    try:
        plus, p_plus = measure_pauli(gs, a, basis, 1)
    except ZeroProbabilityError:
        return measure_pauli(gs, a, basis, -1)[0], -1
    if p_plus == 1 or rng.random() < float(p_plus):
        return plus, 1
    return measure_pauli(gs, a, basis, -1)[0], -1


def z_decouple(gs: GraphState, a: int, outcome: int = 1) -> GraphState:
    """Z-measure vertex ``a`` (forced outcome), detaching it from the graph."""
    return measure_pauli(gs, a, "Z", outcome)[0]


def relabeled(gs: GraphState, perm: dict[int, int]) -> GraphState:
    """Permute qubits (old index -> new index)."""
    corr: list[LocalClifford | None] = [None] * gs.n
    for q, c in enumerate(gs.corrections):
        corr[perm[q]] = c
    return GraphState(gs.graph.relabeled(perm), tuple(corr))


def complemented(gs: GraphState, a: int) -> GraphState:
    """Rewrite the same physical state over the locally complemented graph.

    Uses |tau_a(G)> = U_a(G) |G> with
    U_a(G) = (-i X_a)^{1/2} prod_{b in N_a} (i Z_b)^{1/2},
    so (G, C) and (tau_a(G), C U_a^dag) describe the same state.
    """
    g = gs.graph
    ops = {a: LocalClifford.sqrt_ix(-1)}
    for b in g.neighbors(a):
        ops[b] = LocalClifford.sqrt_iz(1)
    cs = list(gs.corrections)
    for q, op in ops.items():
        cs[q] = cs[q] @ op.inverse()
    return GraphState(g.local_complement(a), tuple(cs))
