"""Stabilizer tableau for pure n-qubit stabilizer states.

Rows are n independent, pairwise commuting Hermitian Pauli strings
whose joint +1 eigenspace is the state.  Supports Clifford gate
conjugation, computational-basis projections with exact probabilities,
qubit removal, and extraction of a graph state with local Clifford
corrections (the form every stabilizer state can be brought to).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .graphs import Graph
from .graph_state import GraphState, ZeroProbabilityError
from .local_clifford import LocalClifford
from .pauli import PauliString, conjugate_two_qubit
from . import statevector as sv


class StabilizerTableau:
    def __init__(self, rows: list[PauliString]):
        if not rows:
            raise ValueError("empty tableau")
        n = rows[0].n
        if len(rows) != n:
            raise ValueError("need exactly n generators for n qubits")
        for r in rows:
            if r.n != n:
                raise ValueError("row sizes differ")
            r.sign()  # raises if not Hermitian
        for i, a in enumerate(rows):
            for b in rows[i + 1:]:
                if not a.commutes_with(b):
                    raise ValueError("generators must commute")
        self.rows = list(rows)

    @property
    def n(self) -> int:
        return self.rows[0].n

    def copy(self) -> "StabilizerTableau":
        t = object.__new__(StabilizerTableau)
        t.rows = list(self.rows)
        return t

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero_states(n: int) -> "StabilizerTableau":
        return StabilizerTableau([PauliString.single(n, q, "Z") for q in range(n)])

    @staticmethod
    def plus_states(n: int) -> "StabilizerTableau":
        return StabilizerTableau([PauliString.single(n, q, "X") for q in range(n)])

    @staticmethod
    def from_graph_state(gs: GraphState) -> "StabilizerTableau":
        return StabilizerTableau(gs.stabilizer_generators())

    # -- Clifford gates ---------------------------------------------------

    def apply_local(self, q: int, op: LocalClifford) -> None:
        self.rows = [op.conjugate_pauli(r, q) for r in self.rows]

    def _apply_two_qubit(self, a: int, b: int, images: dict[str, PauliString]) -> None:
        """Conjugate rows through a two-qubit Clifford given images of
        X_a, Z_a, X_b, Z_b (keys "xa", "za", "xb", "zb")."""
        self.rows = [
            conjugate_two_qubit(
                r, a, b, images["xa"], images["za"], images["xb"], images["zb"]
            )
            for r in self.rows
        ]

    def apply_cz(self, a: int, b: int) -> None:
        n = self.n
        self._apply_two_qubit(a, b, {
            "xa": PauliString(n, 0, 1 << a, 1 << b),
            "za": PauliString(n, 0, 0, 1 << a),
            "xb": PauliString(n, 0, 1 << b, 1 << a),
            "zb": PauliString(n, 0, 0, 1 << b),
        })

    def apply_cnot(self, control: int, target: int) -> None:
        n = self.n
        c, t = control, target
        self._apply_two_qubit(c, t, {
            "xa": PauliString(n, 0, (1 << c) | (1 << t), 0),
            "za": PauliString(n, 0, 0, 1 << c),
            "xb": PauliString(n, 0, 1 << t, 0),
            "zb": PauliString(n, 0, 0, (1 << c) | (1 << t)),
        })

    def apply_zzrot(self, a: int, b: int, sign: int) -> None:
        """exp(sign * i pi/4 Z_a Z_b): X_a -> -sign Y_a Z_b, X_b -> -sign Z_a Y_b."""
        n = self.n
        # -sign * Y_a Z_b = (-sign * i) X_a Z_a Z_b
        pref = 1 if sign == -1 else 3
        self._apply_two_qubit(a, b, {
            "xa": PauliString(n, pref, 1 << a, (1 << a) | (1 << b)),
            "za": PauliString(n, 0, 0, 1 << a),
            "xb": PauliString(n, pref, 1 << b, (1 << a) | (1 << b)),
            "zb": PauliString(n, 0, 0, 1 << b),
        })

    # -- projections and qubit removal ------------------------------------

    def _zq(self, q: int, bit: int) -> PauliString:
        return PauliString(self.n, 2 * bit, 0, 1 << q)

    def project_z(self, q: int, bit: int) -> Fraction:
        """Project qubit q onto |bit>; returns the outcome probability.

        Raises ZeroProbabilityError if the opposite outcome is certain.
        """
        target = self._zq(q, bit)
        anti = [i for i, r in enumerate(self.rows) if (r.x >> q) & 1]
        if anti:
            pivot = anti[0]
            for j in anti[1:]:
                self.rows[j] = self.rows[j] * self.rows[pivot]
            self.rows[pivot] = target
            return Fraction(1, 2)
        # Z_q commutes with the whole group, so +/-Z_q is in it.
        combo = self._solve_member(0, 1 << q)
        if combo is None:
            raise AssertionError("maximal abelian group must contain Z_q")
        prod = PauliString.identity(self.n)
        for i in combo:
            prod = prod * self.rows[i]
        if prod.sign() == (1 if bit == 0 else -1):
            return Fraction(1)
        raise ZeroProbabilityError(f"qubit {q} is fixed to the opposite Z outcome")

    def _solve_member(self, x: int, z: int) -> list[int] | None:
        """Indices of rows whose product is +/-(X^x Z^z), or None."""
        n = self.n
        # GF(2) elimination on (x|z) bit vectors
        basis: list[tuple[int, int]] = []  # (vector, combo mask)
        for i, r in enumerate(self.rows):
            basis.append((r.x | (r.z << n), 1 << i))
        tgt = x | (z << n)
        tmask = 0
        pivots: list[tuple[int, int, int]] = []  # (leading bit, vec, combo)
        for vec, combo in basis:
            for lead, pv, pc in pivots:
                if vec & lead:
                    vec ^= pv
                    combo ^= pc
            if vec:
                pivots.append((vec & -vec, vec, combo))
        for lead, pv, pc in pivots:
            if tgt & lead:
                tgt ^= pv
                tmask ^= pc
        if tgt:
            return None
        return [i for i in range(n) if (tmask >> i) & 1]

    def drop_qubit(self, q: int) -> int:
        """Remove a qubit that is in a definite Z eigenstate.

        Returns the Z outcome bit of the removed qubit.  Raises
        ValueError if the qubit is still entangled.
        """
        combo = self._solve_member(0, 1 << q)
        if combo is None:
            raise ValueError(f"qubit {q} is not in a Z eigenstate")
        prod = PauliString.identity(self.n)
        for i in combo:
            prod = prod * self.rows[i]
        if prod.x or prod.z != (1 << q):
            raise ValueError(f"qubit {q} is not in a Z eigenstate")
        bit = 0 if prod.sign() == 1 else 1
        # make one row equal to +/-Z_q, then clear q from all other rows
        keep = combo[0]
        self.rows[keep] = prod
        for i, r in enumerate(self.rows):
            if i == keep:
                continue
            if (r.x >> q) & 1:
                raise AssertionError("row anticommutes with a group member")
            if (r.z >> q) & 1:
                self.rows[i] = r * prod
        del self.rows[keep]
        self.rows = [r.delete_qubit(q) for r in self.rows]
        return bit

    # -- graph-state extraction -------------------------------------------

    def to_graph_state(self) -> GraphState:
        """Rewrite the state as a graph state with local corrections."""
        n = self.n
        work = self.copy()
        applied = [LocalClifford.identity() for _ in range(n)]

        def apply(q: int, op: LocalClifford) -> None:
            work.apply_local(q, op)
            applied[q] = op @ applied[q]

        pivot_of: dict[int, int] = {}
        consumed: set[int] = set()
        while len(pivot_of) < n:
            hit = None
            for q in range(n):
                if q in pivot_of:
                    continue
                for i in range(n):
                    if i not in consumed and (work.rows[i].x >> q) & 1:
                        hit = (q, i)
                        break
                if hit:
                    break
            if hit is None:
                for q in range(n):
                    if q in pivot_of:
                        continue
                    for i in range(n):
                        if i not in consumed and (work.rows[i].z >> q) & 1:
                            apply(q, LocalClifford.h_gate())
                            hit = (q, i)
                            break
                    if hit:
                        break
            if hit is None:
                raise ValueError("generators are not independent; not a pure state")
            q, i = hit
            for j in range(n):
                if j != i and (work.rows[j].x >> q) & 1:
                    work.rows[j] = work.rows[j] * work.rows[i]
            pivot_of[q] = i
            consumed.add(i)

        work.rows = [work.rows[pivot_of[q]] for q in range(n)]
        for q in range(n):
            if (work.rows[q].z >> q) & 1:
                apply(q, LocalClifford.s_gate())
        for q in range(n):
            if work.rows[q].sign() == -1:
                apply(q, LocalClifford.pauli("Z"))

        edges = []
        for q in range(n):
            row = work.rows[q]
            if row.x != (1 << q) or row.sign() != 1:
                raise AssertionError("reduction did not reach graph form")
            for b in range(q + 1, n):
                if (row.z >> b) & 1:
                    if not (work.rows[b].z >> q) & 1:
                        raise AssertionError("adjacency not symmetric")
                    edges.append((q, b))
        graph = Graph.from_edges(n, edges)
        return GraphState(graph, tuple(op.inverse() for op in applied))

    # -- dense oracle -------------------------------------------------------

    def state_vector(self) -> np.ndarray:
        """Dense vector by projecting a fixed reference vector onto the
        joint +1 eigenspace; independent of the graph-state machinery."""
        rng = np.random.default_rng(20240817)
        psi = sv.random_state(self.n, rng)
        for r in self.rows:
            psi = (psi + sv.apply_pauli(psi, r)) / 2
        nrm = np.linalg.norm(psi)
        if nrm < 1e-9:
            # pathological reference overlap; perturb deterministically
            psi = sv.random_state(self.n, np.random.default_rng(906091))
            for r in self.rows:
                psi = (psi + sv.apply_pauli(psi, r)) / 2
            nrm = np.linalg.norm(psi)
        return psi / nrm
