"""Compile Clifford circuits into graph resource states.

A circuit with n_in inputs and n_out outputs maps, through the
channel-state duality, to a pure stabilizer state on n_in + n_out
qubits: prepare a Bell pair per input (port + wire), run the circuit
on the wires, post-select every PROJZ on its declared outcome, and
keep ports plus output wires.  Bringing that state to graph form
yields the minimal resource for measurement-based execution: qubit
count equals inputs + outputs, with no ancillas.

Execution semantics verified by ``verify_resource``: for every
read-in outcome pattern k (one Bell label per input),

    <Phi_k| (|psi> (x) |R>)   is collinear with   C_0 B(k) |psi>

where C_0 is the post-selected projective circuit and B(k) inserts
the Pauli X^x Z^z of each outcome label at the corresponding input.
Relative norms across patterns must agree as well, so branch
probabilities survive compilation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import CliffordCircuit, local_op
from .graph_state import GraphState, ZeroProbabilityError, relabeled
from .local_clifford import LocalClifford
from .pauli import PauliString
from .tableau import StabilizerTableau
from . import statevector as sv


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class ResourceState:
    """Compiled resource: ports (one per circuit input, in input order)
    followed by output qubits (in output order)."""

    circuit: CliffordCircuit
    graph_state: GraphState

    @property
    def n_ports(self) -> int:
        return len(self.circuit.inputs)

    @property
    def n_outputs(self) -> int:
        return len(self.circuit.outputs)

    @property
    def n_qubits(self) -> int:
        return self.graph_state.n

    def port(self, i: int) -> int:
        return i

    def output(self, i: int) -> int:
        return self.n_ports + i


def jamiolkowski_tableau(circuit: CliffordCircuit) -> StabilizerTableau:
    """Stabilizer state of ports + all wires, before removing projected
    wires.  Port i sits at qubit i, wire w at qubit n_in + w."""
    n_in = len(circuit.inputs)
    total = n_in + circuit.n
    tab = StabilizerTableau.zero_states(total)
    h = LocalClifford.h_gate()
    for i, w in enumerate(circuit.inputs):
        tab.apply_local(i, h)
        tab.apply_cnot(i, n_in + w)
    for g in circuit.gates:
        qs = [n_in + q for q in g.qubits]
        if g.kind == "PROJZ":
            try:
                tab.project_z(qs[0], g.arg)
            except ZeroProbabilityError as exc:
                raise CompileError(f"projection branch is unreachable: {exc}") from exc
        elif g.kind == "CZ":
            tab.apply_cz(qs[0], qs[1])
        elif g.kind == "CNOT":
            tab.apply_cnot(qs[0], qs[1])
        elif g.kind == "ZZROT":
            tab.apply_zzrot(qs[0], qs[1], g.arg)
        else:
            tab.apply_local(qs[0], local_op(g))
    return tab


def compile_resource(circuit: CliffordCircuit) -> ResourceState:
    n_in = len(circuit.inputs)
    tab = jamiolkowski_tableau(circuit)
    projected = sorted(
        (g.qubits[0] for g in circuit.projections), reverse=True
    )
    for w in projected:
        tab.drop_qubit(n_in + w)
    # remaining wires are exactly the outputs, in ascending wire order;
    # bring them into declared output order behind the ports
    alive = sorted(circuit.outputs)
    perm = {i: i for i in range(n_in)}
    for r, w in enumerate(alive):
        perm[n_in + r] = n_in + circuit.outputs.index(w)
    gs = relabeled(tab.to_graph_state(), perm)
    return ResourceState(circuit, gs)


def _inject_inputs(psi_in: np.ndarray, circuit: CliffordCircuit) -> np.ndarray:
    """Place an input-register state onto the circuit wires, ancillas at |0>."""
    n = circuit.n
    joint = np.zeros(1 << n, dtype=complex)
    idx_in = np.arange(1 << len(circuit.inputs))
    pos = np.zeros_like(idx_in)
    for j, w in enumerate(circuit.inputs):
        pos |= ((idx_in >> j) & 1) << w
    joint[pos] = psi_in
    return joint


def run_reference(circuit: CliffordCircuit, psi_in: np.ndarray) -> np.ndarray:
    """Run the post-selected projective circuit on an input state.

    Returns the unnormalized state on the output wires, in declared
    output order.
    """
    psi = _inject_inputs(psi_in, circuit)
    psi = circuit.run_dense(psi, circuit.n, list(range(circuit.n)))
    dead = sorted((g.qubits[0] for g in circuit.projections), reverse=True)
    bits = {g.qubits[0]: g.arg for g in circuit.projections}
    n = circuit.n
    for w in dead:
        psi = sv.contract_qubit(psi, n, w, bits[w])
        n -= 1
    # wires now sit in ascending order; realign to declared output order
    alive = sorted(circuit.outputs)
    if tuple(alive) != circuit.outputs:
        perm = [alive.index(w) for w in circuit.outputs]  # new q -> current q
        view = psi.reshape((2,) * n)
        order = [n - 1 - perm[n - 1 - k] for k in range(n)]
        psi = np.transpose(view, order).reshape(-1)
    return psi


def verify_resource(
    circuit: CliffordCircuit,
    resource: ResourceState | None = None,
    n_states: int = 2,
    k_limit: int | None = None,
    seed: int = 1777,
) -> float:
    """Check the measurement-based execution identity; returns the
    largest deviation seen (collinearity defect or norm-ratio spread).

    Exhausts all 4^n_in read-in patterns unless k_limit caps them
    (patterns are then sampled without replacement).
    """
    if resource is None:
        resource = compile_resource(circuit)
    rng = np.random.default_rng(seed)
    n_in = len(circuit.inputs)
    n_res = resource.n_qubits
    r_vec = resource.graph_state.state_vector()
    total = n_in + n_res
    pairs = [(i, n_in + i) for i in range(n_in)]

    all_k = np.arange(4 ** n_in)
    if k_limit is not None and k_limit < all_k.size:
        all_k = rng.choice(all_k, size=k_limit, replace=False)

    worst = 0.0
    for _ in range(n_states):
        psi = sv.random_state(n_in, rng)
        joint = np.kron(r_vec, psi)
        lhs_all = sv.bell_transform_all(joint, total, pairs)
        lhs_flat = lhs_all.reshape(4 ** n_in, -1)
        ratios = []
        for k in all_k:
            b = PauliString.identity(n_in)
            for i in range(n_in):
                # axis i of the Bell transform is digit i from the top
                g = (int(k) >> (2 * (n_in - 1 - i))) & 3
                b = b * PauliString(n_in, 0, ((g >> 1) & 1) << i, (g & 1) << i)
            rhs = run_reference(circuit, sv.apply_pauli(psi, b))
            lhs = lhs_flat[int(k)]
            nl, nr = np.linalg.norm(lhs), np.linalg.norm(rhs)
            if nr < 1e-12 or nl < 1e-12:
                if not (nr < 1e-10 and nl < 1e-10):
                    worst = max(worst, 1.0)
                continue
            a = lhs / nl
            c = rhs / nr
            ph = c[int(np.argmax(np.abs(a)))] / a[int(np.argmax(np.abs(a)))]
            ph /= abs(ph)
            worst = max(worst, float(np.max(np.abs(ph * a - c))))
            ratios.append(nl / nr)
        if ratios:
            r = np.array(ratios)
            worst = max(worst, float(np.max(np.abs(r / r.mean() - 1.0))))
    return worst
