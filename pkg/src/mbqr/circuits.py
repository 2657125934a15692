"""Clifford circuits with post-selected Z projections.

The gate set is what the purification and swap subroutines need:

    H q / S q / SDG q / X q / Y q / Z q   single-qubit Cliffords
    CZ a b / CNOT a b                     two-qubit gates
    XROT q s      exp(s i pi/4 X_q),  s in {+, -}
    ZZROT a b s   exp(s i pi/4 Z_a Z_b)
    PROJZ q b     project qubit q onto |b>, then retire the wire

A circuit declares ordered input and output wires.  Projected wires
must not be touched afterwards, and every wire must end its life as
either an output or a projection (nothing is silently discarded).
The same grammar is used for the text format, one gate per line,
with IN/OUT declarations first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .local_clifford import LocalClifford
from .pauli import PauliString, conjugate_two_qubit
from . import statevector as sv

_ONE_QUBIT = ("H", "S", "SDG", "X", "Y", "Z")


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    arg: int = 0  # rotation sign for XROT/ZZROT, outcome bit for PROJZ

    def __post_init__(self) -> None:
        if self.kind in _ONE_QUBIT:
            want = 1
        elif self.kind in ("CZ", "CNOT", "ZZROT"):
            want = 2
        elif self.kind in ("XROT", "PROJZ"):
            want = 1
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != want:
            raise ValueError(f"{self.kind} takes {want} qubit(s)")
        if self.kind in ("XROT", "ZZROT") and self.arg not in (1, -1):
            raise ValueError(f"{self.kind} needs a sign of +1 or -1")
        if self.kind == "PROJZ" and self.arg not in (0, 1):
            raise ValueError("PROJZ outcome bit must be 0 or 1")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate qubits must be distinct")


_LOCAL_GATES = {
    "H": LocalClifford.h_gate,
    "S": LocalClifford.s_gate,
    "SDG": lambda: LocalClifford.from_images("Y", -1, "Z", 1),
    "X": lambda: LocalClifford.pauli("X"),
    "Y": lambda: LocalClifford.pauli("Y"),
    "Z": lambda: LocalClifford.pauli("Z"),
}


def local_op(gate: Gate) -> LocalClifford:
    if gate.kind in _LOCAL_GATES:
        return _LOCAL_GATES[gate.kind]()
    if gate.kind == "XROT":
        return LocalClifford.sqrt_ix(gate.arg)
    raise ValueError(f"{gate.kind} is not a single-qubit gate")


def two_qubit_images(gate: Gate, n: int) -> dict[str, PauliString]:
    a, b = gate.qubits
    if gate.kind == "CZ":
        return {
            "xa": PauliString(n, 0, 1 << a, 1 << b),
            "za": PauliString(n, 0, 0, 1 << a),
            "xb": PauliString(n, 0, 1 << b, 1 << a),
            "zb": PauliString(n, 0, 0, 1 << b),
        }
    if gate.kind == "CNOT":
        return {
            "xa": PauliString(n, 0, (1 << a) | (1 << b), 0),
            "za": PauliString(n, 0, 0, 1 << a),
            "xb": PauliString(n, 0, 1 << b, 0),
            "zb": PauliString(n, 0, 0, (1 << a) | (1 << b)),
        }
    if gate.kind == "ZZROT":
        pref = 1 if gate.arg == -1 else 3  # -sign*Y_aZ_b = (-sign*i) X_aZ_aZ_b
        return {
            "xa": PauliString(n, pref, 1 << a, (1 << a) | (1 << b)),
            "za": PauliString(n, 0, 0, 1 << a),
            "xb": PauliString(n, pref, 1 << b, (1 << a) | (1 << b)),
            "zb": PauliString(n, 0, 0, 1 << b),
        }
    raise ValueError(f"{gate.kind} is not a two-qubit gate")


@dataclass(frozen=True)
class CliffordCircuit:
    n: int
    gates: tuple[Gate, ...]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]

    def __post_init__(self) -> None:
        for w in (*self.inputs, *self.outputs):
            if not 0 <= w < self.n:
                raise ValueError(f"wire {w} out of range")
        if len(set(self.inputs)) != len(self.inputs):
            raise ValueError("duplicate input wire")
        if len(set(self.outputs)) != len(self.outputs):
            raise ValueError("duplicate output wire")
        dead: set[int] = set()
        for g in self.gates:
            for q in g.qubits:
                if q >= self.n:
                    raise ValueError(f"gate wire {q} out of range")
                if q in dead:
                    raise ValueError(f"wire {q} used after projection")
            if g.kind == "PROJZ":
                dead.add(g.qubits[0])
        for w in self.outputs:
            if w in dead:
                raise ValueError(f"output wire {w} was projected")
        for w in range(self.n):
            if w not in dead and w not in self.outputs:
                raise ValueError(f"wire {w} is neither projected nor an output")

    @property
    def projections(self) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.kind == "PROJZ")

    # -- error propagation ------------------------------------------------

    def propagate_pauli(self, p: PauliString) -> tuple[int, PauliString]:
        """Push a Pauli from the circuit start to the end, mod phase.

        Returns (flip mask over this circuit's projections in program
        order, residual Pauli on the surviving wires).  Bit j of the
        mask is set when the Pauli flips the outcome of projection j.
        """
        if p.n != self.n:
            raise ValueError("Pauli width must match circuit width")
        flips = 0
        j = 0
        for g in self.gates:
            if g.kind == "PROJZ":
                w = g.qubits[0]
                if (p.x >> w) & 1:
                    flips |= 1 << j
                p = PauliString(p.n, 0, p.x & ~(1 << w), p.z & ~(1 << w))
                j += 1
            elif g.kind in ("CZ", "CNOT", "ZZROT"):
                im = two_qubit_images(g, self.n)
                p = conjugate_two_qubit(p, *g.qubits, im["xa"], im["za"], im["xb"], im["zb"])
            else:
                p = local_op(g).conjugate_pauli(p, g.qubits[0])
        return flips, PauliString(p.n, 0, p.x, p.z)

    # -- dense execution ----------------------------------------------------

    def run_dense(self, psi: np.ndarray, n_total: int, wire_map: list[int]) -> np.ndarray:
        """Apply the circuit to a dense state; projections post-select
        the declared outcome bit (unnormalized).  wire_map[w] is the
        global qubit carrying circuit wire w."""
        for g in self.gates:
            qs = [wire_map[q] for q in g.qubits]
            if g.kind == "PROJZ":
                psi = sv.project_qubit(psi, n_total, qs[0], g.arg)
            elif g.kind == "CZ":
                psi = sv.apply_cz(psi, n_total, qs[0], qs[1])
            elif g.kind == "CNOT":
                psi = sv.apply_cnot(psi, n_total, qs[0], qs[1])
            elif g.kind == "ZZROT":
                idx = np.arange(1 << n_total)
                par = ((idx >> qs[0]) & 1) ^ ((idx >> qs[1]) & 1)
                psi = np.exp(g.arg * 1j * np.pi / 4 * np.where(par, -1.0, 1.0)) * psi
            else:
                psi = sv.apply_1q(psi, n_total, qs[0], local_op(g).matrix())
        return psi

    # -- text format ----------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"QUBITS {self.n}"]
        lines.extend(f"IN {w}" for w in self.inputs)
        lines.extend(f"OUT {w}" for w in self.outputs)
        for g in self.gates:
            parts = [g.kind, *map(str, g.qubits)]
            if g.kind in ("XROT", "ZZROT"):
                parts.append("+" if g.arg == 1 else "-")
            elif g.kind == "PROJZ":
                parts.append(str(g.arg))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "CliffordCircuit":
        n = None
        inputs: list[int] = []
        outputs: list[int] = []
        gates: list[Gate] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            kind = parts[0].upper()
            try:
                if kind == "QUBITS":
                    n = int(parts[1])
                elif kind == "IN":
                    inputs.append(int(parts[1]))
                elif kind == "OUT":
                    outputs.append(int(parts[1]))
                elif kind in ("XROT", "ZZROT"):
                    *qs, sgn = parts[1:]
                    if sgn not in ("+", "-"):
                        raise ValueError(f"sign must be + or -, got {sgn!r}")
                    gates.append(Gate(kind, tuple(map(int, qs)), 1 if sgn == "+" else -1))
                elif kind == "PROJZ":
                    gates.append(Gate(kind, (int(parts[1]),), int(parts[2])))
                elif kind in _ONE_QUBIT or kind in ("CZ", "CNOT"):
                    gates.append(Gate(kind, tuple(int(x) for x in parts[1:])))
                else:
                    raise ValueError(f"unknown statement {kind!r}")
            except (IndexError, ValueError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        if n is None:
            raise ValueError("missing QUBITS declaration")
        return CliffordCircuit(n, tuple(gates), tuple(inputs), tuple(outputs))
