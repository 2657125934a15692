"""Entanglement purification on Bell-diagonal pairs with noisy resources.

Two independent evaluation routes compute the action of a protocol
element (see :mod:`mbqr.protocols`) on Bell-diagonal input pairs when
every resource qubit suffers local white noise:

* :func:`mb_purify_fast` works in the Pauli-error picture.  A one-time
  dense calibration run (:func:`element_tables`) enumerates the
  branches of the element's virtual circuit, identifies the passing
  outcome subspace and the Pauli correction attached to each passing
  branch, and tabulates how a Pauli error at any wire shifts projection
  outcomes and the output pair.  Purification then reduces to an XOR
  convolution of independent per-location error distributions over
  (projection flips) x (output Bell label).

* :func:`mb_purify_exact` is a dense density-matrix oracle: it builds
  the noisy resource states, contracts the Bell read-in for every
  outcome class, applies the corrections calibrated from the noiseless
  reference, and post-selects.  It shares no propagation machinery
  with the fast path and is limited to 12 resource qubits.

:func:`oxford_map` is the gate-based reference for a single
purification step, against which the p = 1 measurement-based runs are
checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from . import statevector as sv
from .circuits import Gate, local_op
from .compiler import compile_resource
from .pauli import PauliString
from .protocols import ProtocolElement

__all__ = [
    "BellDiagonal",
    "PurificationResult",
    "ElementTables",
    "element_tables",
    "mb_purify_fast",
    "mb_purify_exact",
    "apply_lwn",
    "oxford_map",
    "resource_fidelity",
    "threshold_find",
    "fixed_point_fidelity",
    "ThresholdBracketError",
]

# Bell labels are g = 2x + z for the Pauli X^x Z^z acting on the left
# qubit of (|00> + |11>)/sqrt(2), so the weight order is
# (phi+, phi-, psi+, psi-).
_LABELS = ("phi+", "phi-", "psi+", "psi-")

_I2 = np.eye(2)
_PAULI_1Q = (
    np.eye(2, dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
)  # indexed by label g = 2x + z: I, Z, X, Y

_B_MAT = np.stack([sv.bell_vector(g >> 1, g & 1) for g in range(4)])
_LAB_XOR = np.arange(4)[:, None] ^ np.arange(4)[None, :]


@dataclass(frozen=True)
class BellDiagonal:
    """Two-qubit state diagonal in the Bell basis.

    weights = (w_phi+, w_phi-, w_psi+, w_psi-); the fidelity is the
    phi+ weight.
    """

    weights: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        w = self.weights
        if len(w) != 4 or min(w) < -1e-12:
            raise ValueError("weights must be four nonnegative numbers")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")

    @property
    def fidelity(self) -> float:
        return self.weights[0]

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @staticmethod
    def werner(fidelity: float) -> "BellDiagonal":
        r = (1.0 - fidelity) / 3.0
        return BellDiagonal((fidelity, r, r, r))

    @staticmethod
    def binary(fidelity: float) -> "BellDiagonal":
        return BellDiagonal((fidelity, 1.0 - fidelity, 0.0, 0.0))

    @staticmethod
    def pure() -> "BellDiagonal":
        return BellDiagonal((1.0, 0.0, 0.0, 0.0))

    @staticmethod
    def maximally_mixed() -> "BellDiagonal":
        return BellDiagonal((0.25, 0.25, 0.25, 0.25))

    def density_matrix(self) -> np.ndarray:
        return sum(
            w * np.outer(_B_MAT[g], _B_MAT[g].conj()) for g, w in enumerate(self.weights)
        )


def family_weights(family: str, fidelity: float) -> BellDiagonal:
    if family == "werner":
        return BellDiagonal.werner(fidelity)
    if family == "binary":
        return BellDiagonal.binary(fidelity)
    raise ValueError(f"unknown input family {family!r}")


@dataclass(frozen=True)
class PurificationResult:
    success_probability: float
    output: BellDiagonal


def _input_vectors(
    element: ProtocolElement, inputs: BellDiagonal | Sequence[BellDiagonal]
) -> list[np.ndarray]:
    if isinstance(inputs, BellDiagonal):
        return [inputs.vector] * element.n_pairs
    got = [b.vector for b in inputs]
    if len(got) != element.n_pairs:
        raise ValueError(f"element needs {element.n_pairs} input pairs, got {len(got)}")
    return got


# ---------------------------------------------------------------------------
# calibration: branch analysis and error-effect tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ElementTables:
    """Calibrated branch data and error-effect tables of one element.

    pass_mask[m] marks read-in outcome classes m (one bit per
    projection, in global projection order) accepted by the parity
    checks; tau[m] is the Bell label of the Pauli correction the
    protocol applies on branch m.  Effects of a single-qubit X or Z
    error at wire w are (projection flip mask, output label); per
    resource qubit the same data lives in noise_effects.
    """

    element: ProtocolElement
    n_projections: int
    pass_mask: np.ndarray
    tau: np.ndarray
    pair_effects: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    noise_effects: tuple[tuple[tuple[int, int], tuple[int, int]], ...]


def _apply_gate_dense(psi: np.ndarray, n: int, g: Gate, wires: Sequence[int]) -> np.ndarray:
    qs = [wires[q] for q in g.qubits]
    if g.kind == "CZ":
        return sv.apply_cz(psi, n, qs[0], qs[1])
    if g.kind == "CNOT":
        return sv.apply_cnot(psi, n, qs[0], qs[1])
    if g.kind == "ZZROT":
        idx = np.arange(1 << n)
        par = ((idx >> qs[0]) & 1) ^ ((idx >> qs[1]) & 1)
        return np.exp(g.arg * 1j * np.pi / 4 * np.where(par, -1.0, 1.0)) * psi
    return sv.apply_1q(psi, n, qs[0], local_op(g).matrix())


def _station_layout(element: ProtocolElement):
    """Global wire/projection numbering across the element's stations."""
    wire_offset, proj_offset = [], []
    w = j = 0
    for st in element.stations:
        wire_offset.append(w)
        proj_offset.append(j)
        w += st.circuit.n
        j += len(st.circuit.projections)
    end_wire = {}
    for s, st in enumerate(element.stations):
        for k, (pair, end) in enumerate(st.pair_ends):
            end_wire[(pair, end)] = wire_offset[s] + st.circuit.inputs[k]
    out_wires = tuple(
        wire_offset[s] + element.stations[s].circuit.outputs[o]
        for s, o in element.out_ends
    )
    return w, wire_offset, proj_offset, end_wire, out_wires


def _branch_matrix(element: ProtocolElement) -> tuple[np.ndarray, int]:
    """Amplitudes S[m, o] of the element's virtual circuit on perfect
    phi+ inputs, over deferred projection pattern m and output pair
    state o, both little-endian."""
    n_w, wire_offset, _, end_wire, out_wires = _station_layout(element)
    if sum(len(st.circuit.inputs) for st in element.stations) != n_w:
        raise ValueError("element stations must use every wire as an input")
    psi = sv.zero_state(n_w)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    for i in range(element.n_pairs):
        u, v = end_wire[(i, 0)], end_wire[(i, 1)]
        psi = sv.apply_1q(psi, n_w, u, h)
        psi = sv.apply_cnot(psi, n_w, u, v)
    proj_wires: list[int] = []
    for s, st in enumerate(element.stations):
        wires = [wire_offset[s] + k for k in range(st.circuit.n)]
        for g in st.circuit.gates:
            if g.kind == "PROJZ":
                assert g.arg == 0, "calibration assumes all-zero declared outcomes"
                proj_wires.append(wires[g.qubits[0]])
            else:
                psi = _apply_gate_dense(psi, n_w, g, wires)
    J = len(proj_wires)
    wa, wb = out_wires
    assert wa < wb, "left output must sit on the lower global qubit"
    axis = lambda q: n_w - 1 - q
    order = [axis(q) for q in reversed(proj_wires)] + [axis(wb), axis(wa)]
    S = psi.reshape((2,) * n_w).transpose(order).reshape(1 << J, 4)
    return S, J


def _bell_label_of(row: np.ndarray, tol: float) -> int:
    overlaps = _B_MAT.conj() @ row
    g = int(np.argmax(np.abs(overlaps)))
    rest = np.delete(np.abs(overlaps), g)
    assert rest.max(initial=0.0) < tol, "branch output is not a Bell state"
    return g


@lru_cache(maxsize=None)
def element_tables(element: ProtocolElement) -> ElementTables:
    """Run the calibration branch analysis and build the effect tables."""
    S, J = _branch_matrix(element)
    probs = (np.abs(S) ** 2).sum(axis=1)
    total = probs.sum()
    assert abs(total - 1.0) < 1e-9

    # the passing set must be exactly the coincidence subspace of the checks
    m_all = np.arange(1 << J)
    pass_mask = np.ones(1 << J, dtype=bool)
    for j1, j2 in element.checks:
        pass_mask &= (((m_all >> j1) ^ (m_all >> j2)) & 1) == 0
    live = probs > 1e-12
    assert np.array_equal(live, pass_mask), "branch support differs from parity checks"
    p_live = probs[pass_mask]
    assert np.allclose(p_live, p_live[0], atol=1e-9), "uneven branch probabilities"

    scale = math.sqrt(float(p_live[0]))
    labels = np.zeros(1 << J, dtype=np.uint8)
    for m in np.nonzero(pass_mask)[0]:
        labels[m] = _bell_label_of(S[m] / scale, 1e-8)
    assert labels[0] == 0, "reference branch must come out as phi+"

    # corrections are linear over the passing subspace; tabulate from a basis
    basis = [(j1, (1 << j1) | (1 << j2)) for j1, j2 in element.checks]
    basis += [(j, 1 << j) for j in element.swap_projections]
    tau = np.zeros(1 << J, dtype=np.uint8)
    for ind, mask in basis:
        tau[((m_all >> ind) & 1) == 1] ^= labels[mask]
    assert np.array_equal(tau[pass_mask], labels[pass_mask]), "corrections not linear"

    _, wire_offset, proj_offset, end_wire, out_wires = _station_layout(element)

    def wire_effect(s: int, w_local: int, letter: str) -> tuple[int, int]:
        circ = element.stations[s].circuit
        flips, residual = circ.propagate_pauli(PauliString.single(circ.n, w_local, letter))
        lab = 0
        for k, (so, oo) in enumerate(element.out_ends):
            if so != s:
                continue
            ow = circ.outputs[oo]
            lab ^= (((residual.x >> ow) & 1) << 1) | ((residual.z >> ow) & 1)
        return flips << proj_offset[s], lab

    n_w = sum(st.circuit.n for st in element.stations)
    station_of = {}
    for s, st in enumerate(element.stations):
        for k in range(st.circuit.n):
            station_of[wire_offset[s] + k] = (s, k)

    def effects_at(w: int) -> tuple[tuple[int, int], tuple[int, int]]:
        s, k = station_of[w]
        return wire_effect(s, k, "X"), wire_effect(s, k, "Z")

    pair_effects = tuple(effects_at(end_wire[(i, 0)]) for i in range(element.n_pairs))

    # resource qubits: a port error acts like an error entering its wire,
    # an output-qubit error lands on the final pair directly
    noise: list[tuple[tuple[int, int], tuple[int, int]]] = []
    for s, st in enumerate(element.stations):
        for w_local in st.circuit.inputs:
            noise.append(effects_at(wire_offset[s] + w_local))
        for _ in st.circuit.outputs:
            noise.append(((0, 2), (0, 1)))
    return ElementTables(
        element=element,
        n_projections=J,
        pass_mask=pass_mask,
        tau=tau,
        pair_effects=pair_effects,
        noise_effects=tuple(noise),
    )


# ---------------------------------------------------------------------------
# fast path: XOR convolution of error effects
# ---------------------------------------------------------------------------


def _convolve(dist: np.ndarray, branches) -> np.ndarray:
    idx = np.arange(dist.shape[0])
    out = np.zeros_like(dist)
    for w, fl, lab in branches:
        if w == 0.0:
            continue
        out += w * dist[idx ^ fl][:, _LAB_XOR[lab]]
    return out


def mb_purify_fast(
    element: ProtocolElement,
    p: float,
    inputs: BellDiagonal | Sequence[BellDiagonal],
) -> PurificationResult:
    """Exact purification statistics via the Pauli-error convolution."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("noise parameter p must lie in [0, 1]")
    tables = element_tables(element)
    pair_vecs = _input_vectors(element, inputs)

    dist = np.zeros((1 << tables.n_projections, 4))
    dist[0, 0] = 1.0
    for vec, ((flx, labx), (flz, labz)) in zip(pair_vecs, tables.pair_effects):
        branches = []
        for g, w in enumerate(vec):
            x, z = g >> 1, g & 1
            branches.append((w, (flx * x) ^ (flz * z), (labx * x) ^ (labz * z)))
        dist = _convolve(dist, branches)
    keep, err = (1.0 + 3.0 * p) / 4.0, (1.0 - p) / 4.0
    for (flx, labx), (flz, labz) in tables.noise_effects:
        dist = _convolve(
            dist,
            [
                (keep, 0, 0),
                (err, flx, labx),
                (err, flz, labz),
                (err, flx ^ flz, labx ^ labz),
            ],
        )

    accepted = dist[tables.pass_mask]
    p_success = float(accepted.sum())
    out = np.zeros(4)
    np.add.at(out, tables.tau[tables.pass_mask][:, None] ^ np.arange(4)[None, :], accepted)
    return PurificationResult(p_success, BellDiagonal(tuple(out / out.sum())))


# ---------------------------------------------------------------------------
# dense density-matrix oracle
# ---------------------------------------------------------------------------


def apply_lwn(rho: np.ndarray, qubits: Sequence[int], p: float) -> np.ndarray:
    """Local white noise on the listed qubits of a density matrix.

    Pauli-channel form: identity with probability (1+3p)/4, else X, Y
    or Z each with probability (1-p)/4.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("noise parameter p must lie in [0, 1]")
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    keep, err = (1.0 + 3.0 * p) / 4.0, (1.0 - p) / 4.0
    sign = np.array([1.0, -1.0])
    for q in qubits:
        hi, lo = dim >> (q + 1), 1 << q
        view = rho.reshape(hi, 2, lo, hi, 2, lo)
        zrz = view * sign[None, :, None, None, None, None] * sign[None, None, None, None, :, None]
        xrx = np.flip(np.flip(view, 1), 4)
        yry = np.flip(np.flip(zrz, 1), 4)
        rho = (keep * view + err * (xrx + yry + zrz)).reshape(dim, dim)
    return rho


@lru_cache(maxsize=None)
def _compiled(circuit) -> "object":
    return compile_resource(circuit)


def _resource_layout(element: ProtocolElement):
    """Offsets and port/output qubit indices of the joint resource."""
    resources = [_compiled(st.circuit) for st in element.stations]
    offsets, total = [], 0
    for r in resources:
        offsets.append(total)
        total += r.n_qubits
    port = {}
    for s, st in enumerate(element.stations):
        for k, (pair, end) in enumerate(st.pair_ends):
            port[(pair, end)] = offsets[s] + resources[s].port(k)
    outs = tuple(
        offsets[s] + resources[s].output(o) for s, o in element.out_ends
    )
    return resources, offsets, total, port, outs


def mb_purify_exact(
    element: ProtocolElement,
    p: float,
    inputs: BellDiagonal | Sequence[BellDiagonal],
) -> PurificationResult:
    """Dense density-matrix simulation of the noisy measurement-based run.

    Corrections and the accept rule are calibrated from a noiseless
    reference contraction, then applied to the LWN-degraded resource.
    Limited to 12 resource qubits in total.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("noise parameter p must lie in [0, 1]")
    resources, _, n_res, port, (out_a, out_b) = _resource_layout(element)
    if n_res > 12:
        raise ValueError(f"exact oracle handles at most 12 resource qubits, got {n_res}")
    pair_vecs = _input_vectors(element, inputs)
    m = element.n_pairs
    port_pairs = [(port[(i, 0)], port[(i, 1)]) for i in range(m)]
    assert out_a < out_b

    # joint pure resource; station 0 occupies the lowest qubits
    psi = resources[0].graph_state.state_vector()
    for r in resources[1:]:
        psi = np.kron(r.graph_state.state_vector(), psi)

    # reference run: which outcome classes are accepted, and with which
    # correction.  Read-in outcomes at the two ports of a pair act only
    # through their label sum, so classes are indexed by one Bell label
    # per pair (big-endian packed).
    ref = sv.bell_transform_all(psi, n_res, port_pairs).reshape(4**m, 4)
    norms = (np.abs(ref) ** 2).sum(axis=1)
    accept = norms > 1e-9 * norms.max()
    correction = np.zeros(4**m, dtype=np.uint8)
    for g in np.nonzero(accept)[0]:
        correction[g] = _bell_label_of(ref[g] / math.sqrt(norms[g]), 1e-8)
    assert correction[0] == 0, "all-phi+ read-in must come out as phi+"

    # noisy resource, contracted against every read-in class at once
    rho = np.outer(psi, psi.conj())
    rho = apply_lwn(rho, range(n_res), p)
    view = rho.reshape((2,) * (2 * n_res))
    row = lambda q: q
    col = lambda q: n_res + q
    operands: list = [view, [row(q) for q in range(n_res - 1, -1, -1)]
                      + [col(q) for q in range(n_res - 1, -1, -1)]]
    bra = np.stack([_B_MAT[g].conj().reshape(2, 2) for g in range(4)])
    ket = np.stack([_B_MAT[g].reshape(2, 2) for g in range(4)])
    for i, (qu, qv) in enumerate(port_pairs):
        operands.extend([bra, [2 * n_res + i, row(qv), row(qu)]])
        operands.extend([ket, [2 * n_res + i, col(qv), col(qu)]])
    out_axes = [2 * n_res + i for i in range(m)]
    out_axes += [row(out_b), row(out_a), col(out_b), col(out_a)]
    T = np.einsum(*operands, out_axes, optimize=True).reshape(4**m, 4, 4)

    weights_in = reduce(np.kron, pair_vecs)
    idx = np.arange(4**m)
    accum = np.zeros((4, 4), dtype=complex)
    for g in np.nonzero(accept)[0]:
        mixed = np.tensordot(weights_in, T[idx ^ g], axes=1)
        pc = np.kron(_I2, _PAULI_1Q[correction[g]])
        accum += pc @ mixed @ pc.conj().T
    total = float(np.einsum("gaa->", T).real)
    p_success = float(accum.trace().real) / total

    rho_out = accum / accum.trace()
    bell = _B_MAT.conj() @ rho_out @ _B_MAT.T
    off = bell - np.diag(np.diag(bell))
    assert np.abs(off).max() < 1e-10, "output is not Bell diagonal"
    w = np.maximum(np.diag(bell).real, 0.0)
    return PurificationResult(p_success, BellDiagonal(tuple(w / w.sum())))


# ---------------------------------------------------------------------------
# gate-based reference step
# ---------------------------------------------------------------------------


def _embed_cnot_perm(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return idx ^ (((idx >> control) & 1) << target)


@lru_cache(maxsize=None)
def _oxford_correction() -> tuple[int, np.ndarray]:
    """Pauli correction for the coinciding (1,1) branch, calibrated on
    pure inputs."""
    block = _oxford_branches(BellDiagonal.pure(), BellDiagonal.pure())[1]
    vals, vecs = np.linalg.eigh(block)
    lab = _bell_label_of(vecs[:, -1], 1e-8)
    return lab, np.kron(_I2, _PAULI_1Q[lab])


def _oxford_branches(pair1: BellDiagonal, pair2: BellDiagonal) -> list[np.ndarray]:
    """Unnormalized kept-pair blocks for target outcomes (0,0) and (1,1).

    Qubits little-endian: 0 = side A pair 1, 1 = side B pair 1,
    2 = side A pair 2, 3 = side B pair 2.
    """
    rho = np.kron(pair2.density_matrix(), pair1.density_matrix())
    ra = (np.eye(2) - 1j * _PAULI_1Q[2]) / math.sqrt(2)  # x rotation, side A
    rb = (np.eye(2) + 1j * _PAULI_1Q[2]) / math.sqrt(2)
    u = np.kron(rb, np.kron(ra, np.kron(rb, ra)))
    rho = u @ rho @ u.conj().T
    for control, target in ((0, 2), (1, 3)):
        perm = _embed_cnot_perm(4, control, target)
        rho = rho[perm][:, perm]
    blocks = []
    for b in (0, 1):
        sel = [i for i in range(16) if ((i >> 2) & 1) == b and ((i >> 3) & 1) == b]
        blocks.append(rho[np.ix_(sel, sel)])
    return blocks


def oxford_map(pair1: BellDiagonal, pair2: BellDiagonal) -> PurificationResult:
    """One gate-based purification step; success when the two target
    measurements coincide."""
    b0, b1 = _oxford_branches(pair1, pair2)
    _, pc = _oxford_correction()
    kept = b0 + pc @ b1 @ pc.conj().T
    p_success = float(kept.trace().real)
    rho_out = kept / kept.trace()
    bell = _B_MAT.conj() @ rho_out @ _B_MAT.T
    off = bell - np.diag(np.diag(bell))
    assert np.abs(off).max() < 1e-10, "output is not Bell diagonal"
    w = np.maximum(np.diag(bell).real, 0.0)
    return PurificationResult(p_success, BellDiagonal(tuple(w / w.sum())))


# ---------------------------------------------------------------------------
# resource fidelity under LWN
# ---------------------------------------------------------------------------


def resource_fidelity(resource, p: float) -> float:
    """Overlap of the LWN-degraded resource with the ideal state.

    Local corrections permute Pauli letters sitewise and the channel
    weights are letter-symmetric, so only the bare graph's stabilizer
    supports matter.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("noise parameter p must lie in [0, 1]")
    graph = resource
    if hasattr(graph, "graph_state"):
        graph = graph.graph_state
    if hasattr(graph, "graph"):
        graph = graph.graph
    n = graph.n
    if n > 16:
        raise ValueError("resource too large for group enumeration")
    adj = [graph.adjacency_mask(a) for a in range(n)]
    keep, err = (1.0 + 3.0 * p) / 4.0, (1.0 - p) / 4.0
    fid = 0.0
    for subset in range(1 << n):
        x = subset
        z = 0
        for a in range(n):
            if (subset >> a) & 1:
                z ^= adj[a]
        support = (x | z).bit_count()
        fid += keep ** (n - support) * err**support
    return fid


# ---------------------------------------------------------------------------
# thresholds and fixed points
# ---------------------------------------------------------------------------


class ThresholdBracketError(ValueError):
    """The bisection bracket does not straddle a gain/no-gain crossing."""


def _batch_map(element: ProtocolElement, p: float, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Apply the element to a batch of weight rows, every input pair of
    a run carrying the same row.  Returns (success probs, output rows)."""
    tables = element_tables(element)
    size = 1 << tables.n_projections
    idx = np.arange(size)
    dist = np.zeros((w.shape[0], size, 4))
    dist[:, 0, 0] = 1.0
    for (flx, labx), (flz, labz) in tables.pair_effects:
        new = np.zeros_like(dist)
        for g in range(4):
            x, z = g >> 1, g & 1
            fl, lab = (flx * x) ^ (flz * z), (labx * x) ^ (labz * z)
            new += w[:, g, None, None] * dist[:, idx ^ fl][:, :, _LAB_XOR[lab]]
        dist = new
    keep, err = (1.0 + 3.0 * p) / 4.0, (1.0 - p) / 4.0
    for (flx, labx), (flz, labz) in tables.noise_effects:
        branches = ((keep, 0, 0), (err, flx, labx), (err, flz, labz),
                    (err, flx ^ flz, labx ^ labz))
        new = np.zeros_like(dist)
        for wt, fl, lab in branches:
            new += wt * dist[:, idx ^ fl][:, :, _LAB_XOR[lab]]
        dist = new
    acc = dist[:, tables.pass_mask]
    p_suc = acc.sum(axis=(1, 2))
    labs = (tables.tau[tables.pass_mask][:, None] ^ np.arange(4)[None, :]).ravel()
    flat = acc.reshape(acc.shape[0], -1)
    out = np.stack([flat[:, labs == g].sum(axis=1) for g in range(4)], axis=1)
    return p_suc, out / out.sum(axis=1, keepdims=True)


def _gain_single(element: ProtocolElement, p: float, family: str, f_grid: np.ndarray) -> float:
    w = np.stack([family_weights(family, float(f)).vector for f in f_grid])
    _, out = _batch_map(element, p, w)
    return float((out[:, 0] - f_grid).max())


def _gain_iterated(
    element: ProtocolElement,
    p: float,
    family: str,
    f_grid: np.ndarray,
    max_iter: int = 2000,
) -> float:
    """Largest asymptotic fidelity gain of repeated purification over
    the grid of starting fidelities."""
    w = np.stack([family_weights(family, float(f)).vector for f in f_grid])
    fid = w[:, 0].copy()
    for _ in range(max_iter):
        _, w = _batch_map(element, p, w)
        if np.abs(w[:, 0] - fid).max() < 1e-10:
            break
        fid = w[:, 0].copy()
    return float((w[:, 0] - f_grid).max())


def threshold_find(
    element: ProtocolElement,
    family: str = "werner",
    mode: str = "iterated",
    bracket: tuple[float, float] = (0.85, 1.0),
    grid_points: int = 64,
    tol: float = 1e-4,
) -> float:
    """Critical noise (1-p)* above which no input fidelity is improved.

    Bisection on p of the condition "some grid fidelity gains", with
    ties at zero gain resolved toward no gain.  mode "iterated" asks
    whether repeated purification still raises the fidelity of some
    grid state (the map keeps an attracting high-fidelity fixed
    point); mode "single" asks for a one-application gain.
    """
    if mode == "iterated":
        gain = _gain_iterated
    elif mode == "single":
        gain = _gain_single
    else:
        raise ValueError(f"unknown threshold mode {mode!r}")
    f_grid = np.linspace(0.5, 1.0, grid_points + 2)[1:-1]
    lo, hi = bracket
    g_lo, g_hi = gain(element, lo, family, f_grid), gain(element, hi, family, f_grid)
    if not (g_lo <= 0.0 < g_hi):
        raise ThresholdBracketError(
            f"gain at p={lo} is {g_lo:.3e} and at p={hi} is {g_hi:.3e};"
            " bracket does not straddle the threshold"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gain(element, mid, family, f_grid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 1.0 - 0.5 * (lo + hi)


def fixed_point_fidelity(
    element: ProtocolElement,
    p: float,
    family: str = "binary",
    start: float = 0.95,
    tol: float = 1e-9,
    max_iter: int = 10000,
) -> float:
    """Limit fidelity of iterating the purification map from ``start``."""
    state = family_weights(family, start)
    fid = state.fidelity
    for _ in range(max_iter):
        state = mb_purify_fast(element, p, state).output
        if abs(state.fidelity - fid) < tol:
            return state.fidelity
        fid = state.fidelity
    raise RuntimeError(
        f"purification map did not converge within {max_iter} iterations"
        f" (last fidelity {fid:.6f})"
    )
