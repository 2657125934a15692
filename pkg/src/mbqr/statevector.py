"""Dense state-vector simulation for small qubit counts.

Used as an independent oracle for stabilizer and graph-state code.
Qubit ``q`` is bit ``q`` of the basis index (little endian), matching
the bitmask convention of :mod:`mbqr.pauli`.
"""

from __future__ import annotations

import numpy as np

from .graphs import Graph
from .pauli import PauliString


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    return psi


def plus_state(n: int) -> np.ndarray:
    return np.full(1 << n, 2.0 ** (-n / 2), dtype=complex)


def basis_state(n: int, index: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    return psi


def apply_1q(psi: np.ndarray, n: int, q: int, mat: np.ndarray) -> np.ndarray:
    t = psi.reshape(-1, 2, 1 << q)
    return np.einsum("ab,ibj->iaj", mat, t).reshape(-1)


def apply_cz(psi: np.ndarray, n: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(1 << n)
    sel = ((idx >> a) & 1) & ((idx >> b) & 1)
    out = psi.copy()
    out[sel == 1] *= -1
    return out


def apply_cnot(psi: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    perm = idx ^ (((idx >> control) & 1) << target)
    # CNOT is an involutive permutation of basis states
    return psi[perm]


def apply_pauli(psi: np.ndarray, p: PauliString) -> np.ndarray:
    idx = np.arange(1 << p.n)
    par = np.zeros(1 << p.n, dtype=np.int64)
    z = p.z
    while z:
        b = z & -z
        par ^= (idx & b) != 0
        z &= z - 1
    out = np.empty_like(psi)
    out[idx ^ p.x] = (1j ** p.phase_power) * np.where(par, -1.0, 1.0) * psi
    return out


def project_qubit(psi: np.ndarray, n: int, q: int, bit: int) -> np.ndarray:
    """Unnormalized projection onto |bit> of qubit q (qubit kept in place)."""
    t = psi.reshape(-1, 2, 1 << q).copy()
    t[:, 1 - bit, :] = 0.0
    return t.reshape(-1)


def contract_qubit(psi: np.ndarray, n: int, q: int, bit: int) -> np.ndarray:
    """Unnormalized <bit|_q psi on the remaining n-1 qubits."""
    return psi.reshape(-1, 2, 1 << q)[:, bit, :].reshape(-1)


def graph_state_vector(g: Graph) -> np.ndarray:
    psi = plus_state(g.n)
    for a, b in sorted(g.edges):
        psi = apply_cz(psi, g.n, a, b)
    return psi


def bell_vector(x: int, z: int) -> np.ndarray:
    """Two-qubit Bell state X^x Z^z (on qubit 0) applied to (|00>+|11>)/sqrt(2)."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 2.0 ** -0.5
    return apply_pauli(psi, PauliString(2, 0, x, z))


def contract_bell_pairs(
    psi: np.ndarray,
    n: int,
    pairs: list[tuple[int, int]],
    labels: list[tuple[int, int]],
) -> np.ndarray:
    """<prod_i phi_{labels[i]} at pairs[i] | psi>, on the remaining qubits.

    Remaining qubits keep their relative order with indices compacted.
    """
    view = psi.reshape((2,) * n)
    operands: list = [view, [n - 1 - k for k in range(n)]]
    consumed: set[int] = set()
    for (qa, qb), (x, z) in zip(pairs, labels):
        b = bell_vector(x, z).conj().reshape(2, 2)  # [qb bit, qa bit]
        operands.extend([b, [qb, qa]])
        consumed.update((qa, qb))
    out_axes = [q for q in range(n - 1, -1, -1) if q not in consumed]
    result = np.einsum(*operands, out_axes, optimize=True)
    return result.reshape(-1)


def bell_transform_all(psi: np.ndarray, n: int, pairs: list[tuple[int, int]]) -> np.ndarray:
    """Project every listed qubit pair onto all four Bell states at once.

    Returns an array indexed [g_0, ..., g_{m-1}, rest] where g_i is the
    Bell label (2x+z) of pair i and rest enumerates remaining qubits.
    """
    basis = np.stack([bell_vector(g >> 1, g & 1).conj().reshape(2, 2) for g in range(4)])
    view = psi.reshape((2,) * n)
    operands: list = [view, [n - 1 - k for k in range(n)]]
    consumed: set[int] = set()
    glabels = []
    for i, (qa, qb) in enumerate(pairs):
        glabels.append(n + i)  # fresh axis label of dimension 4
        operands.extend([basis, [n + i, qb, qa]])
        consumed.update((qa, qb))
    out_axes = glabels + [q for q in range(n - 1, -1, -1) if q not in consumed]
    result = np.einsum(*operands, out_axes, optimize=True)
    return result.reshape((4,) * len(pairs) + (-1,))


def norm(psi: np.ndarray) -> float:
    return float(np.linalg.norm(psi))


def equal_up_to_phase(v: np.ndarray, w: np.ndarray, tol: float = 1e-10) -> bool:
    nv, nw = np.linalg.norm(v), np.linalg.norm(w)
    if nv < tol or nw < tol:
        return nv < tol and nw < tol
    a = v / nv
    b = w / nw
    k = int(np.argmax(np.abs(a)))
    if abs(b[k]) < tol:
        return False
    ph = b[k] / a[k]
    return abs(abs(ph) - 1.0) < tol and float(np.max(np.abs(ph * a - b))) < tol


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)
