"""Exact n-qubit Pauli string algebra.

A Pauli operator is stored in X-Z normal form

    i^phase_power * (X^x0 Z^z0) (x) (X^x1 Z^z1) (x) ...

with ``x`` and ``z`` bitmasks over qubit indices and ``phase_power``
an integer mod 4.  Y appears as i*X*Z, so the stored phase differs from
the printed one whenever the string contains Y letters; ``phase()`` and
``label()`` account for that.  All arithmetic is integer-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

_LETTERS = "IXZY"  # indexed by (z_bit << 1) | x_bit


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """Phased Pauli operator on ``n`` qubits in X-Z normal form."""

    n: int
    phase_power: int  # exponent of i, mod 4, in the normal form above
    x: int  # X bitmask
    z: int  # Z bitmask

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("qubit count must be nonnegative")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("bitmask exceeds qubit count")
        object.__setattr__(self, "phase_power", self.phase_power % 4)

    # -- constructors -------------------------------------------------

    @staticmethod
    def identity(n: int) -> "PauliString":
        return PauliString(n, 0, 0, 0)

    @staticmethod
    def single(n: int, qubit: int, letter: str, sign: int = 1) -> "PauliString":
        """Single-qubit Pauli ``sign * letter`` embedded on ``qubit``."""
        if not 0 <= qubit < n:
            raise ValueError(f"qubit {qubit} out of range for n={n}")
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        e = 0 if sign == 1 else 2
        bit = 1 << qubit
        if letter == "I":
            return PauliString(n, e, 0, 0)
        if letter == "X":
            return PauliString(n, e, bit, 0)
        if letter == "Z":
            return PauliString(n, e, 0, bit)
        if letter == "Y":
            # Y = i X Z
            return PauliString(n, (e + 1) % 4, bit, bit)
        raise ValueError(f"unknown Pauli letter {letter!r}")

    @staticmethod
    def from_label(label: str, sign: int = 1) -> "PauliString":
        """Build from a letter string such as ``"XIZZY"`` (qubit 0 first)."""
        p = PauliString.identity(len(label))
        for q, ch in enumerate(label):
            p = p * PauliString.single(len(label), q, ch)
        if sign == -1:
            p = PauliString(p.n, p.phase_power + 2, p.x, p.z)
        elif sign != 1:
            raise ValueError("sign must be +1 or -1")
        return p

    # -- algebra ------------------------------------------------------

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("qubit counts differ")
        # Moving other's X block past self's Z block: each overlap gives -1.
        e = (self.phase_power + other.phase_power
             + 2 * _popcount(self.z & other.x)) % 4
        return PauliString(self.n, e, self.x ^ other.x, self.z ^ other.z)

    def dagger(self) -> "PauliString":
        # (X^x Z^z)^dag = Z^z X^x = (-1)^{|x&z|} X^x Z^z
        e = (-self.phase_power + 2 * _popcount(self.x & self.z)) % 4
        return PauliString(self.n, e, self.x, self.z)

    def commutes_with(self, other: "PauliString") -> bool:
        if self.n != other.n:
            raise ValueError("qubit counts differ")
        par = _popcount(self.x & other.z) ^ _popcount(self.z & other.x)
        return par % 2 == 0

    def tensor(self, other: "PauliString") -> "PauliString":
        return PauliString(
            self.n + other.n,
            self.phase_power + other.phase_power,
            self.x | (other.x << self.n),
            self.z | (other.z << self.n),
        )

    def delete_qubit(self, qubit: int) -> "PauliString":
        """Remove a qubit whose letter must be I; higher indices shift down."""
        bit = 1 << qubit
        if self.x & bit or self.z & bit:
            raise ValueError(f"qubit {qubit} does not carry identity")
        low = bit - 1
        x = (self.x & low) | ((self.x >> 1) & ~low)
        z = (self.z & low) | ((self.z >> 1) & ~low)
        return PauliString(self.n - 1, self.phase_power, x, z)

    # -- inspection ---------------------------------------------------

    def letter(self, qubit: int) -> str:
        xb = (self.x >> qubit) & 1
        zb = (self.z >> qubit) & 1
        return _LETTERS[(zb << 1) | xb]

    def y_count(self) -> int:
        return _popcount(self.x & self.z)

    def phase(self) -> complex:
        """Scalar prefactor when the string is written with I, X, Y, Z letters."""
        return 1j ** ((self.phase_power - self.y_count()) % 4)

    def sign(self) -> int:
        """Like ``phase`` but asserts the result is Hermitian (+1 or -1)."""
        ph = (self.phase_power - self.y_count()) % 4
        if ph == 0:
            return 1
        if ph == 2:
            return -1
        raise ValueError("operator is not a Hermitian Pauli string")

    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0 and self.phase_power == 0

    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(q for q in range(self.n) if (m >> q) & 1)

    def __repr__(self) -> str:
        ph = (self.phase_power - self.y_count()) % 4
        pre = {0: "+", 1: "+i", 2: "-", 3: "-i"}[ph]
        return f"{pre}{self.letters()}"


def conjugate_two_qubit(
    p: PauliString,
    a: int,
    b: int,
    xa: PauliString,
    za: PauliString,
    xb: PauliString,
    zb: PauliString,
) -> PauliString:
    """Conjugate ``p`` through a two-qubit Clifford on (a, b) given the
    images of X_a, Z_a, X_b, Z_b as full-width Pauli strings."""
    mask = (1 << a) | (1 << b)
    local = PauliString.identity(p.n)
    # normal-form factor order at the two qubits: X_a Z_a X_b Z_b
    if (p.x >> a) & 1:
        local = local * xa
    if (p.z >> a) & 1:
        local = local * za
    if (p.x >> b) & 1:
        local = local * xb
    if (p.z >> b) & 1:
        local = local * zb
    return PauliString(
        p.n,
        p.phase_power + local.phase_power,
        (p.x & ~mask) | local.x,
        (p.z & ~mask) | local.z,
    )
