"""The single-qubit Clifford group (24 elements) by conjugation action.

An element is stored by where it sends X and Z under U P U^dag, as
single-qubit phased Pauli strings.  That pins the unitary down to a
global phase, which is all the graph-state bookkeeping needs; an
explicit matrix representative is available for dense checks.

Canonical names compose a Pauli prefix with a permutation part:

    name     = [pauli] rep        pauli in {"", "X", "Y", "Z"}
    rep      in {"I", "S", "H", "HS", "SH", "HSH"}

read as matrix products, rightmost applied first (for example "ZS" is
Z @ S).  The bare identity is named "I"; a bare Pauli drops the "I".
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import PauliString

_SINGLE = {
    "X": PauliString.single(1, 0, "X"),
    "Y": PauliString.single(1, 0, "Y"),
    "Z": PauliString.single(1, 0, "Z"),
}


def _one_qubit(letter: str, sign: int) -> PauliString:
    return PauliString.single(1, 0, letter, sign)


@dataclass(frozen=True)
class LocalClifford:
    """Single-qubit Clifford given by its conjugation images of X and Z."""

    image_x: PauliString  # U X U^dag, a signed single-letter Pauli
    image_z: PauliString  # U Z U^dag

    def __post_init__(self) -> None:
        for img in (self.image_x, self.image_z):
            if img.n != 1 or not (img.x or img.z) or img.sign() not in (1, -1):
                raise ValueError("images must be signed single-letter Paulis")
        if self.image_x.letters() == self.image_z.letters():
            raise ValueError("images of X and Z must anticommute")

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_images(x_letter: str, x_sign: int, z_letter: str, z_sign: int) -> "LocalClifford":
        return LocalClifford(_one_qubit(x_letter, x_sign), _one_qubit(z_letter, z_sign))

    @staticmethod
    def identity() -> "LocalClifford":
        return LocalClifford.from_images("X", 1, "Z", 1)

    @staticmethod
    def pauli(letter: str) -> "LocalClifford":
        if letter == "I":
            return LocalClifford.identity()
        flips = {"X": ("X", 1, "Z", -1), "Y": ("X", -1, "Z", -1), "Z": ("X", -1, "Z", 1)}
        return LocalClifford.from_images(*flips[letter])

    @staticmethod
    def s_gate() -> "LocalClifford":
        return LocalClifford.from_images("Y", 1, "Z", 1)

    @staticmethod
    def h_gate() -> "LocalClifford":
        return LocalClifford.from_images("Z", 1, "X", 1)

    @staticmethod
    def sqrt_iz(sign: int = 1) -> "LocalClifford":
        """(sign * iZ)^{1/2}; sends X to -sign*Y and fixes Z."""
        return LocalClifford.from_images("Y", -sign, "Z", 1)

    @staticmethod
    def sqrt_ix(sign: int = 1) -> "LocalClifford":
        """(sign * iX)^{1/2}; fixes X and sends Z to sign*Y."""
        return LocalClifford.from_images("X", 1, "Y", sign)

    @staticmethod
    def sqrt_iy(sign: int = 1) -> "LocalClifford":
        """(sign * iY)^{1/2}; sends X to sign*Z and Z to -sign*X."""
        return LocalClifford.from_images("Z", sign, "X", -sign)

    @staticmethod
    def from_name(name: str) -> "LocalClifford":
        try:
            return _BY_NAME[name]
        except KeyError:
            raise ValueError(f"unknown Clifford name {name!r}") from None

    # -- group structure ----------------------------------------------

    def image_of(self, p: PauliString) -> PauliString:
        """Conjugate a single-qubit phased Pauli: U p U^dag."""
        if p.n != 1:
            raise ValueError("expected a single-qubit Pauli")
        out = PauliString(1, p.phase_power, 0, 0)
        if p.x:
            out = out * self.image_x
        if p.z:
            out = out * self.image_z
        return out

    def __matmul__(self, other: "LocalClifford") -> "LocalClifford":
        """Matrix product self @ other (other acts first)."""
        return LocalClifford(
            self.image_of(other.image_x),
            self.image_of(other.image_z),
        )

    def inverse(self) -> "LocalClifford":
        for cand in all_elements():
            if cand @ self == LocalClifford.identity():
                return cand
        raise AssertionError("group closure violated")

    def conjugate_pauli(self, p: PauliString, qubit: int) -> PauliString:
        """U_qubit p U_qubit^dag for a multi-qubit Pauli string."""
        bit = 1 << qubit
        xb = p.x & bit
        zb = p.z & bit
        if not (xb or zb):
            return p
        one = PauliString.identity(1)
        if xb:
            one = one * self.image_x
        if zb:
            one = one * self.image_z
        return PauliString(
            p.n,
            p.phase_power + one.phase_power,
            (p.x & ~bit) | (one.x << qubit),
            (p.z & ~bit) | (one.z << qubit),
        )

    # -- presentation ---------------------------------------------------

    @property
    def name(self) -> str:
        return _BY_ELEMENT[self]

    def matrix(self) -> np.ndarray:
        """A 2x2 unitary representative (global phase fixed by the name)."""
        return _name_matrix(self.name)

    def __repr__(self) -> str:
        return f"LocalClifford({self.name})"


_REP_IMAGES = {
    # rep name -> (x_letter, x_sign, z_letter, z_sign)
    "I": ("X", 1, "Z", 1),
    "S": ("Y", 1, "Z", 1),
    "H": ("Z", 1, "X", 1),
    "HS": ("Y", -1, "X", 1),
    "SH": ("Z", 1, "Y", 1),
    "HSH": ("X", 1, "Y", -1),
}

_PAULI_ORDER = ("", "X", "Y", "Z")


def _build_tables() -> tuple[dict[str, LocalClifford], dict[LocalClifford, str]]:
    by_name: dict[str, LocalClifford] = {}
    by_elem: dict[LocalClifford, str] = {}
    for pauli in _PAULI_ORDER:
        for rep, imgs in _REP_IMAGES.items():
            elem = LocalClifford.from_images(*imgs)
            if pauli:
                elem = LocalClifford.pauli(pauli) @ elem
                name = pauli + (rep if rep != "I" else "")
            else:
                name = rep
            by_name[name] = elem
            by_elem[elem] = name
    if len(by_name) != 24 or len(by_elem) != 24:
        raise AssertionError("Clifford name table is not a bijection")
    return by_name, by_elem


_BY_NAME, _BY_ELEMENT = _build_tables()


def all_elements() -> tuple[LocalClifford, ...]:
    return tuple(_BY_NAME.values())


def all_names() -> tuple[str, ...]:
    return tuple(_BY_NAME.keys())


@lru_cache(maxsize=None)
def _name_matrix(name: str) -> np.ndarray:
    mats = {
        "I": np.eye(2, dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        "S": np.array([[1, 0], [0, 1j]], dtype=complex),
        "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    }
    out = np.eye(2, dtype=complex)
    for ch in name:
        if ch == "I":
            continue
        out = out @ mats[ch]
    out.setflags(write=False)
    return out
