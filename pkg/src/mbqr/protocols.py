"""Purification and swap subroutines, and their arrangement into
repeater protocol elements.

The basic purification step consumes two Bell pairs shared between
stations A and B and keeps the first on success.  Each side twists its
two qubits, maps the second qubit's parity onto a Z measurement with a
CNOT, and the sides compare outcomes:

    side A: exp(-i pi/4 X) on both qubits     side B: exp(+i pi/4 X)
    CNOT(kept -> measured), PROJZ measured

The "zz" twist variant uses exp(-+i pi/4 Z Z) across the two qubits
instead of the local X rotations; it detects only bit-flip errors and
is kept for comparison.

An entanglement swap is a Bell measurement written as a circuit:
CNOT, H on the control, then both wires projected.

A protocol element bundles the station circuits with the wiring of
input pairs, which station projections are compared as parity checks,
and which wires form the output pair.  Elements defined here:

    one_step          one purification step on a single link
    two_step          two nested purification steps on a single link
    one_step_swapped  purify two adjacent links once each, then swap
    two_step_swapped  purify twice per link, then swap
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .circuits import CliffordCircuit, Gate

VARIANTS = ("xrot", "zz")


def _twist(a: int, b: int, sign: int, variant: str) -> list[Gate]:
    if variant == "xrot":
        return [Gate("XROT", (a,), sign), Gate("XROT", (b,), sign)]
    if variant == "zz":
        return [Gate("ZZROT", (a, b), sign)]
    raise ValueError(f"unknown variant {variant!r}; pick from {VARIANTS}")


def _purify_gates(keep: int, meas: int, sign: int, variant: str) -> list[Gate]:
    return [
        *_twist(keep, meas, sign, variant),
        Gate("CNOT", (keep, meas)),
        Gate("PROJZ", (meas,), 0),
    ]


def _swap_gates(a: int, b: int) -> list[Gate]:
    return [
        Gate("CNOT", (a, b)),
        Gate("H", (a,)),
        Gate("PROJZ", (a,), 0),
        Gate("PROJZ", (b,), 0),
    ]


def _side_sign(side: str) -> int:
    if side == "A":
        return -1
    if side == "B":
        return 1
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def purify_half(side: str, variant: str = "xrot") -> CliffordCircuit:
    """One station's share of a single purification step (2 in, 1 out)."""
    gates = _purify_gates(0, 1, _side_sign(side), variant)
    return CliffordCircuit(2, tuple(gates), (0, 1), (0,))


def purify_two_rounds(side: str, variant: str = "xrot") -> CliffordCircuit:
    """One station's share of two nested steps (4 in, 1 out)."""
    s = _side_sign(side)
    gates = [
        *_purify_gates(0, 1, s, variant),
        *_purify_gates(2, 3, s, variant),
        *_purify_gates(0, 2, s, variant),
    ]
    return CliffordCircuit(4, tuple(gates), (0, 1, 2, 3), (0,))


def swap_station() -> CliffordCircuit:
    """Bell measurement consuming both wires (2 in, 0 out)."""
    return CliffordCircuit(2, tuple(_swap_gates(0, 1)), (0, 1), ())


def middle_station(rounds: int, variant: str = "xrot") -> CliffordCircuit:
    """Swap station that first purifies both adjacent links.

    Wires 0..k-1 terminate the left link (side B of its purification),
    wires k..2k-1 start the right link (side A); the two kept wires are
    then Bell-measured.  k = 2 for rounds=1, k = 4 for rounds=2.
    """
    if rounds == 1:
        k = 2
        left = _purify_gates(0, 1, _side_sign("B"), variant)
        right = _purify_gates(2, 3, _side_sign("A"), variant)
        keep_l, keep_r = 0, 2
    elif rounds == 2:
        k = 4
        s_b, s_a = _side_sign("B"), _side_sign("A")
        left = [
            *_purify_gates(0, 1, s_b, variant),
            *_purify_gates(2, 3, s_b, variant),
            *_purify_gates(0, 2, s_b, variant),
        ]
        right = [
            *_purify_gates(4, 5, s_a, variant),
            *_purify_gates(6, 7, s_a, variant),
            *_purify_gates(4, 6, s_a, variant),
        ]
        keep_l, keep_r = 0, 4
    else:
        raise ValueError("rounds must be 1 or 2")
    gates = [*left, *right, *_swap_gates(keep_l, keep_r)]
    return CliffordCircuit(2 * k, tuple(gates), tuple(range(2 * k)), ())


@dataclass(frozen=True)
class Station:
    """A station circuit and how its inputs attach to protocol pairs.

    pair_ends[j] = (pair index, end) for circuit input j, where end 0
    is the left station of that pair and end 1 the right.
    """

    name: str
    circuit: CliffordCircuit
    pair_ends: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if len(self.pair_ends) != len(self.circuit.inputs):
            raise ValueError("one pair end per circuit input required")


@dataclass(frozen=True)
class ProtocolElement:
    """Stations, pair wiring, parity checks, and the output pair.

    Projections are numbered globally: stations in order, each
    station's PROJZ gates in program order.  ``checks`` pairs up
    projections whose outcomes are compared (purification parity
    checks); remaining projections are Bell-measurement halves whose
    outcomes only steer Pauli corrections.  ``out_ends`` names the two
    (station, circuit output) wires forming the output pair, left end
    first.
    """

    name: str
    variant: str
    n_pairs: int
    stations: tuple[Station, ...]
    checks: tuple[tuple[int, int], ...]
    out_ends: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self) -> None:
        ends = sorted(pe for st in self.stations for pe in st.pair_ends)
        want = sorted((i, e) for i in range(self.n_pairs) for e in (0, 1))
        if ends != want:
            raise ValueError("stations must consume each pair end exactly once")
        J = self.n_projections
        seen: set[int] = set()
        for j1, j2 in self.checks:
            for j in (j1, j2):
                if not 0 <= j < J or j in seen:
                    raise ValueError("bad check projection index")
                seen.add(j)

    @property
    def n_projections(self) -> int:
        return sum(len(st.circuit.projections) for st in self.stations)

    @property
    def swap_projections(self) -> tuple[int, ...]:
        checked = {j for pair in self.checks for j in pair}
        return tuple(j for j in range(self.n_projections) if j not in checked)

    def resource_shape(self) -> tuple[tuple[int, int], ...]:
        """(inputs, outputs) of each station circuit."""
        return tuple(
            (len(st.circuit.inputs), len(st.circuit.outputs)) for st in self.stations
        )


def one_step(variant: str = "xrot") -> ProtocolElement:
    return ProtocolElement(
        name="one_step",
        variant=variant,
        n_pairs=2,
        stations=(
            Station("A", purify_half("A", variant), ((0, 0), (1, 0))),
            Station("B", purify_half("B", variant), ((0, 1), (1, 1))),
        ),
        checks=((0, 1),),
        out_ends=((0, 0), (1, 0)),
    )


def two_step(variant: str = "xrot") -> ProtocolElement:
    return ProtocolElement(
        name="two_step",
        variant=variant,
        n_pairs=4,
        stations=(
            Station("A", purify_two_rounds("A", variant), tuple((i, 0) for i in range(4))),
            Station("B", purify_two_rounds("B", variant), tuple((i, 1) for i in range(4))),
        ),
        checks=((0, 3), (1, 4), (2, 5)),
        out_ends=((0, 0), (1, 0)),
    )


def one_step_swapped(variant: str = "xrot") -> ProtocolElement:
    return ProtocolElement(
        name="one_step_swapped",
        variant=variant,
        n_pairs=4,
        stations=(
            Station("A", purify_half("A", variant), ((0, 0), (1, 0))),
            Station(
                "M",
                middle_station(1, variant),
                ((0, 1), (1, 1), (2, 0), (3, 0)),
            ),
            Station("B", purify_half("B", variant), ((2, 1), (3, 1))),
        ),
        # global projections: A: 0; M: 1 (left check), 2 (right check),
        # 3, 4 (swap); B: 5
        checks=((0, 1), (2, 5)),
        out_ends=((0, 0), (2, 0)),
    )


def two_step_swapped(variant: str = "xrot") -> ProtocolElement:
    return ProtocolElement(
        name="two_step_swapped",
        variant=variant,
        n_pairs=8,
        stations=(
            Station("A", purify_two_rounds("A", variant), tuple((i, 0) for i in range(4))),
            Station(
                "M",
                middle_station(2, variant),
                tuple((i, 1) for i in range(4)) + tuple((i, 0) for i in range(4, 8)),
            ),
            Station("B", purify_two_rounds("B", variant), tuple((i, 1) for i in range(4, 8))),
        ),
        # A: 0-2; M: 3-5 (left), 6-8 (right), 9-10 (swap); B: 11-13
        checks=((0, 3), (1, 4), (2, 5), (6, 11), (7, 12), (8, 13)),
        out_ends=((0, 0), (2, 0)),
    )


_BUILDERS = {
    "one_step": one_step,
    "two_step": two_step,
    "one_step_swapped": one_step_swapped,
    "two_step_swapped": two_step_swapped,
}


def element_names() -> tuple[str, ...]:
    return tuple(_BUILDERS)


@lru_cache(maxsize=None)
def get_element(name: str, variant: str = "xrot") -> ProtocolElement:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown element {name!r}; pick from {element_names()}") from None
    return builder(variant)
