"""End-to-end repeater chains built from noisy measurement-based elements.

A chain of 2**n elementary segments is fused into one long-range pair
by n nested levels.  Each level purifies the pairs on two neighbouring
links and swaps them at the shared station in a single measurement-based
step (the integrated elements of :mod:`mbqr.protocols`); a final cleanup
round purifies the top-level pair once more before delivery.  Elementary
pairs come from a photonic channel model with fibre attenuation, finite
detector efficiency and dark counts.

All figures of merit are expected values: the per-level pair consumption
M, the expected number of channel uses behind one elementary pair, and
the read-in bookkeeping for sequential versus simultaneous strategies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .protocols import ProtocolElement, get_element
from .purification import BellDiagonal, PurificationResult, mb_purify_fast

__all__ = [
    "ChannelModel",
    "RepeaterConfig",
    "CostAccount",
    "RepeaterReport",
    "SweepRow",
    "ChainBrokenError",
    "channel_fidelity",
    "channel_pair",
    "swap",
    "run_repeater",
    "overhead",
    "variant_cost",
    "variant_cost_mc",
    "sweep",
    "VARIANT_NAMES",
]

VARIANT_NAMES = ("V1", "V2", "V3")


# ---------------------------------------------------------------------------
# photonic channel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelModel:
    """Photon-pair source and fibre link parameters.

    ``v_opt`` is the interference visibility of the source, ``eta`` the
    detector efficiency, ``dark`` the dark-count probability per
    detection window, and ``alpha`` the fibre attenuation in dB/km.
    """

    v_opt: float = 0.99
    eta: float = 0.3
    dark: float = 1e-4
    alpha: float = 0.16

    def __post_init__(self) -> None:
        for name in ("v_opt", "eta", "dark"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    def transmittance(self, d: float) -> float:
        """Fibre transmission probability over ``d`` km."""
        if d < 0.0:
            raise ValueError(f"distance must be >= 0, got {d}")
        return 10.0 ** (-self.alpha * d / 10.0)

    def arm_click_probability(self, d: float) -> float:
        """Probability that one detector arm fires for one emitted photon.

        A click is either the transmitted photon being detected or a
        dark count firing in its place; a dark count in the idle window
        vetoes the event.
        """
        te = self.transmittance(d) * self.eta
        return (te + (1.0 - te) * 2.0 * self.dark) * (1.0 - self.dark)

    def visibility(self, d: float) -> float:
        """Two-photon visibility after ``d`` km, dark counts included."""
        te = self.transmittance(d) * self.eta
        signal = te * (1.0 - self.dark)
        return self.v_opt**2 * signal**2 / self.arm_click_probability(d) ** 2

    def fidelity(self, d: float) -> float:
        """Fidelity of the heralded pair created over ``d`` km."""
        return 0.5 * (1.0 + self.visibility(d))

    def pair(self, d: float) -> BellDiagonal:
        """Heralded pair; visibility loss appears as a phase flip."""
        return BellDiagonal.binary(self.fidelity(d))

    def attempts_per_pair(self, d: float) -> float:
        """Expected channel transmissions behind one heralded pair.

        Both photons of an emitted pair must produce a click for the
        pair to be heralded; detector efficiency is not charged to the
        transmission count.  At least one transmission is always needed,
        so dark-count heralding cannot push the count below one.
        """
        return max(1.0, (self.eta / self.arm_click_probability(d)) ** 2)


def channel_fidelity(cm: ChannelModel, d: float) -> float:
    """Fidelity of the elementary pair ``cm`` delivers over ``d`` km."""
    return cm.fidelity(d)


def channel_pair(cm: ChannelModel, d: float) -> BellDiagonal:
    """Elementary pair delivered by ``cm`` over ``d`` km."""
    return cm.pair(d)


# ---------------------------------------------------------------------------
# entanglement swapping
# ---------------------------------------------------------------------------

_LAB = np.arange(4)
_SWAP_XOR = _LAB[:, None] ^ _LAB[None, :]


def swap(
    pair_ab: BellDiagonal,
    pair_bc: BellDiagonal,
    mode: str = "perfect",
    *,
    noise: float = 1.0,
    steps: int = 1,
) -> BellDiagonal | PurificationResult:
    """Connect two Bell-diagonal pairs at their shared station.

    ``perfect`` mode performs an ideal Bell measurement at the middle:
    the Pauli labels of the two pairs combine by XOR, so the output
    weights are the group convolution of the input weight vectors.

    ``resource`` mode runs the integrated purify-and-swap element on
    noisy resource states instead: ``steps`` purification rounds per
    link (two or four pairs per link) followed by the swap, all in one
    postselected shot.  ``pair_ab``/``pair_bc`` describe the pairs on
    the two links; the return value carries the success probability.
    """
    if mode == "perfect":
        a = pair_ab.vector
        b = pair_bc.vector
        out = np.zeros(4)
        for g in range(4):
            out[g] = float(a @ b[_SWAP_XOR[g]])
        return BellDiagonal(tuple(out))
    if mode == "resource":
        if steps not in (1, 2):
            raise ValueError(f"resource swap supports 1 or 2 steps, got {steps}")
        element = get_element("one_step_swapped" if steps == 1 else "two_step_swapped")
        per_link = element.n_pairs // 2
        return mb_purify_fast(element, noise, [pair_ab] * per_link + [pair_bc] * per_link)
    raise ValueError(f"unknown swap mode {mode!r}; pick 'perfect' or 'resource'")


# ---------------------------------------------------------------------------
# overhead arithmetic
# ---------------------------------------------------------------------------


def overhead(n_segments: int, l_parallel: int, m_per_level: float) -> float:
    """Total elementary pairs for a nested scheme, N^(log_L M + 1).

    ``n_segments`` must be a power of ``l_parallel``; ``m_per_level``
    is the expected pair consumption per connected pair and level.
    Integer inputs give exact integer-valued results.
    """
    if l_parallel < 2:
        raise ValueError(f"levels must connect at least 2 pairs, got L={l_parallel}")
    if n_segments < 1:
        raise ValueError(f"segment count must be >= 1, got {n_segments}")
    if m_per_level < 1:
        raise ValueError(f"per-level consumption must be >= 1, got {m_per_level}")
    n_levels = round(math.log(n_segments, l_parallel))
    if l_parallel**n_levels != n_segments:
        raise ValueError(
            f"segment count {n_segments} is not a power of L={l_parallel}"
        )
    return n_segments * m_per_level**n_levels


# ---------------------------------------------------------------------------
# read-in strategy accounting
# ---------------------------------------------------------------------------


def _check_probs(probs: Sequence[float], p_bell: float) -> None:
    for q in probs:
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"step success probability out of [0, 1]: {q}")
    if not 0.0 <= p_bell <= 1.0:
        raise ValueError(f"p_bell must lie in [0, 1], got {p_bell}")


def variant_cost(
    variant: str, step_success_probs: Sequence[float], p_bell: float = 1.0
) -> float:
    """Expected elementary pairs per output pair for a read-in strategy.

    The protocol is either a single two-to-one step (one probability)
    or a four-to-one cascade (three probabilities: the two first-round
    steps, then the combining step).  Every pair read into a resource
    costs two Bell measurements, hence a factor p_bell**2 per pair.

    * ``V1`` runs each step on its own small resource.  Survivors of a
      failed later step are gone, but first-round pairs are produced
      independently and on demand.  Coupling first-round outputs into
      the second-round resource takes fresh Bell measurements.
    * ``V2`` merges everything into one minimal resource, so all steps
      and all read-ins must succeed in the same shot.
    * ``V3`` keeps the first-round output particles inside one enlarged
      resource: reuse as in V1, but the combining step needs no further
      Bell measurements.

    A zero probability anywhere makes the cost infinite.
    """
    if variant not in VARIANT_NAMES:
        raise ValueError(f"unknown variant {variant!r}; pick from {VARIANT_NAMES}")
    probs = tuple(step_success_probs)
    if len(probs) not in (1, 3):
        raise ValueError(
            f"expected 1 (two-to-one) or 3 (four-to-one) step probabilities, got {len(probs)}"
        )
    _check_probs(probs, p_bell)
    if min(probs) == 0.0 or p_bell == 0.0:
        return math.inf
    read_in = p_bell**4  # two pairs enter each two-to-one step
    if len(probs) == 1:
        return 2.0 / (probs[0] * read_in)
    q1, q2, q3 = probs
    first_round = 2.0 / (q1 * read_in) + 2.0 / (q2 * read_in)
    if variant == "V2":
        return 4.0 / (q1 * q2 * q3 * p_bell**8)
    if variant == "V1":
        return first_round / (q3 * read_in)
    return first_round / q3  # V3: combining step is single-qubit only


def variant_cost_mc(
    variant: str,
    step_success_probs: Sequence[float],
    p_bell: float = 1.0,
    trials: int = 10**6,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Monte-Carlo estimate of :func:`variant_cost`.

    Simulates the pair-consumption process honestly (geometric retries
    per stage with the reuse rules of the chosen strategy) and returns
    (mean, standard error) over ``trials`` independent runs.
    """
    if variant not in VARIANT_NAMES:
        raise ValueError(f"unknown variant {variant!r}; pick from {VARIANT_NAMES}")
    probs = tuple(step_success_probs)
    _check_probs(probs, p_bell)
    if min(probs) == 0.0 or p_bell == 0.0:
        return math.inf, math.inf
    if rng is None:
        rng = np.random.default_rng()
    read_in = p_bell**4
    if len(probs) == 1:
        cost = 2.0 * rng.geometric(probs[0] * read_in, size=trials)
    elif variant == "V2":
        q1, q2, q3 = probs
        cost = 4.0 * rng.geometric(q1 * q2 * q3 * p_bell**8, size=trials)
    else:
        q1, q2, q3 = probs
        p_join = probs[2] * (read_in if variant == "V1" else 1.0)
        joins = rng.geometric(p_join, size=trials)
        # each combining attempt consumes one fresh survivor per branch
        fails1 = rng.negative_binomial(joins, q1 * read_in)
        fails2 = rng.negative_binomial(joins, q2 * read_in)
        cost = 2.0 * (joins + fails1) + 2.0 * (joins + fails2)
    mean = float(cost.mean())
    err = float(cost.std(ddof=1) / math.sqrt(trials))
    return mean, err


# ---------------------------------------------------------------------------
# repeater configuration and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RepeaterConfig:
    """Parameters of one nested repeater run.

    ``levels`` halving steps give 2**levels elementary segments of
    uniform length.  ``steps_per_level`` purification rounds run per
    link inside every level (0 disables purification and leaves bare
    swapping).  ``noise`` is the retention probability of the local
    white noise applied to every resource qubit; ``p_bell`` the success
    probability of a single read-in Bell measurement; ``variant`` the
    read-in strategy used for cost accounting.  When ``final_round`` is
    set, the delivered pair is purified once more after the last level
    with the plain (non-swapping) element of the same step count.
    """

    total_distance: float
    levels: int
    steps_per_level: int = 1
    integrated_swapping: bool = True
    noise: float = 1.0
    p_bell: float = 1.0
    variant: str = "V2"
    final_round: bool = True
    channel: ChannelModel = field(default_factory=ChannelModel)

    def __post_init__(self) -> None:
        if self.total_distance <= 0.0:
            raise ValueError(f"total_distance must be > 0, got {self.total_distance}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.steps_per_level not in (0, 1, 2):
            raise ValueError(
                f"steps_per_level must be 0, 1 or 2, got {self.steps_per_level}"
            )
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise must lie in [0, 1], got {self.noise}")
        if not 0.0 < self.p_bell <= 1.0:
            raise ValueError(f"p_bell must lie in (0, 1], got {self.p_bell}")
        if self.variant not in VARIANT_NAMES:
            raise ValueError(
                f"unknown variant {self.variant!r}; pick from {VARIANT_NAMES}"
            )

    @property
    def segments(self) -> int:
        return 2**self.levels

    @property
    def segment_length(self) -> float:
        return self.total_distance / self.segments


@dataclass(frozen=True)
class CostAccount:
    """Expected resource consumption of one repeater run.

    ``level_success`` holds the joint acceptance probability of each
    level's element (bottom level first); ``level_m`` the resulting
    expected pair consumption M per connected pair and level under the
    configured read-in strategy.  ``attempts_per_pair`` is the expected
    number of channel transmissions behind one elementary pair.  The
    final cleanup round is postselected as well; its acceptance is
    reported but not charged, since it runs once on the delivered pair
    rather than per segment.
    """

    segments: int
    pairs_per_link: int
    level_success: tuple[float, ...]
    level_m: tuple[float, ...]
    attempts_per_pair: float
    final_success: float | None = None

    @property
    def elementary_pairs(self) -> float:
        """Expected elementary pairs consumed for one delivered pair."""
        return self.segments * float(np.prod(self.level_m))

    @property
    def overhead(self) -> float:
        """Expected channel uses per elementary segment."""
        return self.attempts_per_pair * float(np.prod(self.level_m))


@dataclass(frozen=True)
class RepeaterReport:
    """Outcome of a deterministic expected-value repeater run."""

    fidelity: float
    pair: BellDiagonal
    cost: CostAccount
    segment_length: float
    input_fidelity: float
    level_fidelities: tuple[float, ...]


class ChainBrokenError(RuntimeError):
    """Raised when the chain state stops being entangled at some level."""

    def __init__(self, level: int, fidelity: float):
        self.level = level
        self.fidelity = fidelity
        where = "the channel input" if level == 0 else f"level {level}"
        super().__init__(
            f"chain broken at {where}: fidelity {fidelity:.4f} fell below 1/2"
        )


# ---------------------------------------------------------------------------
# the nested run
# ---------------------------------------------------------------------------


def _level_elements(cfg: RepeaterConfig) -> tuple[ProtocolElement | None, ...]:
    """(per-level element, first-round element, cleanup element)."""
    if cfg.steps_per_level == 0:
        return None, None, None
    plain = get_element("one_step" if cfg.steps_per_level == 1 else "two_step")
    if not cfg.integrated_swapping:
        return plain, plain, plain
    name = "one_step_swapped" if cfg.steps_per_level == 1 else "two_step_swapped"
    return get_element(name), get_element("one_step"), plain


def _level_m(
    cfg: RepeaterConfig, q_joint: float, q_round1: float | None
) -> float:
    """Expected pair consumption per connected pair for one level."""
    if cfg.steps_per_level == 0:
        # bare swap: one Bell measurement joins the two lower pairs
        return 1.0 / cfg.p_bell**2
    m = 2 * cfg.steps_per_level
    if cfg.variant == "V2":
        return m / (q_joint * cfg.p_bell ** (2 * m))
    # stage-wise strategies rebuild each link independently; the joint
    # acceptance splits symmetrically over the two links
    q_link = math.sqrt(q_joint)
    if cfg.steps_per_level == 1:
        stages: tuple[float, ...] = (q_link,)
    else:
        assert q_round1 is not None
        q1 = min(q_round1, 1.0)
        stages = (q1, q1, min(q_link / (q1 * q1), 1.0))
    per_link = variant_cost(cfg.variant, stages, cfg.p_bell)
    if cfg.variant == "V1" and cfg.integrated_swapping:
        per_link /= cfg.p_bell**2  # separate swap needs one more Bell measurement
    return per_link


def run_repeater(cfg: RepeaterConfig) -> RepeaterReport:
    """Expected-value simulation of one nested repeater chain.

    Elementary pairs are heralded over segments of length
    ``total_distance / 2**levels``; each level purifies neighbouring
    links and swaps them (one postselected element when
    ``integrated_swapping`` is set, otherwise purification followed by
    an ideal Bell measurement); a final cleanup purification round runs
    on the delivered pair when ``final_round`` is set.  Raises
    :class:`ChainBrokenError` as soon as any level's pair drops below
    fidelity 1/2.
    """
    element, round1_element, cleanup = _level_elements(cfg)
    pair = cfg.channel.pair(cfg.segment_length)
    if pair.fidelity < 0.5:
        raise ChainBrokenError(0, pair.fidelity)
    input_fidelity = pair.fidelity

    level_fs: list[float] = []
    level_qs: list[float] = []
    level_ms: list[float] = []
    for level in range(1, cfg.levels + 1):
        q_round1 = None
        if cfg.steps_per_level == 0:
            pair = swap(pair, pair, "perfect")
            q_joint = 1.0
        elif cfg.integrated_swapping:
            if cfg.variant != "V2" and cfg.steps_per_level == 2:
                q_round1 = mb_purify_fast(round1_element, cfg.noise, pair).success_probability
            res = mb_purify_fast(element, cfg.noise, pair)
            pair = res.output
            q_joint = res.success_probability
        else:
            res = mb_purify_fast(element, cfg.noise, pair)
            q_joint = res.success_probability**2  # both links must purify
            if cfg.variant != "V2" and cfg.steps_per_level == 2:
                q_round1 = mb_purify_fast(round1_element, cfg.noise, pair).success_probability
            pair = swap(res.output, res.output, "perfect")
        level_fs.append(pair.fidelity)
        level_qs.append(q_joint)
        level_ms.append(_level_m(cfg, q_joint, q_round1))
        if pair.fidelity < 0.5:
            raise ChainBrokenError(level, pair.fidelity)

    final_q: float | None = None
    if cfg.final_round and cleanup is not None:
        res = mb_purify_fast(cleanup, cfg.noise, pair)
        pair = res.output
        final_q = res.success_probability

    cost = CostAccount(
        segments=cfg.segments,
        pairs_per_link=max(2 * cfg.steps_per_level, 1),
        level_success=tuple(level_qs),
        level_m=tuple(level_ms),
        attempts_per_pair=cfg.channel.attempts_per_pair(cfg.segment_length),
        final_success=final_q,
    )
    return RepeaterReport(
        fidelity=pair.fidelity,
        pair=pair,
        cost=cost,
        segment_length=cfg.segment_length,
        input_fidelity=input_fidelity,
        level_fidelities=tuple(level_fs),
    )


# ---------------------------------------------------------------------------
# distance sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    """One point of a distance sweep; mirrors the report table columns."""

    distance_km: float
    levels: int
    steps_per_level: int
    noise: float
    fidelity: float
    overhead: float


def sweep(
    cfg: RepeaterConfig,
    distances: Sequence[float],
    levels: Sequence[int] | None = None,
) -> list[SweepRow]:
    """Evaluate a repeater family over total distances and level counts.

    Every (distance, levels) combination reruns the chain with the
    remaining parameters taken from ``cfg``; the segment length varies
    continuously with the distance.  Broken chains are reported with
    the fidelity at the break and infinite overhead rather than raised,
    so curve tables always cover the requested grid.
    """
    level_list = tuple(levels) if levels is not None else (cfg.levels,)
    rows: list[SweepRow] = []
    for n in level_list:
        for d in distances:
            if d <= 0.0:
                raise ValueError(f"distances must be > 0, got {d}")
            run_cfg = RepeaterConfig(
                total_distance=float(d),
                levels=int(n),
                steps_per_level=cfg.steps_per_level,
                integrated_swapping=cfg.integrated_swapping,
                noise=cfg.noise,
                p_bell=cfg.p_bell,
                variant=cfg.variant,
                final_round=cfg.final_round,
                channel=cfg.channel,
            )
            try:
                report = run_repeater(run_cfg)
                fidelity, cost = float(report.fidelity), report.cost.overhead
            except ChainBrokenError as err:
                fidelity, cost = float(err.fidelity), math.inf
            rows.append(
                SweepRow(
                    distance_km=float(d),
                    levels=int(n),
                    steps_per_level=cfg.steps_per_level,
                    noise=cfg.noise,
                    fidelity=fidelity,
                    overhead=cost,
                )
            )
    return rows
