"""Repeater chains: channel model, swapping, nested runs, cost accounting."""

import math

import numpy as np
import pytest

from mbqr.purification import BellDiagonal, mb_purify_exact, mb_purify_fast
from mbqr.protocols import get_element
from mbqr.repeater import (
    ChainBrokenError,
    ChannelModel,
    CostAccount,
    RepeaterConfig,
    channel_fidelity,
    channel_pair,
    overhead,
    run_repeater,
    swap,
    sweep,
    variant_cost,
    variant_cost_mc,
)

# ---------------------------------------------------------------------------
# channel model
# ---------------------------------------------------------------------------


def test_ideal_detectors_give_unit_fidelity():
    cm = ChannelModel(v_opt=1.0, eta=1.0, dark=0.0)
    for d in (0.0, 10.0, 100.0, 1000.0):
        assert channel_fidelity(cm, d) == pytest.approx(1.0, abs=1e-15)


def test_transmittance_exponent():
    cm = ChannelModel()
    assert cm.transmittance(100.0) == pytest.approx(10 ** (-1.6), rel=1e-14)
    assert cm.transmittance(0.0) == 1.0


def test_default_fidelity_at_zero_distance_below_one():
    # dark counts keep the heralded pair imperfect even without fibre
    cm = ChannelModel()
    te = 0.3
    arm = (te + (1 - te) * 2e-4) * (1 - 1e-4)
    v = 0.99**2 * (te * (1 - 1e-4)) ** 2 / arm**2
    expected = 0.5 * (1 + v)
    assert expected < 1.0
    assert channel_fidelity(cm, 0.0) == pytest.approx(expected, abs=1e-15)
    assert channel_fidelity(cm, 0.0) == pytest.approx(0.989592939967, abs=1e-12)


def test_channel_frozen_segment_fidelities():
    cm = ChannelModel()
    for d, expected in (
        (62.5, 0.983772972577),
        (78.125, 0.978823393835),
        (125.0, 0.930869568753),
        (156.25, 0.834368820590),
    ):
        assert cm.fidelity(d) == pytest.approx(expected, abs=1e-12)


def test_channel_pair_is_binary():
    pair = channel_pair(ChannelModel(), 80.0)
    assert pair.weights[2] == 0.0 and pair.weights[3] == 0.0
    assert pair.fidelity == pytest.approx(ChannelModel().fidelity(80.0))


def test_channel_fidelity_monotone_and_entangled():
    cm = ChannelModel()
    grid = np.linspace(0.0, 400.0, 81)
    fids = [cm.fidelity(d) for d in grid]
    assert all(a >= b - 1e-15 for a, b in zip(fids, fids[1:]))
    assert all(f > 0.5 for f in fids)


def test_channel_validation():
    with pytest.raises(ValueError, match="eta"):
        ChannelModel(eta=1.2)
    with pytest.raises(ValueError, match="alpha"):
        ChannelModel(alpha=-0.1)
    with pytest.raises(ValueError, match="dark"):
        ChannelModel(dark=-1e-4)
    with pytest.raises(ValueError, match="distance"):
        ChannelModel().fidelity(-1.0)


def test_attempts_per_pair_floor_and_growth():
    cm = ChannelModel()
    assert cm.attempts_per_pair(0.0) >= 1.0
    assert cm.attempts_per_pair(62.5) == pytest.approx(98.738851482, rel=1e-9)
    assert cm.attempts_per_pair(156.25) > cm.attempts_per_pair(62.5)
    ideal = ChannelModel(v_opt=1.0, eta=1.0, dark=0.0, alpha=0.0)
    assert ideal.attempts_per_pair(1000.0) == 1.0


# ---------------------------------------------------------------------------
# swapping
# ---------------------------------------------------------------------------


def _dense_swap_oracle(pair_ab, pair_bc):
    """Bell-measure the middle qubits of a 4-qubit state and correct."""
    bell = np.array(
        [
            [1, 0, 0, 1],
            [1, 0, 0, -1],
            [0, 1, 1, 0],
            [0, 1, -1, 0],
        ],
        dtype=complex,
    ) / math.sqrt(2)
    paulis = [
        np.eye(2),
        np.diag([1, -1]),
        np.array([[0, 1], [1, 0]]),
        np.array([[0, -1j], [1j, 0]]),
    ]
    rho = np.kron(pair_ab.density_matrix(), pair_bc.density_matrix())
    # qubit order A b1 b2 C; measure (b1, b2) in the Bell basis
    rho = rho.reshape((2,) * 8)
    out = np.zeros((4, 4), dtype=complex)
    for g in range(4):
        proj = bell[g].reshape(2, 2)
        red = np.einsum("abcdefgh,bc,fg->adeh", rho, proj.conj(), proj)
        red = red.reshape(4, 4)
        corr = np.kron(np.eye(2), paulis[g])
        out += corr @ red @ corr.conj().T
    weights = [float(np.real(bell[g] @ out @ bell[g].conj())) for g in range(4)]
    return BellDiagonal(tuple(w / sum(weights) for w in weights))


def test_perfect_swap_of_pure_pairs():
    pure = BellDiagonal.pure()
    assert swap(pure, pure).weights == pytest.approx((1.0, 0.0, 0.0, 0.0))


def test_perfect_swap_binary_formula():
    rng = np.random.default_rng(7)
    for _ in range(20):
        f1, f2 = rng.uniform(0.5, 1.0, size=2)
        out = swap(BellDiagonal.binary(f1), BellDiagonal.binary(f2))
        assert out.fidelity == pytest.approx(f1 * f2 + (1 - f1) * (1 - f2), abs=1e-12)
        assert out.weights[2] == pytest.approx(0.0, abs=1e-15)


def test_perfect_swap_matches_dense_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        wa = rng.dirichlet(np.ones(4))
        wb = rng.dirichlet(np.ones(4))
        a, b = BellDiagonal(tuple(wa)), BellDiagonal(tuple(wb))
        got = swap(a, b).weights
        want = _dense_swap_oracle(a, b).weights
        assert np.abs(np.array(got) - np.array(want)).max() < 1e-10


def test_perfect_swap_commutative_associative():
    rng = np.random.default_rng(13)
    for _ in range(10):
        a, b, c = (BellDiagonal(tuple(rng.dirichlet(np.ones(4)))) for _ in range(3))
        ab = swap(a, b)
        ba = swap(b, a)
        assert np.allclose(ab.vector, ba.vector, atol=1e-14)
        left = swap(swap(a, b), c)
        right = swap(a, swap(b, c))
        assert np.allclose(left.vector, right.vector, atol=1e-14)


def test_resource_swap_matches_exact_oracle():
    # integrated one-step element on four binary pairs, full density check
    pair = BellDiagonal.binary(0.95)
    got = swap(pair, pair, "resource", noise=0.99, steps=1)
    want = mb_purify_exact(get_element("one_step_swapped"), 0.99, [pair] * 4)
    assert got.success_probability == pytest.approx(want.success_probability, abs=1e-10)
    assert np.allclose(got.output.vector, want.output.vector, atol=1e-10)


def test_resource_swap_two_step_runs():
    pair = BellDiagonal.binary(0.95)
    res = swap(pair, pair, "resource", noise=0.96, steps=2)
    assert 0.0 < res.success_probability < 1.0
    # purification gain must beat the bare Bell-measurement baseline
    assert res.output.fidelity > swap(pair, pair).fidelity


def test_swap_mode_validation():
    pair = BellDiagonal.binary(0.9)
    with pytest.raises(ValueError, match="steps"):
        swap(pair, pair, "resource", steps=3)
    with pytest.raises(ValueError, match="mode"):
        swap(pair, pair, "teleport")


# ---------------------------------------------------------------------------
# overhead arithmetic
# ---------------------------------------------------------------------------


def test_overhead_examples():
    assert overhead(8, 2, 1) == 8
    assert overhead(8, 2, 4) == 512
    assert overhead(16, 2, 2) == 256


def test_overhead_power_identity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 9))
        m = float(rng.uniform(1.0, 6.0))
        assert overhead(2**n, 2, m) == pytest.approx(2**n * m**n, rel=1e-14)
    assert overhead(27, 3, 2.0) == pytest.approx(27 * 8.0)


def test_overhead_validation():
    with pytest.raises(ValueError, match="power"):
        overhead(12, 2, 2.0)
    with pytest.raises(ValueError, match="L="):
        overhead(8, 1, 2.0)
    with pytest.raises(ValueError, match=">= 1"):
        overhead(8, 2, 0.5)


# ---------------------------------------------------------------------------
# read-in strategy accounting
# ---------------------------------------------------------------------------


def test_variant_cost_deterministic_consumption():
    for variant in ("V1", "V2", "V3"):
        assert variant_cost(variant, (1.0, 1.0, 1.0)) == pytest.approx(4.0)
        assert variant_cost(variant, (1.0,)) == pytest.approx(2.0)


def test_variant_cost_closed_forms():
    q = 0.7
    assert variant_cost("V2", (q, q, q)) == pytest.approx(4.0 / q**3)
    assert variant_cost("V1", (q, q, q)) == pytest.approx(4.0 / q**2)
    assert variant_cost("V3", (q, q, q)) == pytest.approx(4.0 / q**2)
    pb = 0.9
    assert variant_cost("V2", (q, q, q), pb) == pytest.approx(4.0 / (q**3 * pb**8))
    assert variant_cost("V1", (q, q, q), pb) == pytest.approx(4.0 / (q**2 * pb**8))
    assert variant_cost("V3", (q, q, q), pb) == pytest.approx(4.0 / (q**2 * pb**4))
    assert variant_cost("V1", (0.5,), pb) == pytest.approx(2.0 / (0.5 * pb**4))


def test_variant_ordering_simultaneous_is_most_expensive():
    # 10x10 grid: merging all steps into one shot never helps
    for q in np.linspace(0.05, 1.0, 10):
        for pb in np.linspace(0.1, 1.0, 10):
            v1 = variant_cost("V1", (q, q, q), pb)
            v2 = variant_cost("V2", (q, q, q), pb)
            v3 = variant_cost("V3", (q, q, q), pb)
            assert v2 >= v1 * (1 - 1e-12)
            assert v1 >= v3 * (1 - 1e-12)
            if q < 1.0:
                assert v2 > v1
    assert variant_cost("V2", (1.0, 1.0, 1.0), 1.0) == variant_cost("V1", (1.0, 1.0, 1.0), 1.0)


def test_variant_ordering_chain_without_measurement_loss():
    # with perfect read-ins the two reuse strategies coincide
    rng = np.random.default_rng(5)
    for _ in range(50):
        q1, q2, q3 = rng.uniform(0.05, 1.0, size=3)
        v1 = variant_cost("V1", (q1, q2, q3))
        v2 = variant_cost("V2", (q1, q2, q3))
        v3 = variant_cost("V3", (q1, q2, q3))
        assert v1 <= v3 + 1e-12 <= v2 + 1e-12
        assert v1 == pytest.approx(v3)


def test_variant_cost_diverges_on_zero_probability():
    assert variant_cost("V2", (0.0, 0.5, 0.5)) == math.inf
    assert variant_cost("V1", (0.5,), 0.0) == math.inf


def test_variant_cost_validation():
    with pytest.raises(ValueError, match="variant"):
        variant_cost("V4", (0.5,))
    with pytest.raises(ValueError, match="probabilities"):
        variant_cost("V1", (0.5, 0.5))
    with pytest.raises(ValueError, match="out of"):
        variant_cost("V1", (1.5,))
    with pytest.raises(ValueError, match="p_bell"):
        variant_cost("V1", (0.5,), 1.2)


def test_variant_cost_monte_carlo_agrees():
    rng = np.random.default_rng(17)
    probs, pb = (0.8, 0.65, 0.9), 0.95
    for variant in ("V1", "V2", "V3"):
        closed = variant_cost(variant, probs, pb)
        mean, err = variant_cost_mc(variant, probs, pb, trials=200_000, rng=rng)
        assert abs(mean - closed) <= 3.0 * err


# ---------------------------------------------------------------------------
# nested runs
# ---------------------------------------------------------------------------

IDEAL = ChannelModel(v_opt=1.0, eta=1.0, dark=0.0, alpha=0.0)


def test_noiseless_run_is_perfect_and_costs_m_to_the_n():
    for steps, m in ((1, 2), (2, 4)):
        cfg = RepeaterConfig(
            total_distance=1000.0,
            levels=4,
            steps_per_level=steps,
            noise=1.0,
            channel=IDEAL,
        )
        report = run_repeater(cfg)
        assert report.fidelity == pytest.approx(1.0, abs=1e-12)
        assert all(f == pytest.approx(1.0, abs=1e-12) for f in report.level_fidelities)
        assert report.cost.overhead == pytest.approx(float(m**4), rel=1e-12)
        assert report.cost.elementary_pairs == pytest.approx(overhead(16, 2, m), rel=1e-12)


def test_swap_only_run_reduces_to_perfect_swapping():
    cfg = RepeaterConfig(total_distance=200.0, levels=1, steps_per_level=0)
    report = run_repeater(cfg)
    direct = swap(channel_pair(ChannelModel(), 100.0), channel_pair(ChannelModel(), 100.0))
    assert report.fidelity == direct.fidelity
    assert report.cost.level_m == (1.0,)
    assert report.cost.elementary_pairs == pytest.approx(overhead(2, 2, 1))


def test_uniform_m_matches_overhead_formula():
    cfg = RepeaterConfig(total_distance=400.0, levels=3, steps_per_level=0, p_bell=0.9)
    cost = run_repeater(cfg).cost
    m = cost.level_m[0]
    assert all(mi == pytest.approx(m) for mi in cost.level_m)
    assert cost.elementary_pairs == pytest.approx(overhead(8, 2, m), rel=1e-12)


def test_table_one_step_row_regression():
    # frozen output of the 3-level, 1000 km, 1% noise configuration
    cfg = RepeaterConfig(total_distance=1000.0, levels=3, steps_per_level=1, noise=0.99)
    report = run_repeater(cfg)
    assert report.fidelity == pytest.approx(0.951496487145, abs=1e-9)
    assert report.cost.overhead == pytest.approx(1.5414706931e5, rel=1e-9)
    assert report.cost.level_success == pytest.approx((0.733878, 0.814013, 0.763998), abs=5e-7)
    assert report.cost.final_success == pytest.approx(0.859787, abs=5e-7)
    assert report.input_fidelity == pytest.approx(0.930869568753, abs=1e-12)


def test_table_two_step_row_regression():
    cfg = RepeaterConfig(total_distance=10000.0, levels=6, steps_per_level=2, noise=0.96)
    report = run_repeater(cfg)
    assert report.fidelity == pytest.approx(0.909312026735, abs=1e-9)
    assert report.cost.overhead == pytest.approx(1.7671624286e12, rel=1e-9)
    assert report.cost.pairs_per_link == 4


def test_adding_a_level_recovers_fidelity():
    # halving the segments outweighs the extra noisy connection stage
    for steps, noise in ((1, 0.99), (2, 0.96)):
        for dist, n in ((5000.0, 5), (10000.0, 6)):
            lo = run_repeater(
                RepeaterConfig(total_distance=dist, levels=n, steps_per_level=steps, noise=noise)
            )
            hi = run_repeater(
                RepeaterConfig(total_distance=dist, levels=n + 1, steps_per_level=steps, noise=noise)
            )
            assert hi.fidelity > lo.fidelity


def test_overhead_at_least_one_on_working_configs():
    for steps, noise in ((1, 0.99), (2, 0.96)):
        cost = run_repeater(
            RepeaterConfig(total_distance=1000.0, levels=3, steps_per_level=steps, noise=noise)
        ).cost
        assert cost.overhead >= 1.0
        assert cost.elementary_pairs >= cost.segments


def test_chain_broken_reports_failing_level():
    with pytest.raises(ChainBrokenError, match="level 1") as info:
        run_repeater(RepeaterConfig(total_distance=2000.0, levels=2, steps_per_level=1, noise=0.7))
    assert info.value.level == 1
    assert info.value.fidelity == pytest.approx(0.257062, abs=1e-5)
    with pytest.raises(ChainBrokenError, match="level 2") as info:
        run_repeater(RepeaterConfig(total_distance=5000.0, levels=5, steps_per_level=1, noise=0.9))
    assert info.value.level == 2


def test_p_bell_scales_cost_not_state():
    base = RepeaterConfig(total_distance=1000.0, levels=3, steps_per_level=1, noise=0.99)
    lossy = RepeaterConfig(
        total_distance=1000.0, levels=3, steps_per_level=1, noise=0.99, p_bell=0.9
    )
    rb, rl = run_repeater(base), run_repeater(lossy)
    assert np.allclose(rb.pair.vector, rl.pair.vector, atol=0.0)
    for m0, m1 in zip(rb.cost.level_m, rl.cost.level_m):
        assert m1 / m0 == pytest.approx(0.9**-4, rel=1e-12)


def test_final_round_affects_fidelity_not_cost():
    base = RepeaterConfig(total_distance=1000.0, levels=3, steps_per_level=1, noise=0.99)
    bare = RepeaterConfig(
        total_distance=1000.0, levels=3, steps_per_level=1, noise=0.99, final_round=False
    )
    rb, rr = run_repeater(bare), run_repeater(base)
    assert rr.fidelity > rb.fidelity
    assert rb.cost.final_success is None
    assert rr.cost.overhead == pytest.approx(rb.cost.overhead, rel=1e-14)


def test_separate_swapping_mode_runs():
    cfg = RepeaterConfig(
        total_distance=1000.0,
        levels=3,
        steps_per_level=1,
        noise=0.99,
        integrated_swapping=False,
    )
    report = run_repeater(cfg)
    assert 0.9 < report.fidelity < 1.0
    # both links purify independently before the ideal middle measurement
    assert all(q < 0.8 for q in report.cost.level_success)


def test_reuse_variants_cost_less_in_run():
    reports = {
        v: run_repeater(
            RepeaterConfig(
                total_distance=1000.0, levels=3, steps_per_level=1, noise=0.99, variant=v
            )
        )
        for v in ("V1", "V2", "V3")
    }
    assert reports["V1"].cost.overhead <= reports["V3"].cost.overhead
    assert reports["V3"].cost.overhead <= reports["V2"].cost.overhead
    # the physical state never depends on the accounting strategy
    for rep in reports.values():
        assert np.allclose(rep.pair.vector, reports["V2"].pair.vector, atol=0.0)


def test_two_step_variant_accounting_runs():
    for v in ("V1", "V3"):
        rep = run_repeater(
            RepeaterConfig(
                total_distance=1000.0,
                levels=3,
                steps_per_level=2,
                noise=0.96,
                p_bell=0.95,
                variant=v,
            )
        )
        assert rep.cost.overhead > 0.0
        assert all(m >= 1.0 for m in rep.cost.level_m)


def test_repeater_config_validation():
    with pytest.raises(ValueError, match="levels"):
        RepeaterConfig(total_distance=1000.0, levels=0)
    with pytest.raises(ValueError, match="total_distance"):
        RepeaterConfig(total_distance=-5.0, levels=2)
    with pytest.raises(ValueError, match="steps_per_level"):
        RepeaterConfig(total_distance=1000.0, levels=2, steps_per_level=3)
    with pytest.raises(ValueError, match="noise"):
        RepeaterConfig(total_distance=1000.0, levels=2, noise=1.5)
    with pytest.raises(ValueError, match="p_bell"):
        RepeaterConfig(total_distance=1000.0, levels=2, p_bell=0.0)
    with pytest.raises(ValueError, match="variant"):
        RepeaterConfig(total_distance=1000.0, levels=2, variant="V4")


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def test_sweep_covers_grid():
    cfg = RepeaterConfig(total_distance=1000.0, levels=3, steps_per_level=1, noise=0.99)
    rows = sweep(cfg, [800.0, 1000.0, 1200.0], levels=[3, 4])
    assert len(rows) == 6
    assert {(r.levels, r.distance_km) for r in rows} == {
        (n, d) for n in (3, 4) for d in (800.0, 1000.0, 1200.0)
    }
    for row in rows:
        assert row.steps_per_level == 1 and row.noise == 0.99
        assert 0.5 < row.fidelity < 1.0 and row.overhead > 1.0


def test_sweep_point_matches_run():
    cfg = RepeaterConfig(total_distance=999.0, levels=3, steps_per_level=1, noise=0.99)
    row = sweep(cfg, [1000.0])[0]
    report = run_repeater(
        RepeaterConfig(total_distance=1000.0, levels=3, steps_per_level=1, noise=0.99)
    )
    assert row.fidelity == report.fidelity
    assert row.overhead == report.cost.overhead


def test_sweep_swap_only_equals_iterated_swapping():
    cfg = RepeaterConfig(total_distance=400.0, levels=2, steps_per_level=0)
    row = sweep(cfg, [400.0])[0]
    pair = channel_pair(ChannelModel(), 100.0)
    for _ in range(2):
        pair = swap(pair, pair)
    assert row.fidelity == pair.fidelity


def test_sweep_reports_broken_chains_in_band():
    cfg = RepeaterConfig(total_distance=2000.0, levels=2, steps_per_level=1, noise=0.7)
    rows = sweep(cfg, [500.0, 2000.0])
    assert rows[1].overhead == math.inf
    assert rows[1].fidelity < 0.5


def test_sweep_rejects_bad_distance():
    cfg = RepeaterConfig(total_distance=1000.0, levels=3)
    with pytest.raises(ValueError, match="distances"):
        sweep(cfg, [1000.0, -3.0])
