"""Scenario file parsing: schema, defaults, bounds, env overrides."""

import pytest

from mbqr.config import ConfigError, load_scenario, parse_scenario

BASE = """\
[scenario]
command = repeater

[repeater]
total_distance = 1000
levels = 3
"""


def test_minimal_scenario_fills_defaults():
    cfg = parse_scenario(BASE)
    assert cfg.command == "repeater"
    assert cfg.seed == 0
    rp = cfg.section("repeater")
    assert rp["steps_per_level"] == 1
    assert rp["integrated_swapping"] is True
    assert rp["noise"] == 1.0
    assert rp["p_bell"] == 1.0
    assert rp["variant"] == "V2"
    assert rp["final_round"] is True


def test_channel_section_materialized_for_repeater():
    ch = parse_scenario(BASE).section("channel")
    assert ch == {"v_opt": 0.99, "eta": 0.3, "dark": 1e-4, "alpha": 0.16}


def test_repeater_config_roundtrip():
    cfg = parse_scenario(BASE + "steps_per_level = 2\nnoise = 0.96\n")
    rcfg = cfg.repeater_config()
    assert rcfg.total_distance == 1000.0
    assert rcfg.levels == 3
    assert rcfg.steps_per_level == 2
    assert rcfg.noise == 0.96
    assert rcfg.channel.alpha == 0.16


def test_missing_required_key_names_it():
    text = "[scenario]\ncommand = repeater\n\n[repeater]\ntotal_distance = 1000\n"
    with pytest.raises(ConfigError, match="'levels'"):
        parse_scenario(text)


def test_missing_command():
    with pytest.raises(ConfigError, match="'command'"):
        parse_scenario("[scenario]\nseed = 3\n")


def test_unknown_section_rejected_with_line():
    with pytest.raises(ConfigError, match=r"unknown section \[warp\] \(line 8\)"):
        parse_scenario(BASE + "\n[warp]\nspeed = 9\n")


def test_unknown_key_rejected_with_line():
    with pytest.raises(ConfigError, match=r"unknown key 'warp_factor'.*\(line 7\)"):
        parse_scenario(BASE + "warp_factor = 9\n")


def test_out_of_range_value_names_bound():
    with pytest.raises(ConfigError, match=r"1.5 out of range \[0, 1\]"):
        parse_scenario(BASE + "noise = 1.5\n")


def test_open_bound_rejects_endpoint():
    with pytest.raises(ConfigError, match=r"out of range \(0, 1\]"):
        parse_scenario(BASE + "p_bell = 0\n")


def test_levels_bounded():
    with pytest.raises(ConfigError, match="out of range"):
        parse_scenario(BASE.replace("levels = 3", "levels = 31"))


def test_non_numeric_value():
    with pytest.raises(ConfigError, match="not a valid float"):
        parse_scenario(BASE + "noise = lots\n")


def test_choice_rejected():
    with pytest.raises(ConfigError, match="'V9' is not one of V1, V2, V3"):
        parse_scenario(BASE + "variant = V9\n")


def test_bool_spellings():
    for raw, want in (("yes", True), ("off", False), ("1", True), ("FALSE", False)):
        cfg = parse_scenario(BASE + f"final_round = {raw}\n")
        assert cfg.section("repeater")["final_round"] is want
    with pytest.raises(ConfigError, match="not a valid bool"):
        parse_scenario(BASE + "final_round = maybe\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        parse_scenario(BASE + "levels = 4\n")


def test_unknown_command():
    with pytest.raises(ConfigError, match="not one of"):
        parse_scenario("[scenario]\ncommand = launch\n")


def test_seed_range():
    cfg = parse_scenario(BASE.replace("command = repeater", "command = repeater\nseed = 18446744073709551615"))
    assert cfg.seed == 2**64 - 1
    with pytest.raises(ConfigError, match="out of range"):
        parse_scenario(BASE.replace("command = repeater", "command = repeater\nseed = 18446744073709551616"))


def test_sweep_needs_bounds_ordered():
    text = """\
[scenario]
command = sweep

[repeater]
total_distance = 1000
levels = 3

[sweep]
distance_min = 2000
distance_max = 1000
"""
    with pytest.raises(ConfigError, match="distance_min"):
        parse_scenario(text)


def test_sweep_levels_list():
    text = """\
[scenario]
command = sweep

[repeater]
total_distance = 1000
levels = 3

[sweep]
distance_min = 500
distance_max = 2000
levels = 3, 4, 5
"""
    assert parse_scenario(text).section("sweep")["levels"] == (3, 4, 5)


def test_threshold_defaults_and_element_list():
    text = "[scenario]\ncommand = threshold\n"
    th = parse_scenario(text).section("threshold")
    assert th["elements"] == ("one_step", "two_step")
    assert th["mode"] == "iterated"
    assert th["bracket_lo"] == 0.85
    bad = text + "\n[threshold]\nelements = one_step, warp_step\n"
    with pytest.raises(ConfigError, match="'warp_step'"):
        parse_scenario(bad)


def test_bracket_order_checked():
    text = "[scenario]\ncommand = threshold\n\n[threshold]\nbracket_lo = 0.99\nbracket_hi = 0.9\n"
    with pytest.raises(ConfigError, match="bracket_lo"):
        parse_scenario(text)


def test_verify_scenario_needs_nothing_else():
    cfg = parse_scenario("[scenario]\ncommand = verify\n")
    assert cfg.command == "verify"


def test_env_override_applies():
    cfg = parse_scenario(BASE, env={"MBQR_REPEATER_NOISE": "0.97"})
    assert cfg.section("repeater")["noise"] == 0.97


def test_env_override_error_names_variable():
    with pytest.raises(ConfigError, match="MBQR_REPEATER_NOISE"):
        parse_scenario(BASE, env={"MBQR_REPEATER_NOISE": "2.0"})


def test_env_unknown_names_ignored():
    cfg = parse_scenario(BASE, env={"MBQR_REPEATER_WARP": "9", "MBQR_PATH": "/x"})
    assert cfg.section("repeater")["noise"] == 1.0


def test_load_scenario_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_scenario("/nonexistent/scenario.ini")


def test_load_scenario_reads_file(tmp_path):
    path = tmp_path / "s.ini"
    path.write_text(BASE)
    cfg = load_scenario(str(path), env={})
    assert cfg.command == "repeater"
    assert cfg.source == str(path)
