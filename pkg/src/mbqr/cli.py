"""Scenario runner and built-in verification suites.

Scenarios are flat ``key = value`` files with section headers (see
:mod:`mbqr.config`); the CLI verb must agree with the ``command`` key.
Artifacts are CSV tables, JSON summaries, and PNG figures, written
atomically into the output directory, so a crashed run never leaves a
truncated file and identical (config, seed) inputs give identical
bytes.  Exit status: 0 on success, 1 when a computation reports a
violation (broken chain, failed verification), 2 on config errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import statevector as sv
from .compiler import ResourceState, compile_resource, verify_resource
from .config import ConfigError, ScenarioConfig, load_scenario, parse_scenario
from .graph_state import GraphState, ZeroProbabilityError, measure_pauli
from .graphs import Graph
from .local_clifford import LocalClifford
from .plotting import repeater_figure_png, sweep_figure_png, threshold_figure_png
from .protocols import element_names, get_element
from .purification import (
    BellDiagonal,
    family_weights,
    mb_purify_exact,
    mb_purify_fast,
    threshold_find,
)
from .repeater import ChainBrokenError, run_repeater
from .repeater import sweep as sweep_runs

__all__ = ["main", "run_scenario", "verify_all"]

_TOL = 1e-10
_SEED_MAX = 2**64 - 1


# ---------------------------------------------------------------------------
# artifact serialization
# ---------------------------------------------------------------------------


def _write_atomic(path: Path, data: bytes) -> None:
    """Write-temp-then-rename so concurrent runners never see partial files."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.{os.getpid()}.tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _json_bytes(payload: Mapping[str, Any]) -> bytes:
    return (json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def _csv_bytes(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue().encode()


def _finite(x: float | None) -> float | None:
    """JSON has no Infinity; broken-chain overheads become null."""
    if x is None or not math.isfinite(x):
        return None
    return x


def _echo(cfg: ScenarioConfig, sections: Sequence[str]) -> dict[str, Any]:
    out: dict[str, Any] = {"command": cfg.command, "seed": cfg.seed}
    for name in sections:
        block = cfg.values.get(name)
        if block is not None:
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in block.items()}
    return out


# ---------------------------------------------------------------------------
# scenario handlers
# ---------------------------------------------------------------------------


def _cmd_compile(cfg: ScenarioConfig, out: Path, seed: int) -> int:
    block = cfg.section("compile")
    worst = 0.0
    elements: dict[str, Any] = {}
    for name in block["elements"]:
        el = get_element(name, block["variant"])
        stations = []
        el_worst = 0.0
        for st in el.stations:
            res = compile_resource(st.circuit)
            # exhaustive over read-in patterns for small stations, a
            # seeded sample of 256 otherwise
            dev = verify_resource(st.circuit, res, n_states=2, k_limit=256, seed=seed)
            el_worst = max(el_worst, dev)
            gs = res.graph_state
            stations.append(
                {
                    "station": st.name,
                    "qubits": res.n_qubits,
                    "ports": res.n_ports,
                    "outputs": res.n_outputs,
                    "edges": [list(e) for e in sorted(gs.graph.edges)],
                    "local_ops": [c.name for c in gs.corrections],
                    "max_deviation": dev,
                }
            )
        worst = max(worst, el_worst)
        elements[name] = {
            "pairs_consumed": el.n_pairs,
            "stations": stations,
            "max_deviation": el_worst,
        }
    payload = {
        "variant": block["variant"],
        "elements": elements,
        "max_deviation": worst,
        "scenario": _echo(cfg, ("compile",)),
    }
    _write_atomic(out / "compile.json", _json_bytes(payload))
    return 0 if worst <= 1e-9 else 1


def _cmd_purify(cfg: ScenarioConfig, out: Path, seed: int) -> int:
    block = cfg.section("purify")
    el = get_element(block["element"], block["variant"])
    pair = family_weights(block["family"], block["fidelity"])
    rounds: list[dict[str, Any]] = [
        {"round": 0, "fidelity": pair.fidelity, "weights": list(pair.weights)}
    ]
    for k in range(1, block["rounds"] + 1):
        res = mb_purify_fast(el, block["noise"], pair)
        pair = res.output
        rounds.append(
            {
                "round": k,
                "fidelity": pair.fidelity,
                "weights": list(pair.weights),
                "success_probability": res.success_probability,
            }
        )
    payload = {
        "element": block["element"],
        "variant": block["variant"],
        "family": block["family"],
        "noise_fraction": 1.0 - block["noise"],
        "retention": block["noise"],
        "input_fidelity": block["fidelity"],
        "final_fidelity": pair.fidelity,
        "rounds": rounds,
        "scenario": _echo(cfg, ("purify",)),
    }
    _write_atomic(out / "purify.json", _json_bytes(payload))
    return 0


def _cmd_threshold(cfg: ScenarioConfig, out: Path, seed: int) -> int:
    block = cfg.section("threshold")
    bracket = (block["bracket_lo"], block["bracket_hi"])
    scan_f = 0.95  # representative input fidelity for the scan rows
    p_grid = [float(p) for p in np.linspace(bracket[0], bracket[1], 31)]

    criticals: dict[str, dict[str, float]] = {}
    rows: list[tuple[Any, ...]] = []
    curves: dict[str, tuple[list[float], list[float]]] = {}
    marks: dict[str, float] = {}
    for name in block["elements"]:
        el = get_element(name)
        # both input families are scanned; the figure follows the
        # configured one
        criticals[name] = {}
        for family in ("binary", "werner"):
            crit = threshold_find(
                el,
                family,
                mode=block["mode"],
                bracket=bracket,
                grid_points=block["grid_points"],
                tol=block["tol"],
            )
            criticals[name][family] = crit
            noises: list[float] = []
            fouts: list[float] = []
            for p in [*p_grid, 1.0 - crit]:
                res = mb_purify_fast(el, p, family_weights(family, scan_f))
                rows.append(
                    (name, family, p, scan_f, res.output.fidelity, res.success_probability)
                )
                noises.append(1.0 - p)
                fouts.append(res.output.fidelity)
            if family == block["family"]:
                order = np.argsort(noises)
                curves[name] = (
                    [noises[i] for i in order],
                    [fouts[i] for i in order],
                )
                marks[name] = crit

    header = ("protocol", "family", "p", "F_in", "F_out", "p_success")
    _write_atomic(out / "threshold.csv", _csv_bytes(header, rows))
    payload = {
        "mode": block["mode"],
        "family": block["family"],
        "bracket": list(bracket),
        "tol": block["tol"],
        "critical_noise": criticals,
        "scenario": _echo(cfg, ("threshold",)),
    }
    _write_atomic(out / "threshold.json", _json_bytes(payload))
    _write_atomic(out / "threshold.png", threshold_figure_png(curves, marks))
    return 0


def _cmd_repeater(cfg: ScenarioConfig, out: Path, seed: int) -> int:
    report = run_repeater(cfg.repeater_config())
    cost = report.cost
    payload = {
        "fidelity": report.fidelity,
        "weights": list(report.pair.weights),
        "input_fidelity": report.input_fidelity,
        "level_fidelities": list(report.level_fidelities),
        "segments": cost.segments,
        "segment_length_km": report.segment_length,
        "pairs_per_link": cost.pairs_per_link,
        "level_success": list(cost.level_success),
        "level_m": list(cost.level_m),
        "final_success": cost.final_success,
        "attempts_per_pair": cost.attempts_per_pair,
        "elementary_pairs": cost.elementary_pairs,
        "overhead": cost.overhead,
        "scenario": _echo(cfg, ("repeater", "channel")),
    }
    _write_atomic(out / "repeater.json", _json_bytes(payload))
    _write_atomic(out / "repeater.png", repeater_figure_png(report))
    return 0


def _cmd_sweep(cfg: ScenarioConfig, out: Path, seed: int) -> int:
    rcfg = cfg.repeater_config()
    block = cfg.section("sweep")
    space = np.geomspace if block["log_spacing"] else np.linspace
    distances = [float(d) for d in space(block["distance_min"], block["distance_max"], block["points"])]
    levels = list(block["levels"]) or None
    rows = sweep_runs(rcfg, distances, levels=levels)

    header = ("distance_km", "levels", "steps_per_level", "noise", "fidelity", "overhead")
    _write_atomic(
        out / "sweep.csv",
        _csv_bytes(
            header,
            [
                (r.distance_km, r.levels, r.steps_per_level, r.noise, r.fidelity, r.overhead)
                for r in rows
            ],
        ),
    )

    curves = []
    for n in sorted({r.levels for r in rows}):
        sub = sorted((r for r in rows if r.levels == n), key=lambda r: r.distance_km)
        last = sub[-1]
        curves.append(
            {
                "levels": n,
                "points": len(sub),
                "broken_points": sum(1 for r in sub if not math.isfinite(r.overhead)),
                "max_fidelity": max(r.fidelity for r in sub),
                "endpoint": {
                    "distance_km": last.distance_km,
                    "fidelity": last.fidelity,
                    "overhead": _finite(last.overhead),
                },
            }
        )
    payload = {
        "points": len(rows),
        "curves": curves,
        "scenario": _echo(cfg, ("repeater", "sweep", "channel")),
    }
    _write_atomic(out / "sweep.json", _json_bytes(payload))
    _write_atomic(out / "sweep.png", sweep_figure_png(rows))
    return 0


def _cmd_verify(cfg: ScenarioConfig, out: Path, seed: int) -> int:
    report = verify_all(seed=seed)
    _write_atomic(out / "verify.json", _json_bytes(report))
    for name in sorted(report["suites"]):
        suite = report["suites"][name]
        extra = f" ({', '.join(suite['failing'])})" if suite.get("failing") else ""
        print(
            f"{name}: {suite['cases']} cases, {suite['failures']} failures,"
            f" max deviation {suite['max_deviation']:.3e}{extra}"
        )
    print("PASS" if report["passed"] else "FAIL")
    return 0 if report["passed"] else 1


_HANDLERS = {
    "compile": _cmd_compile,
    "purify": _cmd_purify,
    "threshold": _cmd_threshold,
    "repeater": _cmd_repeater,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def run_scenario(cfg: ScenarioConfig, out_dir: str | os.PathLike = ".", seed: int | None = None) -> int:
    """Execute one validated scenario and write its artifacts.

    ``seed`` overrides the scenario seed when given.  Returns the
    process exit status (0 success, 1 violation, 2 never: config errors
    raise :class:`~mbqr.config.ConfigError` instead).
    """
    use_seed = cfg.seed if seed is None else seed
    return _HANDLERS[cfg.command](cfg, Path(out_dir), use_seed)


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

_PAULI_MATS = {
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}
# columns: +1 eigenvector, then -1
_EIGBASIS = {
    "X": np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0),
    "Y": np.array([[1.0, 1.0], [1.0j, -1.0j]], dtype=complex) / math.sqrt(2.0),
    "Z": np.eye(2, dtype=complex),
}


def _collinearity_gap(v: np.ndarray, w: np.ndarray) -> float:
    """1 - |<v|w>| for unit vectors; 0 iff equal up to a global phase."""
    return abs(1.0 - abs(complex(np.vdot(v, w))))


def _rule_deviation(gs: GraphState, a: int, basis: str, outcome: int) -> float:
    """Graph measurement rule versus a dense projector computation."""
    n = gs.n
    psi = gs.state_vector()
    proj = 0.5 * (np.eye(2, dtype=complex) + outcome * _PAULI_MATS[basis])
    phi = sv.apply_1q(psi, n, a, proj)
    p_dense = float(np.real(np.vdot(phi, phi)))
    try:
        post, p_rule = measure_pauli(gs, a, basis, outcome)
    except ZeroProbabilityError:
        return p_dense
    dev = abs(float(p_rule) - p_dense)
    if p_dense <= 1e-14:
        return dev
    # rotate the measured eigenvector onto the computational basis and
    # factor the qubit out, then compare up to global phase
    rot = sv.apply_1q(phi, n, a, _EIGBASIS[basis].conj().T)
    rest = sv.contract_qubit(rot, n, a, 0 if outcome == 1 else 1)
    rest = rest / np.linalg.norm(rest)
    return max(dev, _collinearity_gap(rest, post.state_vector()))


def _lc_deviation(g: Graph, a: int, psi: np.ndarray | None = None) -> float:
    """Local-complementation identity on the dense state vector."""
    if psi is None:
        psi = sv.graph_state_vector(g)
    lhs = sv.apply_1q(psi, g.n, a, LocalClifford.sqrt_ix(-1).matrix())
    for b in sorted(g.neighbors(a)):
        lhs = sv.apply_1q(lhs, g.n, b, LocalClifford.sqrt_iz(1).matrix())
    rhs = sv.graph_state_vector(g.local_complement(a))
    return _collinearity_gap(lhs, rhs)


def _measurement_rule_suite(rng: np.random.Generator, cases: int) -> dict[str, Any]:
    worst, failures = 0.0, 0
    for _ in range(cases):
        n = int(rng.integers(2, 9))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
        gs = GraphState.bare(Graph.from_edges(n, edges))
        dev = _rule_deviation(
            gs,
            int(rng.integers(n)),
            "XYZ"[rng.integers(3)],
            1 if rng.random() < 0.5 else -1,
        )
        worst = max(worst, dev)
        failures += dev > _TOL
    return {"cases": cases, "failures": int(failures), "max_deviation": worst}


def _lc_suite(max_vertices: int) -> dict[str, Any]:
    worst, failures, cases = 0.0, 0, 0
    for n in range(2, max_vertices + 1):
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        for mask in range(1 << len(pairs)):
            g = Graph.from_edges(n, [e for k, e in enumerate(pairs) if (mask >> k) & 1])
            psi = sv.graph_state_vector(g)
            for a in range(n):
                dev = _lc_deviation(g, a, psi)
                worst = max(worst, dev)
                failures += dev > _TOL
                cases += 1
    return {"cases": cases, "failures": int(failures), "max_deviation": worst}


def _oracle_suite() -> dict[str, Any]:
    worst, failures, cases = 0.0, 0, 0
    for name in element_names():
        el = get_element(name)
        if sum(compile_resource(st.circuit).n_qubits for st in el.stations) > 12:
            continue  # beyond the dense oracle
        for p in (1.0, 0.99, 0.96, 0.93):
            for f in (0.6, 0.8, 0.95):
                pair = BellDiagonal.werner(f)
                fast = mb_purify_fast(el, p, pair)
                exact = mb_purify_exact(el, p, pair)
                dev = max(
                    abs(fast.success_probability - exact.success_probability),
                    max(
                        abs(x - y)
                        for x, y in zip(fast.output.weights, exact.output.weights)
                    ),
                )
                worst = max(worst, dev)
                failures += dev > _TOL
                cases += 1
    return {"cases": cases, "failures": int(failures), "max_deviation": worst}


def _resource_suite(
    seed: int, resources: Mapping[str, ResourceState] | None
) -> dict[str, Any]:
    override = dict(resources or {})
    worst, cases = 0.0, 0
    failing: list[str] = []
    for name in element_names():
        el = get_element(name)
        for st in el.stations:
            key = f"{name}/{st.name}"
            res = override.get(key)
            if res is None:
                res = compile_resource(st.circuit)
            dev = verify_resource(st.circuit, res, n_states=2, k_limit=64, seed=seed)
            worst = max(worst, dev)
            cases += 1
            if dev > 1e-9:
                failing.append(key)
    report = {"cases": cases, "failures": len(failing), "max_deviation": worst}
    if failing:
        report["failing"] = failing
    return report


def verify_all(
    seed: int = 0,
    graph_cases: int = 200,
    lc_max_vertices: int = 5,
    resources: Mapping[str, ResourceState] | None = None,
) -> dict[str, Any]:
    """Run the built-in verification suites and summarize the results.

    * measurement_rules: random graphs up to 8 vertices, the graph
      measurement rule against dense projection.
    * local_complementation: the rewrite identity on every graph up to
      ``lc_max_vertices`` vertices, every vertex.
    * oracle_equivalence: fast Pauli-picture purification against the
      dense oracle on every element whose resources fit 12 qubits.
    * resources: measurement-based execution identity for every
      compiled station resource.  ``resources`` can replace entries
      (keyed ``"element/station"``) to prove a corrupted resource is
      reported by name.
    """
    rng = np.random.default_rng(seed)
    suites = {
        "measurement_rules": _measurement_rule_suite(rng, graph_cases),
        "local_complementation": _lc_suite(lc_max_vertices),
        "oracle_equivalence": _oracle_suite(),
        "resources": _resource_suite(seed, resources),
    }
    passed = all(s["failures"] == 0 for s in suites.values())
    return {"passed": passed, "seed": seed, "suites": suites}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbqr",
        description="Measurement-based purification and repeater scenario runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="verb")
    helps = {
        "compile": "compile station circuits into graph resources",
        "purify": "iterate one purification element on a pair family",
        "threshold": "locate critical local noise for purification gain",
        "repeater": "run one nested repeater chain",
        "sweep": "repeater curves over a distance range",
        "verify": "run the built-in verification suites",
    }
    for verb in ("compile", "purify", "threshold", "repeater", "sweep", "verify"):
        p = sub.add_parser(verb, help=helps[verb])
        p.add_argument(
            "--config",
            required=verb != "verify",
            metavar="PATH",
            help="scenario file" + (" (optional)" if verb == "verify" else ""),
        )
        p.add_argument("--out", default=".", metavar="DIR", help="output directory")
        p.add_argument(
            "--seed", type=int, default=None, help="override the scenario seed"
        )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed <= _SEED_MAX:
            raise ConfigError(f"seed must lie in [0, {_SEED_MAX}], got {args.seed}")
        if args.config is not None:
            cfg = load_scenario(args.config)
            if cfg.command != args.command:
                raise ConfigError(
                    f"{args.config}: scenario requests command {cfg.command!r}"
                    f" but the {args.command!r} verb was invoked"
                )
        else:
            cfg = parse_scenario("[scenario]\ncommand = verify\n", source="<builtin>")
        return run_scenario(cfg, args.out, args.seed)
    except ChainBrokenError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
