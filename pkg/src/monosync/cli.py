"""Command-line interface: simulate, contract, behavior, decompose, figure4.

Exit codes are part of the interface and scripts may rely on them:

* 0 - success / certified as predicted
* 2 - configuration or argument validation failure
* 3 - numerical divergence during integration
* 4 - a theorem-predicted property failed to certify

Every output file embeds the fully resolved configuration and seed, so any
file is self-reproducing.  CSV floats use the shortest round-trip decimal
representation, keeping golden files portable across platforms with IEEE-754
doubles.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .coupling import Monotonicity
from .experiments import (
    behavior_sweep,
    contraction_sweep,
    figure4,
)
from .integrator import (
    NumericalDivergenceError,
    SimConfig,
    Trajectory,
    simulate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_VIOLATION = 4


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    """Shortest decimal representation that round-trips to the same double."""
    return repr(float(value))


def _provenance(run_cfg: RunConfig, kind: str) -> dict:
    return {"kind": kind, "config": run_cfg.raw}


def write_trajectory_csv(path: Path, traj: Trajectory, provenance: dict) -> None:
    """Trajectory as CSV: comment provenance line, then t,phase_1..phase_N."""
    times, phases = traj.phase_table()
    n = phases.shape[1]
    lines = ["# provenance: " + json.dumps(provenance, sort_keys=True)]
    lines.append("t," + ",".join(f"phase_{j + 1}" for j in range(n)))
    for ti, row in zip(times, phases):
        lines.append(",".join([_fmt(ti)] + [_fmt(v) for v in row]))
    path.write_text("\n".join(lines) + "\n")


def write_events_json(path: Path, traj: Trajectory, provenance: dict) -> None:
    doc = {
        "provenance": provenance,
        "events": [
            {
                "t": e.t,
                "merged_ids": list(e.merged),
                "multiplicity": e.resulting_multiplicity,
            }
            for e in traj.events
        ],
        "terminal": {"kind": traj.terminal.kind, "t": traj.terminal.t},
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def write_report_json(path: Path, payload: dict, provenance: dict) -> None:
    doc = {"provenance": provenance, **payload}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(config_path: str, out_dir: str) -> int:
    run_cfg = load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = SimConfig(
        params=run_cfg.params,
        initial=run_cfg.initial_state(),
        dt=run_cfg.dt,
        t_end=run_cfg.t_end,
        sync_eps=run_cfg.sync_eps,
        record_every=run_cfg.record_every,
        splay_tol=run_cfg.splay_tol,
    )
    traj = simulate(cfg)
    prov = _provenance(run_cfg, "trajectory")
    write_trajectory_csv(out / "trajectory.csv", traj, prov)
    write_events_json(out / "events.json", traj, prov)
    print(traj.terminal.kind)
    return EXIT_OK


def cmd_contract(config_path: str, out_dir: str) -> int:
    run_cfg = load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = contraction_sweep(
        run_cfg.params,
        run_cfg.n_pairs,
        run_cfg.horizon,
        run_cfg.seed,
        dt=run_cfg.dt,
        record_every=run_cfg.sweep_record_every,
        sync_eps=run_cfg.sync_eps,
        cone=run_cfg.cone,
    )
    write_report_json(
        out / "contraction_report.json",
        report.to_jsonable(),
        _provenance(run_cfg, "contraction_report"),
    )
    print(report.verdict)
    if report.verdict == "violated":
        return EXIT_VIOLATION
    expected = (
        "contracting"
        if run_cfg.params.coupling_class.monotonicity is Monotonicity.DECREASING
        else "expanding"
    )
    return EXIT_OK if report.verdict == expected else EXIT_VIOLATION


def cmd_behavior(config_path: str, out_dir: str) -> int:
    run_cfg = load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = behavior_sweep(
        run_cfg.params,
        run_cfg.n_trials,
        run_cfg.seed,
        dt=run_cfg.dt,
        t_end=run_cfg.t_end,
        sync_eps=run_cfg.sync_eps,
        record_every=run_cfg.record_every,
        splay_tol=run_cfg.splay_tol,
        jobs=run_cfg.jobs,
    )
    write_report_json(
        out / "behavior_report.json",
        report.to_jsonable(),
        _provenance(run_cfg, "behavior_report"),
    )
    print(report.summary)
    predicted = (
        "all_splay"
        if run_cfg.params.coupling_class.monotonicity is Monotonicity.DECREASING
        else "all_full_sync"
    )
    return EXIT_OK if report.summary == predicted else EXIT_VIOLATION


def cmd_decompose(values: list[float]) -> int:
    import numpy as np

    from .state import _critical_raw, _tv_raw

    d = np.asarray(values, dtype=float)
    if d.size < 1:
        print("decompose needs at least one difference value", file=sys.stderr)
        return EXIT_CONFIG
    if not np.all(np.isfinite(d)):
        print("difference values must be finite", file=sys.stderr)
        return EXIT_CONFIG
    if np.all(d == 0.0):
        print("zero difference vector has no decomposition", file=sys.stderr)
        return EXIT_CONFIG
    tv = _tv_raw(d)
    indices, kinds = _critical_raw(d)
    signs = [1 if k.value == "max" else -1 for k in kinds]
    alt = sum(s * d[i - 1] for i, s in zip(indices, signs))
    print(f"difference vector: {' '.join(_fmt(v) for v in d)}")
    print(f"tv_distance: {_fmt(tv)}")
    print(
        "critical indices: "
        + " ".join(f"{i}:{k.value}" for i, k in zip(indices, kinds))
    )
    print(f"alternating_sum: {_fmt(alt)}")
    residual = abs(tv - 2.0 * alt)
    print(f"factor2_identity: tv - 2*alt = {_fmt(residual)}")
    return EXIT_OK


def cmd_figure4(seed: int, out_dir: str) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = figure4(seed)
    provenance = {
        "kind": "figure4",
        "seed": seed,
        "config": {
            "couplings": ["expfam{s=+1, a=0.1, N=10}", "expfam{s=-1, a=0.1, N=10}"],
            "omega": 1.0,
            "dt": 1e-2,
            "t_end": 400.0,
            "sync_eps": 1e-8,
            "record_every": 10,
            "splay_tol": 1e-6,
        },
    }
    summary = {"seed": seed, "initial_diffs": [float(v) for v in result.initial.diffs]}
    for label, traj in (("decreasing", result.decreasing), ("increasing", result.increasing)):
        write_trajectory_csv(out / f"figure4_{label}.csv", traj, provenance)
        summary[label] = {
            "terminal": traj.terminal.kind,
            "terminal_t": traj.terminal.t,
            "n_events": len(traj.events),
            "event_times": [e.t for e in traj.events],
        }
    (out / "figure4_summary.json").write_text(
        json.dumps({"provenance": provenance, **summary}, sort_keys=True, indent=2)
        + "\n"
    )
    print(
        f"decreasing: {result.decreasing.terminal.kind}; "
        f"increasing: {result.increasing.terminal.kind}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monosync",
        description="Simulate and certify networks of monotone phase-coupled oscillators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate one configuration")
    p_sim.add_argument("-c", "--config", required=True)
    p_sim.add_argument("-o", "--out", required=True)

    p_con = sub.add_parser("contract", help="run a contraction/expansion certificate sweep")
    p_con.add_argument("-c", "--config", required=True)
    p_con.add_argument("-o", "--out", required=True)

    p_beh = sub.add_parser("behavior", help="classify terminal behavior over many trials")
    p_beh.add_argument("-c", "--config", required=True)
    p_beh.add_argument("-o", "--out", required=True)

    p_dec = sub.add_parser("decompose", help="metric diagnostics for a difference vector")
    p_dec.add_argument("values", nargs="+", type=float, metavar="D")

    p_fig = sub.add_parser("figure4", help="reproduce the canonical two-branch N=10 run")
    p_fig.add_argument("--seed", type=int, default=42)
    p_fig.add_argument("-o", "--out", required=True)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out)
        if args.command == "contract":
            return cmd_contract(args.config, args.out)
        if args.command == "behavior":
            return cmd_behavior(args.config, args.out)
        if args.command == "decompose":
            return cmd_decompose(args.values)
        if args.command == "figure4":
            return cmd_figure4(args.seed, args.out)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDivergenceError as err:
        print(f"numerical divergence: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
