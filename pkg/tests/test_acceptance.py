"""Acceptance suite: one test per certification criterion.

Each test prints a PASS/FAIL line (visible with ``pytest -s``) and asserts
the criterion at its stated tolerance.  Heavy sweeps live here rather than
in the unit tests; expect a few minutes total.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from monosync.coupling import TWO_PI, expfam
from monosync.dynamics import (
    ModelParams,
    _reduced_field_batch,
    cluster_vector_field,
    derivative_terms,
    reduced_vector_field,
)
from monosync.experiments import (
    behavior_sweep,
    contraction_sweep,
    sample_interior_diffs,
)
from monosync.integrator import _rk4, boundary_velocity_probe, step
from monosync.state import (
    ClusterState,
    ReducedState,
    _critical_raw,
    _tv_raw,
    alternating_sum,
    critical_decomposition,
    splay_state,
    to_reduced,
    tv_distance,
)

DEC = ModelParams(gamma=expfam(1, 0.1, 10), omega=1.0, n=10)
INC = ModelParams(gamma=expfam(-1, 0.1, 10), omega=1.0, n=10)


def report(num, ok, text):
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {text}")
    assert ok, f"criterion {num} failed: {text}"


def test_01_metric_oracle_equivalence():
    """tv distance equals twice the alternating extremum sum, 1e4 vectors."""
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    while checked < 10_000:
        n = int(rng.integers(1, 13))
        d = rng.uniform(-1.0, 1.0, n)
        if np.any(d == 0.0) or np.any(np.diff(d) == 0.0):
            continue  # criterion excludes exact ties
        indices, kinds = _critical_raw(d)
        signs = [1.0 if k.value == "max" else -1.0 for k in kinds]
        alt = sum(s * d[i - 1] for i, s in zip(indices, signs))
        worst = max(worst, abs(_tv_raw(d) - 2.0 * alt))
        checked += 1
    # spot-check the public API end-to-end on realized state pairs
    for _ in range(500):
        n = int(rng.integers(1, 13))
        d = rng.uniform(-1.0, 1.0, n)
        base = splay_state(n + 1).diffs
        scale = 0.05 * TWO_PI / (n + 1)
        x, y = ReducedState(base + scale * d), ReducedState(base)
        if np.array_equal(x.diffs, y.diffs):
            continue
        cs = critical_decomposition(x, y)
        worst = max(worst, abs(tv_distance(x, y) - 2.0 * alternating_sum(x, y, cs)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    report(1, ok, f"max |tv - 2*alt| = {worst:.2e} over 10500 vectors in {elapsed:.2f}s")


def test_02_splay_fixed_point():
    """The equispaced configuration is a fixed point to 1e-12 for N up to 50."""
    worst = 0.0
    for n in (2, 3, 5, 10, 50):
        for sign in (1, -1):
            p = ModelParams(gamma=expfam(sign, 0.1, n), omega=1.0, n=n)
            worst = max(worst, float(np.max(np.abs(reduced_vector_field(p, splay_state(n))))))
    ok = worst <= 1e-12
    report(2, ok, f"max splay field residual = {worst:.2e} (N in 2,3,5,10,50, both signs)")


def test_03_contraction_certificate():
    """Decreasing coupling contracts, increasing expands: 100 pairs, horizon 50."""
    t0 = time.perf_counter()
    rep_dec = contraction_sweep(DEC, 100, 50.0, seed=42, dt=1e-3)
    rep_inc = contraction_sweep(INC, 100, 50.0, seed=42, dt=1e-3)
    elapsed = time.perf_counter() - t0
    ok = (
        rep_dec.verdict == "contracting"
        and rep_inc.verdict == "expanding"
        and not rep_dec.violations
        and not rep_inc.violations
        and elapsed < 60.0
    )
    report(
        3,
        ok,
        f"verdicts ({rep_dec.verdict}, {rep_inc.verdict}), "
        f"violations ({len(rep_dec.violations)}, {len(rep_inc.violations)}), {elapsed:.1f}s",
    )


def test_04_boundary_cone_certificate():
    """Invariant synchronization cones certify the same contraction dichotomy."""
    verdicts = []
    for cone in [(1,), (5,), (3, 7)]:
        rd = contraction_sweep(DEC, 40, 10.0, seed=42, dt=1e-3, cone=cone)
        ri = contraction_sweep(INC, 40, 10.0, seed=42, dt=1e-3, cone=cone)
        verdicts.append((cone, rd.verdict, ri.verdict, len(rd.violations) + len(ri.violations)))
    ok = all(a == "contracting" and b == "expanding" and n == 0 for _, a, b, n in verdicts)
    report(4, ok, f"cones C'_1, C'_5, C'_(3,7): {[(c, a, b) for c, a, b, _ in verdicts]}")


def test_05_splay_branch():
    """Decreasing coupling: 50 trials all converge to splay, no merges."""
    rep = behavior_sweep(DEC, 50, seed=42)
    max_dev = max(t.final_splay_deviation for t in rep.trials)
    n_events = sum(t.n_events for t in rep.trials)
    ok = rep.summary == "all_splay" and max_dev < 1e-6 and n_events == 0
    report(5, ok, f"summary={rep.summary}, max splay deviation={max_dev:.2e}, events={n_events}")


def test_06_sync_branch():
    """Increasing coupling: 50 trials all fully synchronize in finite time."""
    rep = behavior_sweep(INC, 50, seed=42)
    ok = rep.summary == "all_full_sync"
    expected_v = 1.0 + 9.0 * INC.gamma.value_at_zero
    details = []
    for t in rep.trials:
        ok = ok and t.terminal_kind == "full_sync" and t.terminal_t < rep.t_end
        ok = ok and 1 <= t.n_events <= 9
        ok = ok and t.final_cluster_count == 1
        ok = ok and abs(t.final_sync_velocity - expected_v) <= 1e-10
    times = [t.terminal_t for t in rep.trials]
    events = [t.n_events for t in rep.trials]
    report(
        6,
        ok,
        f"summary={rep.summary}, sync times in [{min(times):.1f}, {max(times):.1f}], "
        f"events in [{min(events)}, {max(events)}], velocity ok",
    )


def test_07_boundary_velocities():
    """Near-boundary normal velocities match the coupling jump to 1e-3."""
    d = (1.0 - math.exp(-TWO_PI)) / 10.0
    probes = boundary_velocity_probe(DEC, 1e-4)
    expected = (d, d, -d)
    errs = [abs(p - e) for p, e in zip(probes, expected)]
    ok = max(errs) <= 1e-3
    probes_inc = boundary_velocity_probe(INC, 1e-4)
    ok = ok and [math.copysign(1, v) for v in probes_inc] == [-1, -1, 1]
    report(7, ok, f"probes={tuple(round(p, 6) for p in probes)}, target=+-{d:.6f}, max err={max(errs):.1e}")


def test_08_analytic_vs_numeric_rate():
    """Distance-rate diagnostic matches a finite-difference rate to 1e-4."""
    rng = np.random.default_rng(77)
    h = 1e-6
    worst = 0.0
    f = lambda v: _reduced_field_batch(DEC.gamma, v)
    for _ in range(100):
        x = ReducedState(sample_interior_diffs(rng, 10, 1e-4))
        y = ReducedState(sample_interior_diffs(rng, 10, 1e-4))
        dt = derivative_terms(DEC, x, y)
        xh = _rk4(f, x.diffs[None, :], h)[0]
        yh = _rk4(f, y.diffs[None, :], h)[0]
        fd = (
            tv_distance(ReducedState(np.sort(xh)), ReducedState(np.sort(yh)))
            - tv_distance(x, y)
        ) / h
        worst = max(worst, abs(dt.distance_rate - fd))
    ok = worst <= 1e-4
    report(8, ok, f"max |analytic - finite difference| = {worst:.2e} over 100 pairs")


def test_09_figure4_determinism(tmp_path):
    """Two seeded canonical runs produce byte-identical outputs."""
    from monosync.cli import main

    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(["figure4", "--seed", "42", "-o", str(out)])
        assert code == 0
        outs.append(out)
    files = sorted(p.name for p in outs[0].iterdir())
    ok = bool(files)
    for fname in files:
        ok = ok and (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
    report(9, ok, f"byte-identical outputs for seed 42: {files}")


def test_10_rk4_order():
    """One-step error ratio between dt and dt/2 is ~16 on random states."""
    rng = np.random.default_rng(5)
    dt = 0.1
    ratios = []
    for _ in range(10):
        diffs = sample_interior_diffs(rng, 10, 1e-3)
        c = ClusterState(
            reps=np.concatenate(([0.0], diffs)), mults=np.ones(10, dtype=int)
        )
        ref = c
        for _ in range(100):
            ref = step(DEC, ref, dt / 100)
        one = step(DEC, c, dt)
        two = step(DEC, step(DEC, c, dt / 2), dt / 2)
        e1 = float(np.max(np.abs(one.reps - ref.reps)))
        e2 = float(np.max(np.abs(two.reps - ref.reps)))
        ratios.append(e1 / e2)
    ok = all(12.0 <= r <= 20.0 for r in ratios)
    report(10, ok, f"error ratios in [{min(ratios):.2f}, {max(ratios):.2f}] (nominal 16)")
