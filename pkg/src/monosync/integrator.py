"""Deterministic fixed-step integration with synchronization events.

The integrator advances cluster states with classical 4-stage Runge-Kutta at
a fixed step.  The smooth flow is interrupted only by synchronization
events: when an adjacent gap between cluster representatives falls below the
merge threshold (or crosses zero within a step), the event time is located
by bisection inside the step, the touching clusters are merged at their
multiplicity-weighted circular mean, and integration resumes.  Merged
oscillators stay merged forever, so the cluster count never increases.

State is integrated as (reference phase, differences to the reference
cluster).  The differences are unaffected by the common rotation, which
keeps long runs free of the precision loss that accumulating absolute
phases would cause; absolute phases are reconstructed as reference + difference.

Everything is seedless and order-fixed: identical configurations produce
bit-identical trajectories on repeated runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .coupling import TWO_PI, jump_size
from .dynamics import ModelParams, _cluster_field_batch
from .state import (
    AbsoluteState,
    ClusterState,
    ReducedState,
    _group_cyclic,
    cluster_from_absolute,
    cluster_from_reduced,
    splay_state,
)

__all__ = [
    "NumericalDivergenceError",
    "SimConfig",
    "SyncEvent",
    "Terminal",
    "TrajectorySample",
    "Trajectory",
    "step",
    "simulate",
    "boundary_velocity_probe",
]

# Bisection on a gap terminates because near-boundary approach velocity is
# bounded below by the coupling jump; the cap guards pathological inputs.
MAX_BISECTION_ITERATIONS = 200


class NumericalDivergenceError(RuntimeError):
    """The integrated state stopped being finite."""

    def __init__(self, t: float):
        super().__init__(f"non-finite state at t={t}")
        self.t = t


@dataclass(frozen=True)
class SimConfig:
    """Simulation setup: model, initial state, step, horizon, thresholds.

    ``sync_eps`` is the gap (radians) below which two clusters merge;
    ``splay_tol`` the max deviation from the equispaced configuration below
    which the run is declared converged to splay.  Samples are recorded every
    ``record_every`` accepted steps.  Step-size guidance: dt <= 1e-2 / (N * max|coupling|).
    """

    params: ModelParams
    initial: Union[AbsoluteState, ReducedState]
    dt: float
    t_end: float
    sync_eps: float = 1e-8
    record_every: int = 100
    splay_tol: float = 1e-6

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be a positive finite step, got {self.dt}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be a positive finite horizon, got {self.t_end}")
        if self.sync_eps < 0:
            raise ValueError(f"sync_eps must be nonnegative, got {self.sync_eps}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if not (self.splay_tol > 0):
            raise ValueError(f"splay_tol must be positive, got {self.splay_tol}")


@dataclass(frozen=True)
class SyncEvent:
    """A merge of two or more clusters at time t.

    ``merged`` lists the ids of the participating clusters; a cluster's id is
    the smallest oscillator index it contains.
    """

    t: float
    merged: tuple[int, ...]
    resulting_multiplicity: int


@dataclass(frozen=True)
class Terminal:
    """How a run ended: horizon reached, full synchronization, or splay."""

    kind: str  # "horizon" | "full_sync" | "splay_converged"
    t: float

    def __post_init__(self):
        if self.kind not in ("horizon", "full_sync", "splay_converged"):
            raise ValueError(f"unknown terminal kind {self.kind!r}")


@dataclass(frozen=True)
class TrajectorySample:
    """Snapshot at time t: clusters plus the reference absolute phase."""

    t: float
    state: ClusterState
    anchor_phase: float


@dataclass(frozen=True)
class Trajectory:
    samples: tuple[TrajectorySample, ...]
    events: tuple[SyncEvent, ...]
    terminal: Terminal

    @property
    def population(self) -> int:
        return self.samples[0].state.population

    def phase_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-oscillator absolute phases, wrapped into [0, 2*pi).

        Returns (times of shape (S,), phases of shape (S, N)); column j holds
        oscillator j+1.  Requires member bookkeeping on every sample (always
        present on simulated trajectories).
        """
        times = np.array([s.t for s in self.samples])
        phases = np.empty((len(self.samples), self.population))
        for si, smp in enumerate(self.samples):
            if smp.state.members is None:
                raise ValueError("samples lack member bookkeeping")
            rel = smp.state.reps - smp.state.reps[0]
            for c, grp in enumerate(smp.state.members):
                value = math.fmod(smp.anchor_phase + rel[c], TWO_PI)
                if value < 0.0:
                    value += TWO_PI
                for osc in grp:
                    phases[si, osc - 1] = value
        return times, phases


# ---------------------------------------------------------------------------
# Runge-Kutta kernel
# ---------------------------------------------------------------------------


def _rk4(f, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + (0.5 * dt) * k1)
    k3 = f(y + (0.5 * dt) * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(p: ModelParams, c: ClusterState, dt: float) -> ClusterState:
    """One RK4 step of the cluster dynamics.

    Assumes all gaps stay positive across the step; boundary crossings are
    the caller's responsibility (see ``simulate`` for the event logic).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    mults = c.mults

    def f(reps):
        return _cluster_field_batch(
            p.gamma, p.omega, mults, (reps[1:] - reps[0])[None, :]
        )[0]

    new_reps = _rk4(f, c.reps.astype(float), dt)
    return ClusterState(reps=new_reps, mults=c.mults, members=c.members)


# ---------------------------------------------------------------------------
# Event-driven simulation
# ---------------------------------------------------------------------------


def _gap_vector(deltas: np.ndarray) -> np.ndarray:
    """Cyclic gaps between cluster positions (0, deltas...), wrap included."""
    pos = np.concatenate(([0.0], deltas))
    return np.diff(np.concatenate((pos, [pos[0] + TWO_PI])))


class _Run:
    """Mutable integration state for one simulation."""

    def __init__(self, params: ModelParams, anchor: float, clusters: ClusterState):
        self.params = params
        self.anchor = anchor + float(clusters.reps[0])
        self.deltas = np.asarray(clusters.reps[1:] - clusters.reps[0], dtype=float)
        self.mults = np.asarray(clusters.mults, dtype=int)
        self.members = list(clusters.members)
        self.t = 0.0

    @property
    def m(self) -> int:
        return self.deltas.size + 1

    def rhs(self, y: np.ndarray) -> np.ndarray:
        v = _cluster_field_batch(
            self.params.gamma, self.params.omega, self.mults, y[None, 1:]
        )[0]
        out = np.empty_like(y)
        out[0] = v[0]
        out[1:] = v[1:] - v[0]
        return out

    def state_vector(self) -> np.ndarray:
        return np.concatenate(([self.anchor], self.deltas))

    def snapshot(self) -> TrajectorySample:
        reps = np.concatenate(([0.0], self.deltas))
        return TrajectorySample(
            t=self.t,
            state=ClusterState(
                reps=reps, mults=self.mults.copy(), members=tuple(self.members)
            ),
            anchor_phase=self.anchor,
        )

    def apply(self, y: np.ndarray) -> None:
        self.anchor = float(y[0])
        self.deltas = y[1:].copy()

    def merge_pass(self, margin: float, t_event: float) -> list[SyncEvent]:
        """Merge every group of clusters whose chained gaps are <= margin.

        Repeats until all gaps clear the threshold (a merge can, in
        principle, land a new representative within the threshold of its
        neighbor).  Returns the recorded events, all stamped at t_event.
        """
        events: list[SyncEvent] = []
        while self.m > 1:
            gaps = _gap_vector(self.deltas)
            if float(gaps.min()) >= margin:
                break
            pos = np.concatenate(([0.0], self.deltas))
            groups = _group_cyclic(gaps, margin)
            new_pos: list[float] = []
            new_mults: list[int] = []
            new_members: list[tuple[int, ...]] = []
            anchor_group_idx = None
            for grp in groups:
                vals = pos[grp]
                if 0 in grp:
                    vals = np.where(vals > math.pi, vals - TWO_PI, vals)
                    anchor_group_idx = len(new_pos)
                weights = self.mults[grp].astype(float)
                merged_pos = float(np.average(vals, weights=weights))
                merged_members = tuple(
                    sorted(i for c in grp for i in self.members[c])
                )
                new_pos.append(merged_pos)
                new_mults.append(int(self.mults[grp].sum()))
                new_members.append(merged_members)
                if len(grp) > 1:
                    events.append(
                        SyncEvent(
                            t=t_event,
                            merged=tuple(
                                sorted(min(self.members[c]) for c in grp)
                            ),
                            resulting_multiplicity=int(self.mults[grp].sum()),
                        )
                    )
            # re-anchor at the group holding the old reference cluster
            shift = new_pos[anchor_group_idx]
            shifted = np.asarray(new_pos) - shift
            order = np.argsort(shifted)
            shifted = shifted[order]
            self.anchor += shift
            self.deltas = shifted[1:]
            self.mults = np.asarray([new_mults[i] for i in order], dtype=int)
            self.members = [new_members[i] for i in order]
        return events


def _locate_event(
    run: _Run, y0: np.ndarray, dt: float, sync_eps: float
) -> tuple[float, np.ndarray]:
    """Bisect inside a step for the first time the minimum gap reaches ~0.

    Terminates when the gap magnitude drops below sync_eps / 10 (or at the
    iteration cap).  Returns (tau, state at tau) with tau in (0, dt].
    """

    def min_gap_at(tau: float) -> tuple[float, np.ndarray]:
        y = _rk4(run.rhs, y0, tau)
        return float(_gap_vector(y[1:]).min()), y

    g_end, y_end = min_gap_at(dt)
    if g_end >= 0.0:
        return dt, y_end
    lo, hi = 0.0, dt
    y_best = y_end
    tau = dt
    for _ in range(MAX_BISECTION_ITERATIONS):
        if hi - lo <= dt * 1e-15:
            break
        mid = 0.5 * (lo + hi)
        g_mid, y_mid = min_gap_at(mid)
        if abs(g_mid) <= sync_eps / 10.0:
            return mid, y_mid
        if g_mid > 0.0:
            lo = mid
        else:
            hi, tau, y_best = mid, mid, y_mid
    return tau, y_best


def _initial_run(cfg: SimConfig) -> _Run:
    if isinstance(cfg.initial, AbsoluteState):
        anchor, clusters = cluster_from_absolute(cfg.initial, cfg.sync_eps)
    elif isinstance(cfg.initial, ReducedState):
        anchor, clusters = 0.0, cluster_from_reduced(cfg.initial, cfg.sync_eps)
    else:
        raise TypeError(
            f"initial state must be AbsoluteState or ReducedState, got {type(cfg.initial)!r}"
        )
    if clusters.population != cfg.params.n:
        raise ValueError(
            f"initial population {clusters.population} does not match model {cfg.params.n}"
        )
    return _Run(cfg.params, anchor, clusters)


def _event_margin(cfg: SimConfig) -> float:
    """Smallest gap the discretization can resolve before contact.

    Near the coupling jump the staged scheme can stall a closing gap at
    ~dt * jump without the endpoint ever crossing zero, so contact must be
    declared within one step's travel at the jump velocity.
    """
    try:
        jump = abs(jump_size(cfg.params.gamma))
    except ValueError:
        jump = 0.0
    if not math.isfinite(jump):
        jump = 0.0
    return max(cfg.sync_eps, cfg.dt * jump)


def simulate(cfg: SimConfig) -> Trajectory:
    """Integrate until the horizon, full synchronization, or splay convergence.

    After each step, any closing gap that falls below the merge margin (the
    larger of ``sync_eps`` and one step's travel at the coupling-jump
    velocity) or crosses zero within the step triggers a merge event at the
    bisection-located contact time; near-simultaneous contacts merge
    transitively in one pass.  Gaps that sit below the margin while opening
    (repelling boundary) are left alone.  Splay convergence is declared on
    the reduced state, and only once every cluster is a singleton.
    """
    run = _initial_run(cfg)
    margin = _event_margin(cfg)
    splay = splay_state(cfg.params.n).diffs
    samples = [run.snapshot()]
    events: list[SyncEvent] = []
    terminal: Optional[Terminal] = None
    steps_done = 0

    def check_terminal() -> Optional[Terminal]:
        if run.m == 1:
            return Terminal(kind="full_sync", t=run.t)
        if run.m == cfg.params.n:
            if float(np.max(np.abs(run.deltas - splay[: run.deltas.size]))) < cfg.splay_tol:
                return Terminal(kind="splay_converged", t=run.t)
        return None

    terminal = check_terminal()
    while terminal is None and cfg.t_end - run.t > cfg.dt * 1e-9:
        h = min(cfg.dt, cfg.t_end - run.t)
        y0 = run.state_vector()
        y1 = _rk4(run.rhs, y0, h)
        if not np.all(np.isfinite(y1)):
            raise NumericalDivergenceError(run.t + h)
        stepped_events = False
        if run.m > 1:
            gaps_before = _gap_vector(y0[1:])
            gaps_after = _gap_vector(y1[1:])
            closing = (gaps_after < margin) & (
                (gaps_after < gaps_before) | (gaps_after < cfg.sync_eps)
            )
        else:
            closing = np.zeros(0, dtype=bool)
        if closing.any():
            tau, y_event = _locate_event(run, y0, h, cfg.sync_eps)
            run.apply(y_event)
            run.t += tau
            events.extend(run.merge_pass(margin, run.t))
            stepped_events = True
        else:
            run.apply(y1)
            run.t += h
        steps_done += 1
        terminal = check_terminal()
        if terminal is None and steps_done % cfg.record_every == 0 and not stepped_events:
            samples.append(run.snapshot())
        elif terminal is None and stepped_events:
            samples.append(run.snapshot())
    if terminal is None:
        terminal = Terminal(kind="horizon", t=run.t)
    if samples[-1].t != run.t:
        samples.append(run.snapshot())
    return Trajectory(
        samples=tuple(samples), events=tuple(events), terminal=terminal
    )


# ---------------------------------------------------------------------------
# Boundary velocity probes
# ---------------------------------------------------------------------------


def boundary_velocity_probe(
    p: ModelParams, eps: float
) -> tuple[float, float, float]:
    """Measure the normal velocities next to the three kinds of cone boundary.

    Builds three interior states a distance ``eps`` from the boundary (first
    difference at eps; an interior adjacent pair at gap eps; last difference
    at 2*pi - eps) and evaluates the rotating-frame field there.  Each probe
    approximates +/- the coupling jump at 0: for a decreasing coupling the
    signature is (+, +, -), i.e. the boundary repels; for an increasing
    coupling it attracts with the mirrored signature.
    """
    from .dynamics import reduced_vector_field  # local import to avoid cycle confusion

    n = p.n
    if n < 3:
        raise ValueError("probing an interior adjacent pair needs population >= 3")
    if not (0.0 < eps < TWO_PI / (2.0 * n)):
        raise ValueError(
            f"eps must satisfy 0 < eps < pi/N to keep probe states interior, got {eps}"
        )
    base = splay_state(n).diffs

    first = base.copy()
    first[0] = eps
    pair = base.copy()
    j = (n - 1) // 2 - 1  # middle adjacent pair of differences
    center = 0.5 * (base[j] + base[j + 1])
    pair[j] = center - 0.5 * eps
    pair[j + 1] = center + 0.5 * eps
    last = base.copy()
    last[-1] = TWO_PI - eps

    for probe_diffs in (first, pair, last):
        if np.any(np.diff(np.concatenate(([0.0], probe_diffs, [TWO_PI]))) <= 0.0):
            raise ValueError(f"eps={eps} is too large to keep probe states interior")

    f_first = reduced_vector_field(p, ReducedState(first))
    f_pair = reduced_vector_field(p, ReducedState(pair))
    f_last = reduced_vector_field(p, ReducedState(last))
    return (
        float(f_first[0]),
        float(f_pair[j + 1] - f_pair[j]),
        float(f_last[-1]),
    )
