"""State representations and the total-variation metric.

Configurations of N identical phase oscillators are handled in three forms:

* ``AbsoluteState``  - N phases on the circle.
* ``ReducedState``   - the N-1 ordered phase differences relative to a
  reference oscillator (the rotating-frame coordinates the contraction
  analysis works in).
* ``ClusterState``   - groups of exactly synchronized oscillators, each with
  one representative phase and a multiplicity.

The distance between two reduced states is the total variation of the
piecewise-linear interpolation of their componentwise difference, anchored at
zero on both ends.  Its alternating-extremum decomposition (the "critical
oscillators") is what makes the contraction diagnostics computable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coupling import TWO_PI

__all__ = [
    "AbsoluteState",
    "ReducedState",
    "ConeLocation",
    "ClusterState",
    "ExtremumKind",
    "CriticalSet",
    "EmptyDecompositionError",
    "reduce",
    "tv_distance",
    "critical_decomposition",
    "alternating_sum",
    "cone_location",
    "splay_state",
    "to_reduced",
    "cluster_from_reduced",
    "cluster_from_absolute",
]

# Below integration error at the default step, above double-precision noise.
DEFAULT_CONE_EPS = 1e-9


class EmptyDecompositionError(ValueError):
    """The two states are identical; there are no critical indices."""


def _frozen_array(obj, name: str, values: np.ndarray) -> None:
    values.flags.writeable = False
    object.__setattr__(obj, name, values)


@dataclass(frozen=True)
class AbsoluteState:
    """Phases of N oscillators, each stored in [0, 2*pi)."""

    phases: np.ndarray

    def __post_init__(self):
        phases = np.array(self.phases, dtype=float)
        if phases.ndim != 1 or phases.size < 2:
            raise ValueError("an absolute state needs at least two phases")
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        if np.any(phases < 0.0) or np.any(phases >= TWO_PI):
            raise ValueError("phases must lie in [0, 2*pi)")
        _frozen_array(self, "phases", phases)

    @property
    def n(self) -> int:
        return self.phases.size


@dataclass(frozen=True)
class ReducedState:
    """Ordered phase differences relative to the reference oscillator.

    ``diffs`` has length N-1, is ascending, and lies in [0, 2*pi].  Equal
    neighbors (or a zero first entry / 2*pi last entry) mark synchronized
    pairs, i.e. points on the boundary of the ordering cone.
    """

    diffs: np.ndarray

    def __post_init__(self):
        diffs = np.array(self.diffs, dtype=float)
        if diffs.ndim != 1 or diffs.size < 1:
            raise ValueError("a reduced state needs at least one difference")
        if not np.all(np.isfinite(diffs)):
            raise ValueError("differences must be finite")
        if np.any(diffs < 0.0) or np.any(diffs > TWO_PI):
            raise ValueError("differences must lie in [0, 2*pi]")
        if np.any(np.diff(diffs) < 0.0):
            raise ValueError("differences must be sorted ascending")
        _frozen_array(self, "diffs", diffs)

    @property
    def n(self) -> int:
        """Number of differences (population size minus one)."""
        return self.diffs.size

    @property
    def population(self) -> int:
        return self.diffs.size + 1


def reduce(s: AbsoluteState) -> ReducedState:
    """Rotate into oscillator 1's frame and sort the phase differences.

    The result is invariant under a rigid rotation of all phases and under
    any permutation of oscillators 2..N.
    """
    diffs = np.mod(s.phases[1:] - s.phases[0], TWO_PI)
    diffs.sort()
    return ReducedState(diffs)


def splay_state(n: int) -> ReducedState:
    """The equispaced configuration k*2*pi/n, k = 1..n-1."""
    if n < 2:
        raise ValueError(f"population must be >= 2, got {n}")
    return ReducedState(np.arange(1, n) * (TWO_PI / n))


# ---------------------------------------------------------------------------
# Total variation metric and its alternating-extremum decomposition
# ---------------------------------------------------------------------------


def _tv_raw(d: np.ndarray) -> float:
    """Total variation of (0, d_1, ..., d_n, 0)."""
    return float(abs(d[0]) + np.sum(np.abs(np.diff(d))) + abs(d[-1]))


def tv_distance(x: ReducedState, y: ReducedState) -> float:
    """Total variation distance between two same-dimension reduced states.

    Equals |d_1| + sum_j |d_{j+1} - d_j| + |d_n| for d = x.diffs - y.diffs:
    the total variation of the piecewise-linear path through
    (0, d_1, ..., d_n, 0).
    """
    if x.n != y.n:
        raise ValueError(f"dimension mismatch: {x.n} vs {y.n}")
    return _tv_raw(x.diffs - y.diffs)


class ExtremumKind(str, enum.Enum):
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True)
class CriticalSet:
    """Alternating local extrema of the difference sequence between two states.

    ``indices`` are 1-based positions into the difference vector; ``kinds``
    alternate between minima and maxima along the list.  The virtual boundary
    values d_0 = d_N = 0 bracket the sequence, so the first extremum is a
    minimum exactly when the difference sequence starts negative.
    """

    indices: tuple[int, ...]
    kinds: tuple[ExtremumKind, ...]

    def __post_init__(self):
        if len(self.indices) != len(self.kinds) or not self.indices:
            raise ValueError("indices and kinds must be non-empty and aligned")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("critical indices must be strictly increasing")
        if any(a == b for a, b in zip(self.kinds, self.kinds[1:])):
            raise ValueError("extremum kinds must alternate")

    @property
    def n_c(self) -> int:
        return len(self.indices)

    @property
    def first_kind(self) -> ExtremumKind:
        return self.kinds[0]

    @property
    def signs(self) -> tuple[int, ...]:
        """+1 at maxima, -1 at minima."""
        return tuple(1 if k is ExtremumKind.MAX else -1 for k in self.kinds)


def _critical_raw(d: np.ndarray) -> tuple[list[int], list[ExtremumKind]]:
    """Strict sign-change extrema of (0, d_1, ..., d_n, 0).

    Plateaus (consecutive equal values) collapse to their smallest index, so
    the decomposition stays total on tied inputs while preserving the
    factor-2 identity with the total variation.
    """
    extended = [0.0] + [float(v) for v in d] + [0.0]
    # compress runs of equal values, remembering each run's first index
    run_vals: list[float] = []
    run_idx: list[int] = []
    for i, v in enumerate(extended):
        if not run_vals or v != run_vals[-1]:
            run_vals.append(v)
            run_idx.append(i)
    indices: list[int] = []
    kinds: list[ExtremumKind] = []
    for r in range(1, len(run_vals) - 1):
        rising_in = run_vals[r] > run_vals[r - 1]
        rising_out = run_vals[r + 1] > run_vals[r]
        if rising_in and not rising_out:
            indices.append(run_idx[r])
            kinds.append(ExtremumKind.MAX)
        elif not rising_in and rising_out:
            indices.append(run_idx[r])
            kinds.append(ExtremumKind.MIN)
    return indices, kinds


def critical_decomposition(x: ReducedState, y: ReducedState) -> CriticalSet:
    """Locate the alternating extrema of x - y (the critical oscillators)."""
    if x.n != y.n:
        raise ValueError(f"dimension mismatch: {x.n} vs {y.n}")
    d = x.diffs - y.diffs
    if np.all(d == 0.0):
        raise EmptyDecompositionError("states are identical; no extrema exist")
    indices, kinds = _critical_raw(d)
    return CriticalSet(indices=tuple(indices), kinds=tuple(kinds))


def _alternating_sum_raw(d: np.ndarray, indices, signs) -> float:
    return float(sum(s * d[i - 1] for i, s in zip(indices, signs)))


def alternating_sum(x: ReducedState, y: ReducedState, cs: CriticalSet) -> float:
    """Signed sum of the difference values at the critical indices.

    Minima contribute with sign -1, maxima with +1.  For every pair of
    distinct states this equals half the total variation distance (the
    factor-2 identity the tests enforce).
    """
    expected = critical_decomposition(x, y)
    if cs != expected:
        raise ValueError("critical set is inconsistent with the two states")
    return _alternating_sum_raw(x.diffs - y.diffs, cs.indices, cs.signs)


# ---------------------------------------------------------------------------
# Ordering cone membership
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeLocation:
    """Interior/boundary location relative to the open ordering cone.

    ``active_constraints`` holds the 1-based constraint indices i with
    diff_{i-1} = diff_i (using diff_0 = 0 and diff_N = 2*pi), i.e. which
    adjacent pairs are synchronized.  Empty when interior.
    """

    kind: str
    active_constraints: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in ("interior", "boundary"):
            raise ValueError(f"unknown cone location kind {self.kind!r}")
        if (self.kind == "interior") != (not self.active_constraints):
            raise ValueError("interior states must have no active constraints")

    @property
    def is_interior(self) -> bool:
        return self.kind == "interior"


def cone_location(x: ReducedState, eps: float = DEFAULT_CONE_EPS) -> ConeLocation:
    """Classify a reduced state as interior to the ordering cone or boundary.

    Interior requires every gap of the extended sequence
    (0, diffs..., 2*pi) to exceed ``eps``.
    """
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    gaps = np.diff(np.concatenate(([0.0], x.diffs, [TWO_PI])))
    active = frozenset(int(i) + 1 for i in np.nonzero(gaps <= eps)[0])
    if active:
        return ConeLocation(kind="boundary", active_constraints=active)
    return ConeLocation(kind="interior")


# ---------------------------------------------------------------------------
# Cluster states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterState:
    """Synchronized groups: representative phases with multiplicities.

    ``reps`` is strictly increasing and spans less than one full turn, so the
    representatives are distinct on the circle.  ``mults`` are positive and
    sum to the population size.  ``members``, when present, lists the 1-based
    oscillator indices in each cluster (used for event bookkeeping and
    per-oscillator output; irrelevant to the dynamics).
    """

    reps: np.ndarray
    mults: np.ndarray
    members: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self):
        reps = np.array(self.reps, dtype=float)
        mults = np.array(self.mults, dtype=int)
        if reps.ndim != 1 or reps.size < 1 or mults.shape != reps.shape:
            raise ValueError("reps and mults must be matching 1-d sequences")
        if not np.all(np.isfinite(reps)):
            raise ValueError("representative phases must be finite")
        if np.any(np.diff(reps) <= 0.0):
            raise ValueError("representative phases must be strictly increasing")
        if reps[-1] - reps[0] >= TWO_PI:
            raise ValueError("representatives must span less than one full turn")
        if np.any(mults < 1):
            raise ValueError("multiplicities must be positive")
        _frozen_array(self, "reps", reps)
        _frozen_array(self, "mults", mults)
        if self.members is not None:
            members = tuple(tuple(sorted(int(i) for i in grp)) for grp in self.members)
            if len(members) != reps.size:
                raise ValueError("members must align with reps")
            if any(len(grp) != m for grp, m in zip(members, mults)):
                raise ValueError("member group sizes must match multiplicities")
            flat = [i for grp in members for i in grp]
            if sorted(flat) != list(range(1, len(flat) + 1)):
                raise ValueError("members must partition 1..N")
            object.__setattr__(self, "members", members)

    @property
    def m(self) -> int:
        """Number of clusters."""
        return self.reps.size

    @property
    def population(self) -> int:
        return int(self.mults.sum())


def to_reduced(c: ClusterState) -> ReducedState:
    """Expand a cluster state to the N-1 differences relative to cluster 0.

    Cluster 0 is the reference (it contains the reference oscillator), so it
    contributes mult-1 zero differences; every other cluster contributes its
    difference repeated per multiplicity.
    """
    deltas = c.reps - c.reps[0]
    counts = c.mults.copy()
    counts[0] -= 1
    return ReducedState(np.repeat(deltas, counts))


def _group_cyclic(gaps: np.ndarray, merge_eps: float) -> list[list[int]]:
    """Partition cluster positions 0..M-1 by chaining cyclic gaps <= merge_eps.

    gaps[i] separates position i from position i+1 (mod M); the last gap is
    the wrap-around gap through 2*pi.
    """
    m = gaps.size
    groups: list[list[int]] = []
    pos = 0
    while pos < m:
        grp = [pos]
        while pos < m - 1 and gaps[pos] <= merge_eps:
            pos += 1
            grp.append(pos)
        groups.append(grp)
        pos += 1
    # wrap gap merges the last group into the first
    if len(groups) > 1 and gaps[m - 1] <= merge_eps:
        groups[0] = groups.pop() + groups[0]
    return groups


def cluster_from_reduced(
    x: ReducedState, merge_eps: float = 0.0
) -> ClusterState:
    """Group a reduced state into clusters, merging gaps <= merge_eps.

    Oscillators are labeled 1..N with 1 the reference; difference j belongs
    to oscillator j+1.  Differences within merge_eps of 0 or of 2*pi join the
    reference cluster.  Cluster 0 of the result is the reference cluster,
    re-anchored at phase 0.
    """
    n = x.population
    positions = np.concatenate(([0.0], x.diffs))  # position of oscillator j+1
    gaps = np.diff(np.concatenate((positions, [TWO_PI])))
    groups = _group_cyclic(gaps, merge_eps)
    members = []
    reps = []
    for grp in groups:
        vals = positions[grp]
        # unwrap members that joined the reference cluster through 2*pi
        if 0 in grp:
            vals = np.where(vals > math.pi, vals - TWO_PI, vals)
        members.append(tuple(int(i) + 1 for i in grp))
        reps.append(float(np.mean(vals)))
    anchor = next(i for i, grp in enumerate(groups) if 0 in grp)
    shift = reps[anchor]
    reps = [r - shift for r in reps]
    order = np.argsort(reps)
    return ClusterState(
        reps=np.asarray(reps)[order],
        mults=np.asarray([len(groups[i]) for i in order]),
        members=tuple(members[i] for i in order),
    )


def cluster_from_absolute(
    s: AbsoluteState, merge_eps: float = 0.0
) -> tuple[float, ClusterState]:
    """Cluster an absolute state; returns (reference phase, clusters).

    Member labels are the original 1-based oscillator indices; oscillator 1
    anchors the reference cluster.  The reference phase is oscillator 1's
    absolute phase, so absolute configurations are reconstructible as
    reference + cluster differences.
    """
    diffs = np.mod(s.phases[1:] - s.phases[0], TWO_PI)
    order = np.argsort(diffs, kind="stable")
    reduced = ReducedState(diffs[order])
    clustered = cluster_from_reduced(reduced, merge_eps)
    # remap sorted labels 2..N back to the original oscillator indices
    relabel = {1: 1}
    for sorted_pos, orig in enumerate(order):
        relabel[sorted_pos + 2] = int(orig) + 2
    members = tuple(
        tuple(sorted(relabel[i] for i in grp)) for grp in clustered.members
    )
    return float(s.phases[0]), ClusterState(
        reps=clustered.reps, mults=clustered.mults, members=members
    )
