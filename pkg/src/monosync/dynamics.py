"""Vector fields for all-to-all monotone phase-coupled oscillator networks.

Three equivalent views of the same dynamics:

* the full N-dimensional field on absolute phases,
* the (N-1)-dimensional rotating-frame field on ordered phase differences
  (independent of the common natural frequency),
* the cluster field on representatives of synchronized groups, where the
  coupling value at offset 0 enters with the intra-cluster multiplicity.

Summation order over neighbors is fixed (ascending index) so repeated runs
produce bit-identical trajectories.  Coupling arguments are reduced into
[0, 2*pi) with a single mod; negative differences -d map to 2*pi - d.

The distance-rate diagnostic assembles, for a pair of interior states, the
time derivative of their total variation distance from the alternating
critical-extremum decomposition - the quantity whose sign certifies
contraction (decreasing coupling) or expansion (increasing coupling).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coupling import TWO_PI, CouplingClass, CouplingFunction, classify
from .state import (
    AbsoluteState,
    ClusterState,
    CriticalSet,
    ReducedState,
    cone_location,
    critical_decomposition,
)

__all__ = [
    "SynchronizedPairError",
    "ModelParams",
    "full_vector_field",
    "reduced_vector_field",
    "cluster_vector_field",
    "reduced_cluster_velocities",
    "CriticalTerm",
    "DerivativeTerms",
    "derivative_terms",
]


class SynchronizedPairError(ValueError):
    """Two phases coincide exactly; the caller must merge them into a cluster."""


@dataclass(frozen=True)
class ModelParams:
    """Network parameters: coupling function, natural frequency, population.

    Construction classifies the coupling; functions outside the admissible
    class (not strictly monotone, or of mixed curvature) are rejected there.
    """

    gamma: CouplingFunction
    omega: float
    n: int
    coupling_class: Optional[CouplingClass] = None  # filled in __post_init__

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"population must be >= 2, got {self.n}")
        if not np.isfinite(self.omega):
            raise ValueError("natural frequency must be finite")
        if self.coupling_class is None:
            object.__setattr__(self, "coupling_class", classify(self.gamma))

    @classmethod
    def unchecked(cls, gamma: CouplingFunction, omega: float, n: int) -> "ModelParams":
        """Skip coupling classification (degenerate couplings in sanity checks).

        The resulting params carry ``coupling_class=None`` and must not be fed
        to certificates that rely on the coupling sign.
        """
        params = cls.__new__(cls)
        object.__setattr__(params, "gamma", gamma)
        object.__setattr__(params, "omega", float(omega))
        object.__setattr__(params, "n", int(n))
        object.__setattr__(params, "coupling_class", None)
        if n < 2:
            raise ValueError(f"population must be >= 2, got {n}")
        return params


def _wrap_open(d: np.ndarray) -> np.ndarray:
    """Map differences in (-2*pi, 2*pi) into [0, 2*pi)."""
    return np.where(d < 0.0, d + TWO_PI, d)


def full_vector_field(p: ModelParams, s: AbsoluteState) -> np.ndarray:
    """Phase velocities of the full network: omega plus summed pairwise coupling.

    Requires pairwise-distinct phases; exact collisions must be routed
    through the cluster dynamics instead.
    """
    if s.n != p.n:
        raise ValueError(f"state has {s.n} phases, model expects {p.n}")
    d = _wrap_open(s.phases[:, None] - s.phases[None, :])
    idx = np.arange(s.n)
    off_diag = ~np.eye(s.n, dtype=bool)
    if np.any(d[off_diag] == 0.0):
        raise SynchronizedPairError(
            "two phases coincide exactly; merge them into a cluster first"
        )
    d[idx, idx] = np.pi  # dummy, zeroed below
    g = np.asarray(p.gamma.eval_open(d), dtype=float)
    g[idx, idx] = 0.0
    return p.omega + g.sum(axis=1)


def _reduced_field_batch(gamma: CouplingFunction, x: np.ndarray) -> np.ndarray:
    """Rotating-frame field for a batch of difference vectors, shape (B, n).

    No interiorness checks; callers guarantee strictly ordered interior
    states (all coupling arguments then fall in the open interval).
    """
    b, n = x.shape
    d = x[:, :, None] - x[:, None, :]
    np.add(d, TWO_PI, out=d, where=d <= 0.0)
    idx = np.arange(n)
    d[:, idx, idx] = np.pi  # dummy, zeroed below
    g = np.asarray(gamma.eval_open(d), dtype=float)
    g[:, idx, idx] = 0.0
    pair = g.sum(axis=2)
    own = np.asarray(gamma.eval_open(x), dtype=float)
    mirrored = np.asarray(gamma.eval_open(TWO_PI - x), dtype=float)
    return own + pair - mirrored.sum(axis=1, keepdims=True)


def reduced_vector_field(p: ModelParams, s: ReducedState) -> np.ndarray:
    """Velocities of the ordered phase differences, for interior states.

    Component k sums the coupling felt by oscillator k+1 minus the coupling
    felt by the reference oscillator; the common frequency cancels.  The
    equispaced splay configuration is the unique interior fixed point.
    """
    if s.population != p.n:
        raise ValueError(f"state has population {s.population}, model expects {p.n}")
    if not cone_location(s, eps=0.0).is_interior:
        raise SynchronizedPairError(
            "reduced state lies on the ordering-cone boundary; use cluster dynamics"
        )
    return _reduced_field_batch(p.gamma, s.diffs[None, :])[0]


def _cluster_field_batch(
    gamma: CouplingFunction,
    omega: float,
    mults: np.ndarray,
    deltas: np.ndarray,
) -> np.ndarray:
    """Absolute representative velocities for batches of cluster differences.

    ``deltas`` has shape (B, M-1): differences of clusters 1..M-1 relative to
    cluster 0.  Returns shape (B, M).  Intra-cluster coupling contributes
    (mult-1) times the value at offset 0.
    """
    b = deltas.shape[0]
    m = deltas.shape[1] + 1
    pos = np.concatenate((np.zeros((b, 1)), deltas), axis=1)
    d = pos[:, :, None] - pos[:, None, :]
    np.add(d, TWO_PI, out=d, where=d <= 0.0)
    idx = np.arange(m)
    d[:, idx, idx] = np.pi  # dummy, zeroed below
    g = np.asarray(gamma.eval_open(d), dtype=float)
    g[:, idx, idx] = 0.0
    # elementwise weight + last-axis sum keeps the reduction order identical
    # to the full field's, so unit multiplicities reproduce it bit-for-bit
    cross = (g * mults.astype(float)).sum(axis=2)
    return omega + (mults - 1) * gamma.value_at_zero + cross


def cluster_vector_field(p: ModelParams, c: ClusterState) -> np.ndarray:
    """Absolute velocities of cluster representatives.

    Equals the full field on the expanded configuration, with the coupling
    value at offset 0 standing in for every intra-cluster term.  With unit
    multiplicities this reproduces the full field bit-for-bit.
    """
    if c.population != p.n:
        raise ValueError(
            f"clusters hold {c.population} oscillators, model expects {p.n}"
        )
    deltas = (c.reps[1:] - c.reps[0])[None, :]
    return _cluster_field_batch(p.gamma, p.omega, c.mults, deltas)[0]


def reduced_cluster_velocities(p: ModelParams, c: ClusterState) -> np.ndarray:
    """Velocities of the expanded N-1 differences of a cluster state.

    Differences merged into the reference cluster stay zero; every other
    expanded coordinate moves with its cluster relative to cluster 0.
    Matches the rotating-frame field when all multiplicities are one.
    """
    v = cluster_vector_field(p, c)
    rel = v - v[0]
    counts = c.mults.copy()
    counts[0] -= 1
    return np.repeat(rel, counts)


# ---------------------------------------------------------------------------
# Distance-rate diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalTerm:
    """Contribution of one critical index to the distance rate.

    ``total`` is sign * (velocity difference at the index).  It regroups as
    self_term + sum(cross_terms) + sign * shared_term, where self_term is the
    direct coupling difference at the index, cross_terms collects the
    pairwise coupling differences against every other index, and the shared
    term (stored once on DerivativeTerms) is the mirrored-offset sum common
    to all critical indices.
    """

    index: int
    sign: int
    total: float
    self_term: float
    cross_terms: np.ndarray

    def __post_init__(self):
        ct = np.array(self.cross_terms, dtype=float)
        ct.flags.writeable = False
        object.__setattr__(self, "cross_terms", ct)


@dataclass(frozen=True)
class DerivativeTerms:
    """Decomposed analytic time derivative of the alternating sum.

    ``total`` is the rate of the alternating extremum sum along the two
    orbits; the total variation distance moves at twice that rate, reported
    explicitly as ``distance_rate``.  Contraction certificates rely on the
    sign of ``total`` only.
    """

    critical: CriticalSet
    terms: tuple[CriticalTerm, ...]
    shared_term: float
    total: float
    distance_rate: float


def derivative_terms(
    p: ModelParams, x: ReducedState, y: ReducedState
) -> DerivativeTerms:
    """Distance-rate decomposition for two distinct interior states.

    The rate at each critical index is the signed difference of the
    rotating-frame velocities; their sum is the derivative of the alternating
    sum wherever the critical index set is locally constant in time.
    """
    cs = critical_decomposition(x, y)
    fx = reduced_vector_field(p, x)
    fy = reduced_vector_field(p, y)
    gamma = p.gamma
    xd, yd = x.diffs, y.diffs
    # mirrored-offset sum shared by every critical index
    shared = -float(
        np.sum(gamma.eval_open(TWO_PI - xd) - gamma.eval_open(TWO_PI - yd))
    )
    terms = []
    total = 0.0
    n = x.n
    for index, sign in zip(cs.indices, cs.signs):
        k = index - 1
        t_total = sign * (fx[k] - fy[k])
        self_term = sign * float(
            gamma.eval_open(xd[k]) - gamma.eval_open(yd[k])
        )
        cross = np.zeros(n)
        others = np.arange(n) != k
        cross[others] = sign * (
            np.asarray(gamma.eval_open(_wrap_open(xd[k] - xd[others])), dtype=float)
            - np.asarray(gamma.eval_open(_wrap_open(yd[k] - yd[others])), dtype=float)
        )
        terms.append(
            CriticalTerm(
                index=index,
                sign=sign,
                total=float(t_total),
                self_term=self_term,
                cross_terms=cross,
            )
        )
        total += float(t_total)
    return DerivativeTerms(
        critical=cs,
        terms=tuple(terms),
        shared_term=shared,
        total=total,
        distance_rate=2.0 * total,
    )
