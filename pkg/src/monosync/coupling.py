"""Coupling functions for monotone phase-coupled oscillator networks.

A coupling function maps a phase offset to a coupling velocity.  The class
of functions handled here is 2*pi-periodic and strictly monotone on the open
interval (0, 2*pi).  Strict monotonicity together with periodicity forces a
jump discontinuity at offset 0: the one-sided limits at 0+ and 2*pi- differ,
while the function value at 0 and at 2*pi must coincide.

The value taken exactly at 0 is not determined by monotonicity alone.  The
default used here is the midpoint of the two one-sided limits; it can be
overridden per function.  This value only ever enters the dynamics through
pairs of exactly synchronized oscillators (cluster dynamics), where it
appears with equal weight in every member of a cluster, so the choice does
not affect relative motion inside a cluster.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

__all__ = [
    "TWO_PI",
    "NotMonotoneError",
    "MixedCurvatureError",
    "Monotonicity",
    "Curvature",
    "CouplingClass",
    "CouplingFunction",
    "make_coupling",
    "one_sided_limits",
    "classify",
    "derivative_at",
    "expfam",
    "affine",
    "tabulated",
]


class NotMonotoneError(ValueError):
    """Sampled first differences do not share one strict sign."""


class MixedCurvatureError(ValueError):
    """Sampled second differences take both signs beyond tolerance."""


class Monotonicity(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


class Curvature(str, enum.Enum):
    CONVEX = "convex"
    CONCAVE = "concave"
    AFFINE = "affine"


@dataclass(frozen=True)
class CouplingClass:
    """Monotonicity and curvature class of a coupling function."""

    monotonicity: Monotonicity
    curvature: Curvature

    @property
    def slope_sign(self) -> int:
        """+1 for increasing coupling, -1 for decreasing."""
        return 1 if self.monotonicity is Monotonicity.INCREASING else -1


@dataclass(frozen=True)
class CouplingFunction:
    """A 2*pi-periodic coupling function with a jump at offset 0.

    Attributes:
        eval_open: map from offsets in the open interval (0, 2*pi) to coupling
            values.  Must accept numpy arrays elementwise (all built-in
            families do); the simulation hot paths call it on arrays.
        value_at_zero: the single value taken at offset 0 (and, by
            periodicity, at every multiple of 2*pi).
        derivative: optional analytic derivative on (0, 2*pi).  When absent,
            diagnostics fall back to central differences (`derivative_at`).
        name: identifier used in reports and configuration round-trips.
    """

    eval_open: Callable[[np.ndarray], np.ndarray]
    value_at_zero: float
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"

    def __call__(self, x):
        """Evaluate the periodic extension at any real offset.

        Offsets that are exact multiples of 2*pi return ``value_at_zero``;
        everything else is reduced mod 2*pi and evaluated on (0, 2*pi).
        """
        arr = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("coupling function evaluated at non-finite offset")
        reduced = np.mod(arr, TWO_PI)
        # np.mod may round a tiny negative offset up to the modulus itself
        at_zero = (reduced == 0.0) | (reduced == TWO_PI)
        # substitute a dummy interior offset so eval_open never sees the jump
        safe = np.where(at_zero, math.pi, reduced)
        values = np.where(at_zero, self.value_at_zero, self.eval_open(safe))
        if arr.ndim == 0:
            return float(values)
        return values


def make_coupling(
    eval_open: Callable,
    value_at_zero: Optional[float] = None,
    derivative: Optional[Callable] = None,
    name: str = "custom",
    limit_step: float = 1e-9,
) -> CouplingFunction:
    """Build a CouplingFunction, filling in the default value at 0.

    The default is the midpoint of the two one-sided limits, approximated by
    evaluating at ``limit_step`` and ``2*pi - limit_step`` (error O(limit_step)).
    """
    if value_at_zero is None:
        lo, hi = float(eval_open(limit_step)), float(eval_open(TWO_PI - limit_step))
        value_at_zero = 0.5 * (lo + hi)
    return CouplingFunction(
        eval_open=eval_open,
        value_at_zero=float(value_at_zero),
        derivative=derivative,
        name=name,
    )


def one_sided_limits(gamma: CouplingFunction, h: float) -> tuple[float, float]:
    """Numerical stand-ins for the limits at 0+ and 2*pi-.

    Returns ``(eval_open(h), eval_open(2*pi - h))``, each an O(h)
    approximation of the corresponding one-sided limit.
    """
    if not (0.0 < h < math.pi):
        raise ValueError(f"one-sided limit step must satisfy 0 < h < pi, got {h}")
    return float(gamma.eval_open(h)), float(gamma.eval_open(TWO_PI - h))


def jump_size(gamma: CouplingFunction, h: float = 1e-9) -> float:
    """Height of the discontinuity at 0: limit at 0+ minus limit at 2*pi-."""
    lo, hi = one_sided_limits(gamma, h)
    return lo - hi


def classify(
    gamma: CouplingFunction,
    n_samples: int = 201,
    tol: Optional[float] = None,
) -> CouplingClass:
    """Classify monotonicity and curvature by dense sampling on (0, 2*pi).

    Samples on the uniform interior grid 2*pi*i/(n_samples+1), i = 1..n_samples.
    All first differences must share one strict sign, otherwise
    NotMonotoneError.  All second differences must share one weak sign within
    ``tol`` (default 1e-12 * max sampled magnitude), otherwise
    MixedCurvatureError; if every second difference is within tol of zero the
    curvature is reported as affine.
    """
    if n_samples < 3:
        raise ValueError(f"classification needs n_samples >= 3, got {n_samples}")
    grid = TWO_PI * np.arange(1, n_samples + 1) / (n_samples + 1)
    values = np.asarray(gamma.eval_open(grid), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("coupling function is not finite on the sample grid")
    d1 = np.diff(values)
    if np.all(d1 > 0):
        mono = Monotonicity.INCREASING
    elif np.all(d1 < 0):
        mono = Monotonicity.DECREASING
    else:
        raise NotMonotoneError(
            "sampled first differences change sign; coupling is not strictly monotone"
        )
    if tol is None:
        tol = 1e-12 * float(np.max(np.abs(values)))
    d2 = np.diff(d1)
    has_pos = bool(np.any(d2 > tol))
    has_neg = bool(np.any(d2 < -tol))
    if has_pos and has_neg:
        raise MixedCurvatureError(
            "sampled second differences take both signs beyond tolerance"
        )
    if has_pos:
        curv = Curvature.CONVEX
    elif has_neg:
        curv = Curvature.CONCAVE
    else:
        curv = Curvature.AFFINE
    return CouplingClass(monotonicity=mono, curvature=curv)


def derivative_at(gamma: CouplingFunction, theta: float, step: float = 1e-6) -> float:
    """Derivative on (0, 2*pi): analytic when available, else central differences.

    The finite-difference fallback requires theta, theta +/- step all inside
    the open interval (it never straddles the jump at 0).
    """
    if gamma.derivative is not None:
        return float(gamma.derivative(theta))
    if not (step < theta < TWO_PI - step):
        raise ValueError(
            f"central difference at theta={theta} would leave (0, 2*pi)"
        )
    return float(gamma.eval_open(theta + step) - gamma.eval_open(theta - step)) / (
        2.0 * step
    )


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------


def expfam(s: int, a: float, n: int) -> CouplingFunction:
    """Exponential family s*(a + exp(-theta))/n on (0, 2*pi).

    s=+1 gives a strictly decreasing convex coupling, s=-1 the increasing
    concave mirror.  The value at 0 is the exact midpoint of the one-sided
    limits, s*(2a + 1 + exp(-2*pi))/(2n).
    """
    if s not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {s}")
    if a <= 0:
        raise ValueError(f"offset parameter must be positive, got {a}")
    if n < 2:
        raise ValueError(f"population divisor must be >= 2, got {n}")
    sf, af, nf = float(s), float(a), float(n)

    def _eval(theta):
        return sf * (af + np.exp(-theta)) / nf

    def _deriv(theta):
        return -sf * np.exp(-theta) / nf

    mid = sf * (2.0 * af + 1.0 + math.exp(-TWO_PI)) / (2.0 * nf)
    return CouplingFunction(
        eval_open=_eval,
        value_at_zero=mid,
        derivative=_deriv,
        name=f"expfam{{s={s:+d}, a={a}, N={n}}}",
    )


def affine(slope: float, intercept: float) -> CouplingFunction:
    """Affine coupling slope*theta + intercept on (0, 2*pi)."""
    if slope == 0 or not math.isfinite(slope):
        raise ValueError(f"slope must be finite and nonzero, got {slope}")
    if not math.isfinite(intercept):
        raise ValueError(f"intercept must be finite, got {intercept}")

    def _eval(theta):
        return slope * np.asarray(theta, dtype=float) + intercept

    def _deriv(theta):
        return np.full_like(np.asarray(theta, dtype=float), slope)

    return CouplingFunction(
        eval_open=_eval,
        value_at_zero=slope * math.pi + intercept,
        derivative=_deriv,
        name=f"affine{{slope={slope}, intercept={intercept}}}",
    )


def tabulated(knots: Sequence[tuple[float, float]]) -> CouplingFunction:
    """Piecewise-linear coupling through (theta, value) knots inside (0, 2*pi).

    Between knots the function interpolates linearly; outside the knot range
    (but still inside (0, 2*pi)) it extrapolates the first/last segment.
    """
    pts = np.asarray(knots, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("tabulated coupling needs at least two (theta, value) knots")
    if not np.all(np.isfinite(pts)):
        raise ValueError("tabulated knots must be finite")
    t, v = pts[:, 0], pts[:, 1]
    if not np.all(np.diff(t) > 0):
        raise ValueError("tabulated knot offsets must be strictly increasing")
    if t[0] <= 0.0 or t[-1] >= TWO_PI:
        raise ValueError("tabulated knot offsets must lie strictly inside (0, 2*pi)")
    t = t.copy()
    v = v.copy()
    slope_lo = (v[1] - v[0]) / (t[1] - t[0])
    slope_hi = (v[-1] - v[-2]) / (t[-1] - t[-2])

    def _eval(theta):
        theta = np.asarray(theta, dtype=float)
        y = np.interp(theta, t, v)
        y = np.where(theta < t[0], v[0] + slope_lo * (theta - t[0]), y)
        y = np.where(theta > t[-1], v[-1] + slope_hi * (theta - t[-1]), y)
        if theta.ndim == 0:
            return float(y)
        return y

    return make_coupling(_eval, name=f"tabulated{{{len(t)} knots}}")
