"""Configuration files: a single YAML key-value tree, strictly validated.

Unknown keys are hard errors (they almost always mean a typo that would
otherwise silently fall back to a default).  Validation error messages name
the offending key with its full path, e.g. ``integrator.dt``.

A complete annotated example lives in the repository README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
import yaml

from .coupling import CouplingFunction, affine, expfam, tabulated
from .dynamics import ModelParams
from .state import AbsoluteState, ReducedState

__all__ = ["ConfigError", "RunConfig", "load_config", "build_coupling"]


class ConfigError(ValueError):
    """A configuration value is missing, unknown, or invalid."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


def _require_mapping(node: Any, key: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(key, f"expected a mapping, got {type(node).__name__}")
    return node


def _reject_unknown(node: dict, allowed: set[str], prefix: str) -> None:
    for k in node:
        if k not in allowed:
            raise ConfigError(f"{prefix}{k}", "unknown key")


def _get_number(node: dict, key: str, prefix: str, default=None, required=False):
    if key not in node:
        if required:
            raise ConfigError(f"{prefix}{key}", "missing required key")
        return default
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{prefix}{key}", f"expected a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise ConfigError(f"{prefix}{key}", "must be finite")
    return float(value)


def _get_int(node: dict, key: str, prefix: str, default=None, required=False):
    if key not in node:
        if required:
            raise ConfigError(f"{prefix}{key}", "missing required key")
        return default
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{prefix}{key}", f"expected an integer, got {value!r}")
    return int(value)


def build_coupling(node: dict, prefix: str = "model.coupling.") -> CouplingFunction:
    """Construct a built-in coupling family from its configuration mapping."""
    family = node.get("family")
    if family is None:
        raise ConfigError(f"{prefix}family", "missing required key")
    try:
        if family == "expfam":
            _reject_unknown(node, {"family", "s", "a", "N"}, prefix)
            s = _get_int(node, "s", prefix, required=True)
            a = _get_number(node, "a", prefix, required=True)
            n = _get_int(node, "N", prefix, required=True)
            return expfam(s, a, n)
        if family == "affine":
            _reject_unknown(node, {"family", "slope", "intercept"}, prefix)
            slope = _get_number(node, "slope", prefix, required=True)
            intercept = _get_number(node, "intercept", prefix, required=True)
            return affine(slope, intercept)
        if family == "tabulated":
            _reject_unknown(node, {"family", "knots"}, prefix)
            knots = node.get("knots")
            if not isinstance(knots, list):
                raise ConfigError(f"{prefix}knots", "expected a list of [theta, value] pairs")
            return tabulated([tuple(k) for k in knots])
    except ConfigError:
        raise
    except (ValueError, TypeError) as err:
        raise ConfigError(f"{prefix}family", f"invalid {family} parameters: {err}") from err
    raise ConfigError(
        f"{prefix}family", f"unknown family {family!r} (expfam, affine, tabulated)"
    )


@dataclass(frozen=True)
class RunConfig:
    """Validated form of a configuration file.

    ``raw`` holds the fully resolved tree (defaults applied) and is embedded
    in every output file as the provenance header.
    """

    params: ModelParams
    dt: float
    t_end: float
    sync_eps: float
    record_every: int
    splay_tol: float
    initial_kind: str  # "random" | "splay" | "diffs" | "phases"
    initial_seed: int
    initial_values: Optional[tuple[float, ...]]
    seed: int
    n_trials: int
    n_pairs: int
    horizon: float
    sweep_record_every: int
    cone: Optional[tuple[int, ...]]
    jobs: int
    raw: dict

    def initial_state(self):
        """Materialize the configured initial state."""
        n = self.params.n
        if self.initial_kind == "splay":
            from .state import splay_state

            return splay_state(n)
        if self.initial_kind == "random":
            from .experiments import sample_interior_diffs

            rng = np.random.default_rng(self.initial_seed)
            return ReducedState(
                sample_interior_diffs(rng, n, 10.0 * self.sync_eps)
            )
        if self.initial_kind == "diffs":
            return ReducedState(np.asarray(self.initial_values))
        return AbsoluteState(np.asarray(self.initial_values))


_TOP_KEYS = {"model", "integrator", "initial", "experiment"}
_MODEL_KEYS = {"coupling", "omega", "N"}
_INTEGRATOR_KEYS = {"dt", "t_end", "sync_eps", "record_every", "splay_tol"}
_INITIAL_KEYS = {"kind", "seed", "values"}
_EXPERIMENT_KEYS = {
    "seed",
    "n_trials",
    "n_pairs",
    "horizon",
    "record_every",
    "cone",
    "jobs",
}


def load_config(path: str) -> RunConfig:
    """Load and validate a YAML configuration file."""
    with open(path, "r") as fh:
        tree = yaml.safe_load(fh)
    if tree is None:
        tree = {}
    tree = _require_mapping(tree, "<root>")
    _reject_unknown(tree, _TOP_KEYS, "")

    model = _require_mapping(tree.get("model", {}), "model")
    _reject_unknown(model, _MODEL_KEYS, "model.")
    if "coupling" not in model:
        raise ConfigError("model.coupling", "missing required key")
    gamma = build_coupling(_require_mapping(model["coupling"], "model.coupling"))
    omega = _get_number(model, "omega", "model.", default=1.0)
    n = _get_int(model, "N", "model.", required=True)
    try:
        params = ModelParams(gamma=gamma, omega=omega, n=n)
    except ValueError as err:
        raise ConfigError("model", str(err)) from err

    integ = _require_mapping(tree.get("integrator", {}), "integrator")
    _reject_unknown(integ, _INTEGRATOR_KEYS, "integrator.")
    dt = _get_number(integ, "dt", "integrator.", default=1e-2)
    t_end = _get_number(integ, "t_end", "integrator.", default=500.0)
    sync_eps = _get_number(integ, "sync_eps", "integrator.", default=1e-8)
    record_every = _get_int(integ, "record_every", "integrator.", default=100)
    splay_tol = _get_number(integ, "splay_tol", "integrator.", default=1e-6)
    if dt <= 0:
        raise ConfigError("integrator.dt", f"must be positive, got {dt}")
    if t_end <= 0:
        raise ConfigError("integrator.t_end", f"must be positive, got {t_end}")
    if sync_eps < 0:
        raise ConfigError("integrator.sync_eps", f"must be nonnegative, got {sync_eps}")
    if record_every < 1:
        raise ConfigError("integrator.record_every", f"must be >= 1, got {record_every}")
    if splay_tol <= 0:
        raise ConfigError("integrator.splay_tol", f"must be positive, got {splay_tol}")

    initial = _require_mapping(tree.get("initial", {}), "initial")
    _reject_unknown(initial, _INITIAL_KEYS, "initial.")
    kind = initial.get("kind", "random")
    if kind not in ("random", "splay", "diffs", "phases"):
        raise ConfigError("initial.kind", f"unknown kind {kind!r}")
    initial_seed = _get_int(initial, "seed", "initial.", default=0)
    values = initial.get("values")
    if kind in ("diffs", "phases"):
        if not isinstance(values, list) or not values:
            raise ConfigError("initial.values", f"kind {kind!r} needs a list of values")
        values = tuple(float(v) for v in values)
    else:
        if values is not None:
            raise ConfigError("initial.values", f"not allowed for kind {kind!r}")
        values = None

    exp = _require_mapping(tree.get("experiment", {}), "experiment")
    _reject_unknown(exp, _EXPERIMENT_KEYS, "experiment.")
    seed = _get_int(exp, "seed", "experiment.", default=0)
    n_trials = _get_int(exp, "n_trials", "experiment.", default=50)
    n_pairs = _get_int(exp, "n_pairs", "experiment.", default=100)
    horizon = _get_number(exp, "horizon", "experiment.", default=50.0)
    sweep_record_every = _get_int(exp, "record_every", "experiment.", default=500)
    jobs = _get_int(exp, "jobs", "experiment.", default=1)
    if n_trials < 1:
        raise ConfigError("experiment.n_trials", f"must be >= 1, got {n_trials}")
    if n_pairs < 1:
        raise ConfigError("experiment.n_pairs", f"must be >= 1, got {n_pairs}")
    if horizon <= 0:
        raise ConfigError("experiment.horizon", f"must be positive, got {horizon}")
    if sweep_record_every < 1:
        raise ConfigError("experiment.record_every", f"must be >= 1, got {sweep_record_every}")
    if jobs < 1:
        raise ConfigError("experiment.jobs", f"must be >= 1, got {jobs}")
    cone = exp.get("cone")
    if cone is not None:
        if not isinstance(cone, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) for i in cone
        ):
            raise ConfigError("experiment.cone", "expected a list of constraint indices")
        cone = tuple(sorted(set(cone)))
        if any(i < 1 or i > n for i in cone):
            raise ConfigError("experiment.cone", f"indices must lie in 1..{n}")

    resolved = {
        "model": {
            "coupling": dict(model["coupling"]),
            "omega": omega,
            "N": n,
        },
        "integrator": {
            "dt": dt,
            "t_end": t_end,
            "sync_eps": sync_eps,
            "record_every": record_every,
            "splay_tol": splay_tol,
        },
        "initial": {
            "kind": kind,
            "seed": initial_seed,
            "values": list(values) if values else None,
        },
        "experiment": {
            "seed": seed,
            "n_trials": n_trials,
            "n_pairs": n_pairs,
            "horizon": horizon,
            "record_every": sweep_record_every,
            "cone": list(cone) if cone else None,
            "jobs": jobs,
        },
    }
    return RunConfig(
        params=params,
        dt=dt,
        t_end=t_end,
        sync_eps=sync_eps,
        record_every=record_every,
        splay_tol=splay_tol,
        initial_kind=kind,
        initial_seed=initial_seed,
        initial_values=values,
        seed=seed,
        n_trials=n_trials,
        n_pairs=n_pairs,
        horizon=horizon,
        sweep_record_every=sweep_record_every,
        cone=cone,
        jobs=jobs,
        raw=resolved,
    )
