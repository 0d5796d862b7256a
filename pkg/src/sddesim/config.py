"""Experiment configuration: a single JSON tree per experiment.

Configs are checked-in files; dotted-path overrides (``trajectory.dt=0.01``)
tweak them from the command line.  Every output file carries the config
hash so results remain attributable to an exact configuration.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .models import ClampedCoupling, MackeyGlass, ModelSpec, Nicholson, Rate
from .noise import JUMP_LAWS, NoiseSpec
from .solver import TrajectoryConfig
from .measure import MeasureWindow

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "validate_config",
    "apply_overrides",
    "config_hash",
    "preset_names",
    "load_preset",
]

_TOP_KEYS = {"model", "noise", "trajectory", "measure", "n_trajectories",
             "history", "outputs", "bounds"}
_MODEL_KEYS = {"gamma", "r", "tau", "feedback", "noise", "drift_mode", "a_explicit"}
_FEEDBACK_KEYS = {"variant", "p", "q"}
_MODEL_NOISE_KEYS = {"b_const", "c_bound"}
_NOISE_KEYS = {"sigma", "lambda_n", "zeta", "jump_law", "up_weight", "centered"}
_TRAJ_KEYS = {"dt", "t_end", "burn_in", "seed", "space", "record_stride", "store_forcing"}
_MEASURE_KEYS = {"start", "length", "stride", "bins", "lo", "hi"}
_HISTORY_KEYS = {"constant", "csv", "space"}
_OUTPUT_KEYS = {"dir", "artifacts"}
_BOUNDS_KEYS = {"alpha", "beta", "statistic", "horizon", "T", "R_grid",
                "n_samples", "kappa2", "q_split", "dt", "confidence"}


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def _identity(y: float) -> float:
    return y


def _check_keys(section: dict, allowed: set, where: str, diags: list) -> None:
    unknown = set(section) - allowed
    if unknown:
        diags.append(f"{where}: unknown keys {sorted(unknown)}; valid keys are "
                     f"{sorted(allowed)}")


def _rate_from(raw, where: str, diags: list):
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, dict) and set(raw) <= {"values", "breaks"}:
        try:
            return Rate(values=tuple(raw["values"]), breaks=tuple(raw.get("breaks", ())))
        except (ValueError, KeyError) as e:
            diags.append(f"{where}: {e}")
            return None
    diags.append(f"{where}: expected a number or {{values, breaks}}")
    return None


def _model_from(raw: dict, diags: list) -> Optional[ModelSpec]:
    _check_keys(raw, _MODEL_KEYS, "model", diags)
    fb_raw = raw.get("feedback", {})
    _check_keys(fb_raw, _FEEDBACK_KEYS, "model.feedback", diags)
    feedback = None
    variant = fb_raw.get("variant")
    try:
        if variant == "mackey_glass":
            feedback = MackeyGlass(p=fb_raw["p"], q=int(fb_raw.get("q", 1)))
        elif variant == "nicholson":
            feedback = Nicholson(p=fb_raw["p"])
        else:
            diags.append(f"model.feedback.variant must be 'mackey_glass' or "
                         f"'nicholson', got {variant!r}")
    except (ValueError, KeyError) as e:
        diags.append(f"model.feedback: {e}")
    mn = raw.get("noise", {"b_const": 0.0})
    _check_keys(mn, _MODEL_NOISE_KEYS, "model.noise", diags)
    if "b_const" in mn and "c_bound" in mn:
        diags.append("model.noise: give either b_const or c_bound, not both")
    if "c_bound" in mn:
        coupling = ClampedCoupling(h=_identity, bound=float(mn["c_bound"]))
    else:
        coupling = float(mn.get("b_const", 0.0))
    gamma = _rate_from(raw.get("gamma"), "model.gamma", diags)
    r = _rate_from(raw.get("r"), "model.r", diags)
    if diags or feedback is None or gamma is None or r is None:
        return None
    try:
        return ModelSpec(gamma=gamma, r=r, tau=float(raw.get("tau", 1.0)),
                         feedback=feedback, b_coupling=coupling,
                         drift_mode=raw.get("drift_mode", "ito_coupled"),
                         a_explicit=float(raw.get("a_explicit", 0.0)))
    except ValueError as e:
        diags.append(f"model: {e}")
        return None


def _noise_from(raw: dict, diags: list) -> Optional[NoiseSpec]:
    _check_keys(raw, _NOISE_KEYS, "noise", diags)
    try:
        return NoiseSpec(sigma=float(raw.get("sigma", 1.0)),
                         lambda_n=float(raw.get("lambda_n", 0.0)),
                         zeta=float(raw.get("zeta", 0.0)),
                         jump_law=raw.get("jump_law", "uniform"),
                         up_weight=float(raw.get("up_weight", 0.5)),
                         centered=raw.get("centered"))
    except ValueError as e:
        diags.append(f"noise: {e}")
        return None


def _trajectory_from(raw: dict, diags: list) -> Optional[TrajectoryConfig]:
    _check_keys(raw, _TRAJ_KEYS, "trajectory", diags)
    try:
        return TrajectoryConfig(dt=float(raw["dt"]), t_end=float(raw["t_end"]),
                                burn_in=float(raw.get("burn_in", 0.0)),
                                seed=int(raw.get("seed", 0)),
                                space=raw.get("space", "transformed"),
                                record_stride=int(raw.get("record_stride", 1)),
                                store_forcing=bool(raw.get("store_forcing", False)))
    except (ValueError, KeyError) as e:
        diags.append(f"trajectory: {e}")
        return None


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment: model + noise + grid + measurement + outputs."""

    raw: dict
    hash: str
    model: Optional[ModelSpec] = None
    noise: Optional[NoiseSpec] = None
    trajectory: Optional[TrajectoryConfig] = None
    window: Optional[MeasureWindow] = None
    bins: int = 200
    value_range: tuple[float, float] = (0.0, 2.0)
    n_trajectories: int = 1
    history_constant: Optional[float] = None
    history_csv: Optional[str] = None
    history_space: str = "transformed"
    output_dir: str = "out"
    artifacts: tuple[str, ...] = ("timeseries", "histogram", "phase")
    bounds: Optional[dict] = None

    def history_for_space(self, space: str):
        """The constant history expressed in the requested space."""
        if self.history_constant is None:
            raise ValueError("config has no constant history")
        c = self.history_constant
        if self.history_space == space:
            return c
        return math.exp(c) if space == "original" else math.log(c)


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate and assemble an ExperimentConfig; raises ConfigError."""
    diags: list[str] = []
    _check_keys(raw, _TOP_KEYS, "config", diags)

    model = _model_from(raw["model"], diags) if "model" in raw else None
    noise = _noise_from(raw.get("noise", {}), diags)
    trajectory = _trajectory_from(raw["trajectory"], diags) if "trajectory" in raw else None

    window = None
    bins, value_range = 200, (0.0, 2.0)
    if "measure" in raw:
        msec = raw["measure"]
        _check_keys(msec, _MEASURE_KEYS, "measure", diags)
        try:
            window = MeasureWindow(start=float(msec["start"]),
                                   length=float(msec["length"]),
                                   stride=int(msec.get("stride", 1)))
            bins = int(msec.get("bins", 200))
            value_range = (float(msec.get("lo", 0.0)), float(msec.get("hi", 2.0)))
        except (ValueError, KeyError) as e:
            diags.append(f"measure: {e}")

    history_constant = history_csv = None
    history_space = "transformed"
    if "history" in raw:
        hsec = raw["history"]
        _check_keys(hsec, _HISTORY_KEYS, "history", diags)
        history_space = hsec.get("space", "transformed")
        if history_space not in ("transformed", "original"):
            diags.append("history.space must be 'transformed' or 'original'")
        if "constant" in hsec:
            history_constant = float(hsec["constant"])
            if history_space == "original" and history_constant <= 0:
                diags.append("history.constant must be > 0 in original space")
        elif "csv" in hsec:
            history_csv = hsec["csv"]
        else:
            diags.append("history needs 'constant' or 'csv'")

    output_dir, artifacts = "out", ("timeseries", "histogram", "phase")
    if "outputs" in raw:
        osec = raw["outputs"]
        _check_keys(osec, _OUTPUT_KEYS, "outputs", diags)
        output_dir = osec.get("dir", "out")
        artifacts = tuple(osec.get("artifacts", artifacts))

    bounds_sec = None
    if "bounds" in raw:
        bounds_sec = raw["bounds"]
        _check_keys(bounds_sec, _BOUNDS_KEYS, "bounds", diags)
        if noise is not None and "alpha" in bounds_sec:
            activity = noise.lambda_n * noise.zeta * float(bounds_sec.get("beta", 1.0))
            if float(bounds_sec["alpha"]) <= activity:
                diags.append(
                    f"bounds.alpha = {bounds_sec['alpha']} must exceed "
                    f"lambda_n*zeta*beta = {activity} (relaxed drift condition)")

    # cross-field checks
    if model is not None and trajectory is not None:
        m = model.tau / trajectory.dt
        if abs(m - round(m)) > 1e-9 or round(m) < 1:
            diags.append(f"tau/dt must be integral (tau={model.tau}, dt={trajectory.dt})")
        elif round(m) % trajectory.record_stride != 0:
            diags.append("record_stride must divide tau/dt")
        if window is not None and window.end > trajectory.t_end + 1e-9:
            diags.append(f"measure window ends at {window.end} beyond "
                         f"t_end={trajectory.t_end}")

    n_traj = int(raw.get("n_trajectories", 1))
    if n_traj < 1:
        diags.append("n_trajectories must be >= 1")

    if diags:
        raise ConfigError(diags)
    return ExperimentConfig(raw=raw, hash=config_hash(raw), model=model, noise=noise,
                            trajectory=trajectory, window=window, bins=bins,
                            value_range=value_range, n_trajectories=n_traj,
                            history_constant=history_constant, history_csv=history_csv,
                            history_space=history_space, output_dir=output_dir,
                            artifacts=artifacts, bounds=bounds_sec)


def load_config(path: str, overrides=()) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    if overrides:
        raw = apply_overrides(raw, overrides)
    return parse_config(raw)


def validate_config(path_or_raw, overrides=()) -> list[str]:
    """All diagnostics for a config; empty on success."""
    try:
        if isinstance(path_or_raw, dict):
            raw = path_or_raw
            if overrides:
                raw = apply_overrides(raw, overrides)
            parse_config(raw)
        else:
            load_config(path_or_raw, overrides)
    except ConfigError as e:
        return e.diagnostics
    except (OSError, json.JSONDecodeError) as e:
        return [str(e)]
    return []


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply dotted-path key=value pairs; values parse as JSON, else string."""
    out = json.loads(json.dumps(raw))  # deep copy
    for item in overrides:
        if "=" not in item:
            raise ConfigError([f"override {item!r} is not of the form path=value"])
        path, _, value = item.partition("=")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = out
        keys = path.split(".")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError([f"override path {path!r} crosses a non-object"])
        node[keys[-1]] = parsed
    return out


def noise_to_raw(spec: NoiseSpec) -> dict:
    """Serialize a NoiseSpec to its configuration-section form."""
    raw = {"sigma": spec.sigma, "lambda_n": spec.lambda_n, "zeta": spec.zeta,
           "jump_law": spec.jump_law, "centered": spec.centered}
    if spec.jump_law == "two_point" and spec.up_weight != 0.5:
        raw["up_weight"] = spec.up_weight
    return raw


def model_to_raw(model: ModelSpec) -> dict:
    """Serialize a ModelSpec to its configuration-section form.

    Piecewise rates serialize as {values, breaks}; a clamped coupling
    serializes as its bound (the functional is the clamped identity).
    """
    def rate_raw(rate: Rate):
        if rate.is_constant:
            return rate.values[0]
        return {"values": list(rate.values), "breaks": list(rate.breaks)}

    fb = model.feedback
    fb_raw = ({"variant": "mackey_glass", "p": fb.p, "q": fb.q}
              if isinstance(fb, MackeyGlass) else {"variant": "nicholson", "p": fb.p})
    noise_raw = ({"c_bound": model.b_coupling.bound}
                 if isinstance(model.b_coupling, ClampedCoupling)
                 else {"b_const": float(model.b_coupling)})
    raw = {"gamma": rate_raw(model.gamma), "r": rate_raw(model.r),
           "tau": model.tau, "feedback": fb_raw, "noise": noise_raw,
           "drift_mode": model.drift_mode}
    if model.drift_mode == "explicit":
        raw["a_explicit"] = model.a_explicit
    return raw


def config_warnings(cfg: ExperimentConfig) -> list[str]:
    """Non-fatal advisories: parameter regions where a bound is vacuous."""
    warnings = []
    if cfg.bounds and "R_grid" in cfg.bounds:
        from .cli_runs import bound_fn_for

        try:
            _, fn = bound_fn_for(cfg)
        except (ValueError, KeyError):
            return warnings
        vacuous = [R for R in cfg.bounds["R_grid"] if fn(R) >= 1.0]
        if vacuous:
            warnings.append(f"bound is vacuous (>= 1) at R = {vacuous}; "
                            f"only larger R are informative")
    return warnings


def preset_names() -> list[str]:
    files = resources.files("sddesim").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_preset(name: str, overrides=()) -> ExperimentConfig:
    files = resources.files("sddesim").joinpath("presets")
    path = files.joinpath(f"{name}.json")
    if not path.is_file():
        raise ConfigError([f"unknown preset {name!r}; available: {preset_names()}"])
    raw = json.loads(path.read_text())
    if overrides:
        raw = apply_overrides(raw, overrides)
    return parse_config(raw)
