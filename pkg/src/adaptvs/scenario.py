"""Scenario files: one YAML mapping fully determines a trial.

Everything the loop needs lives here (environment, estimator, controller,
camera, feature layout, duration, flow source, seed) so that a run is
reproducible from the file plus at most a command-line seed override. The
schema is versioned and unknown keys are rejected with dotted paths, so a
typo fails loudly instead of silently running with a default.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .controller import ControllerConfig
from .estimator import EstimatorConfig
from .kinematics import CameraModel
from .plant import PRESET_NAMES, DisturbanceSpec, ShearSpec, preset

SCHEMA_VERSION = 1

# Off-center start used when the file does not pin one, in pixels from the
# image center.
DEFAULT_TARGET_OFFSET = (90.0, 110.0)

FLOW_SOURCES = ("synthetic", "lucas_kanade")


class ScenarioError(ValueError):
    """Invalid scenario content; the message carries the dotted field path."""


@dataclass(frozen=True)
class FeatureLayout:
    """How trackable features are scattered for the vision path.

    min_separation_px keeps blob neighborhoods from overlapping inside a
    tracking window; margin_px keeps the whole blob (and its tracking
    window) away from the frame border.
    """

    count: int = 6
    margin_px: float = 30.0
    min_separation_px: float = 24.0
    blob_sigma: float = 2.0

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.margin_px < 0 or self.min_separation_px < 0:
            raise ValueError("margins must be >= 0")
        if self.blob_sigma <= 0:
            raise ValueError("blob_sigma must be > 0")


@dataclass(frozen=True)
class Scenario:
    environment: str | DisturbanceSpec = "no_bend"
    estimator: EstimatorConfig = EstimatorConfig()
    controller: ControllerConfig = ControllerConfig()
    camera: CameraModel = CameraModel()
    features: FeatureLayout = FeatureLayout()
    initial_target_px: tuple[float, float] | None = None  # None: center + DEFAULT_TARGET_OFFSET
    duration_steps: int = 2100  # ~70 s at 30 fps
    flow_source: str = "synthetic"
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.environment, str):
            preset(self.environment)  # raises on unknown name
        if self.duration_steps <= 0:
            raise ValueError("duration_steps must be > 0")
        if self.flow_source not in FLOW_SOURCES:
            raise ValueError(f"flow_source must be one of {FLOW_SOURCES}")
        if self.initial_target_px is not None and not self.camera.in_view(
            np.asarray(self.initial_target_px, dtype=float)
        ):
            raise ValueError("initial_target_px must lie inside the image")

    @property
    def environment_name(self) -> str:
        return self.environment if isinstance(self.environment, str) else "custom"

    def disturbance(self) -> DisturbanceSpec:
        if isinstance(self.environment, str):
            return preset(self.environment).disturbance
        return self.environment

    def start_target(self) -> np.ndarray:
        if self.initial_target_px is not None:
            return np.asarray(self.initial_target_px, dtype=float)
        return self.camera.center + np.asarray(DEFAULT_TARGET_OFFSET)


def _require_mapping(value: object, path: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(f"{path}: expected a mapping, got {type(value).__name__}")
    return value


def _build(cls: type, mapping: dict, path: str):
    """Instantiate a config dataclass, rejecting unknown keys with dotted paths."""
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(mapping) - known)
    if unknown:
        listed = ", ".join(f"{path}.{k}" for k in unknown)
        raise ScenarioError(f"unknown key(s): {listed}")
    try:
        return cls(**mapping)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _parse_environment(value: object, path: str) -> str | DisturbanceSpec:
    if isinstance(value, str):
        if value not in PRESET_NAMES:
            raise ScenarioError(
                f"{path}: unknown preset {value!r}; valid: {', '.join(PRESET_NAMES)}"
            )
        return value
    fields = dict(_require_mapping(value, path))
    if "shear" in fields and fields["shear"] is not None:
        fields["shear"] = _build(ShearSpec, _require_mapping(fields["shear"], f"{path}.shear"), f"{path}.shear")
    return _build(DisturbanceSpec, fields, path)


def _parse_target(value: object, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioError(f"{path}: expected a [x, y] pair")
    try:
        return (float(value[0]), float(value[1]))
    except (TypeError, ValueError):
        raise ScenarioError(f"{path}: expected numeric pixel coordinates") from None


_TOP_LEVEL_KEYS = (
    "schema",
    "environment",
    "estimator",
    "controller",
    "camera",
    "features",
    "initial_target_px",
    "duration_steps",
    "flow_source",
    "seed",
)


def scenario_from_dict(data: dict, source: str = "scenario") -> Scenario:
    data = _require_mapping(data, source)
    unknown = sorted(set(data) - set(_TOP_LEVEL_KEYS))
    if unknown:
        raise ScenarioError(f"unknown key(s): {', '.join(unknown)}")
    if "schema" not in data:
        raise ScenarioError(f"{source}: missing required key 'schema'")
    if data["schema"] != SCHEMA_VERSION:
        raise ScenarioError(
            f"schema: unsupported version {data['schema']!r} (this build reads {SCHEMA_VERSION})"
        )

    kwargs: dict = {}
    if "environment" in data:
        kwargs["environment"] = _parse_environment(data["environment"], "environment")
    if "estimator" in data:
        kwargs["estimator"] = _build(
            EstimatorConfig, _require_mapping(data["estimator"], "estimator"), "estimator"
        )
    if "controller" in data:
        kwargs["controller"] = _build(
            ControllerConfig, _require_mapping(data["controller"], "controller"), "controller"
        )
    if "camera" in data:
        kwargs["camera"] = _build(CameraModel, _require_mapping(data["camera"], "camera"), "camera")
    if "features" in data:
        kwargs["features"] = _build(
            FeatureLayout, _require_mapping(data["features"], "features"), "features"
        )
    if "initial_target_px" in data and data["initial_target_px"] is not None:
        kwargs["initial_target_px"] = _parse_target(data["initial_target_px"], "initial_target_px")
    for key in ("duration_steps", "seed"):
        if key in data:
            if not isinstance(data[key], int) or isinstance(data[key], bool):
                raise ScenarioError(f"{key}: expected an integer")
            kwargs[key] = data[key]
    if "flow_source" in data:
        kwargs["flow_source"] = data["flow_source"]
    try:
        return Scenario(**kwargs)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not valid YAML: {exc}") from exc
    return scenario_from_dict(data if data is not None else {}, source=str(path))


def scenario_to_dict(s: Scenario) -> dict:
    """Canonical plain-data form with all defaults resolved (hash input)."""
    if isinstance(s.environment, str):
        environment: object = s.environment
    else:
        environment = dataclasses.asdict(s.environment)
    est = dataclasses.asdict(s.estimator)
    return {
        "schema": SCHEMA_VERSION,
        "environment": environment,
        "estimator": est,
        "controller": dataclasses.asdict(s.controller),
        "camera": dataclasses.asdict(s.camera),
        "features": dataclasses.asdict(s.features),
        "initial_target_px": [float(v) for v in s.start_target()],
        "duration_steps": int(s.duration_steps),
        "flow_source": s.flow_source,
        "seed": int(s.seed),
    }


def scenario_hash(s: Scenario) -> str:
    canonical = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
