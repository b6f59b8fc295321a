"""Run configuration: a TOML file with one section per pipeline stage.

Sections and keys (all optional; omitted keys keep their defaults)::

    [providers]
    detections = "detections.jsonl"   # detection JSONL path
    landmarks = "landmarks.jsonl"     # landmark JSONL path

    [weights]
    path = "weights.txt"              # trained weights file, or inline:
    w_r = -0.07572891
    w_e = 0.59910001
    w_s = -0.86601255
    c = -0.02311644

    [gaze]
    tau_r_deg = 10.0

    [scoring]
    aggregation = "poi"               # min | avg | poi

    [blur]
    kernel_size = 25
    sigma = 30.0

    [augment]
    rotation_deg = [0.0, 90.0]
    brightness = [0.2, 1.0]
    scale = [0.5, 1.0]
    translate_x = [-0.2, 0.3]
    translate_y = [-0.1, 0.3]
    flip_horizontal = true
    flip_vertical = true
    per_image = 10

    [run]
    seed = 0
    out_dir = "out"
    workers = 1
    emit_annotated = false

Unknown sections or keys are rejected so typos surface immediately.
Command-line flags override anything set here.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib

from .anonymize import BlurParams
from .augment import AugmentationRanges
from .awareness import DEFAULT_WEIGHTS, GazeConfig
from .awareness import load_weights as _load_weights_file
from .records import AwarenessWeights


class ConfigError(ValueError):
    """A configuration file is malformed or references missing files."""


@dataclass(frozen=True)
class PipelineConfig:
    detections_path: Optional[Path] = None
    landmarks_path: Optional[Path] = None
    weights: AwarenessWeights = DEFAULT_WEIGHTS
    gaze: GazeConfig = field(default_factory=GazeConfig)
    aggregation: str = "poi"
    blur: BlurParams = field(default_factory=BlurParams)
    ranges: AugmentationRanges = field(default_factory=AugmentationRanges)
    per_image: int = 10
    seed: int = 0
    out_dir: Path = Path("out")
    workers: int = 1
    emit_annotated: bool = False

    def __post_init__(self):
        if self.aggregation not in ("min", "avg", "poi"):
            raise ConfigError(
                f"aggregation must be min, avg, or poi, got {self.aggregation!r}"
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.per_image < 0:
            raise ConfigError(f"per_image must be >= 0, got {self.per_image}")


def _reject_unknown(section: str, table: dict, allowed: set[str]) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")


def _pair(section: str, key: str, value) -> tuple[float, float]:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigError(f"[{section}] {key} must be a [low, high] pair, got {value!r}")
    return (float(value[0]), float(value[1]))


def _existing_path(section: str, key: str, value, base: Path) -> Path:
    if not isinstance(value, str):
        raise ConfigError(f"[{section}] {key} must be a path string, got {value!r}")
    path = Path(value)
    if not path.is_absolute():
        path = base / path
    if not path.is_file():
        raise ConfigError(f"[{section}] {key}: no such file: {path}")
    return path


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a TOML config file into a PipelineConfig.

    Relative paths inside the file resolve against the file's directory.
    """
    path = Path(path)
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    base = path.parent
    _reject_unknown(
        "top level",
        data,
        {"providers", "weights", "gaze", "scoring", "blur", "augment", "run"},
    )
    for section, table in data.items():
        if not isinstance(table, dict):
            raise ConfigError(f"{section!r} must be a [section], got {table!r}")

    kwargs: dict = {}

    providers = data.get("providers", {})
    _reject_unknown("providers", providers, {"detections", "landmarks"})
    if "detections" in providers:
        kwargs["detections_path"] = _existing_path(
            "providers", "detections", providers["detections"], base
        )
    if "landmarks" in providers:
        kwargs["landmarks_path"] = _existing_path(
            "providers", "landmarks", providers["landmarks"], base
        )

    weights_table = data.get("weights", {})
    _reject_unknown("weights", weights_table, {"path", "w_r", "w_e", "w_s", "c"})
    inline_keys = {"w_r", "w_e", "w_s", "c"} & weights_table.keys()
    file_tau: Optional[float] = None
    if "path" in weights_table:
        if inline_keys:
            raise ConfigError(
                "[weights] path and inline weight keys are mutually exclusive"
            )
        weights_path = _existing_path("weights", "path", weights_table["path"], base)
        try:
            weights, file_gaze = _load_weights_file(weights_path)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        kwargs["weights"] = weights
        file_tau = file_gaze.tau_r_deg
    elif inline_keys:
        missing = {"w_r", "w_e", "w_s", "c"} - inline_keys
        if missing:
            raise ConfigError(f"[weights] missing key(s): {sorted(missing)}")
        try:
            kwargs["weights"] = AwarenessWeights(
                w_r=float(weights_table["w_r"]),
                w_e=float(weights_table["w_e"]),
                w_s=float(weights_table["w_s"]),
                bias_c=float(weights_table["c"]),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[weights]: {exc}") from exc

    gaze_table = data.get("gaze", {})
    _reject_unknown("gaze", gaze_table, {"tau_r_deg"})
    # an explicit [gaze] section wins over a tolerance from the weights file
    tau = gaze_table.get("tau_r_deg", file_tau)
    if tau is not None:
        try:
            kwargs["gaze"] = GazeConfig(tau_r_deg=float(tau))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[gaze]: {exc}") from exc

    scoring = data.get("scoring", {})
    _reject_unknown("scoring", scoring, {"aggregation"})
    if "aggregation" in scoring:
        kwargs["aggregation"] = scoring["aggregation"]

    blur_table = data.get("blur", {})
    _reject_unknown("blur", blur_table, {"kernel_size", "sigma"})
    if blur_table:
        try:
            kwargs["blur"] = BlurParams(
                kernel_size=int(blur_table.get("kernel_size", 25)),
                sigma=float(blur_table.get("sigma", 30.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[blur]: {exc}") from exc

    augment_table = dict(data.get("augment", {}))
    _reject_unknown(
        "augment",
        augment_table,
        {
            "rotation_deg",
            "brightness",
            "scale",
            "translate_x",
            "translate_y",
            "flip_horizontal",
            "flip_vertical",
            "per_image",
        },
    )
    if "per_image" in augment_table:
        per_image = augment_table.pop("per_image")
        if not isinstance(per_image, int) or isinstance(per_image, bool):
            raise ConfigError(f"[augment] per_image must be an integer, got {per_image!r}")
        kwargs["per_image"] = per_image
    if augment_table:
        range_kwargs: dict = {}
        for key in ("rotation_deg", "brightness", "scale", "translate_x", "translate_y"):
            if key in augment_table:
                range_kwargs[key] = _pair("augment", key, augment_table[key])
        for key in ("flip_horizontal", "flip_vertical"):
            if key in augment_table:
                if not isinstance(augment_table[key], bool):
                    raise ConfigError(
                        f"[augment] {key} must be true or false, got {augment_table[key]!r}"
                    )
                range_kwargs[key] = augment_table[key]
        try:
            kwargs["ranges"] = AugmentationRanges(**range_kwargs)
        except ValueError as exc:
            raise ConfigError(f"[augment]: {exc}") from exc

    run_table = data.get("run", {})
    _reject_unknown("run", run_table, {"seed", "out_dir", "workers", "emit_annotated"})
    if "seed" in run_table:
        if not isinstance(run_table["seed"], int) or isinstance(run_table["seed"], bool):
            raise ConfigError(f"[run] seed must be an integer, got {run_table['seed']!r}")
        kwargs["seed"] = run_table["seed"]
    if "out_dir" in run_table:
        if not isinstance(run_table["out_dir"], str):
            raise ConfigError("[run] out_dir must be a path string")
        out_dir = Path(run_table["out_dir"])
        kwargs["out_dir"] = out_dir if out_dir.is_absolute() else base / out_dir
    if "workers" in run_table:
        if not isinstance(run_table["workers"], int) or isinstance(run_table["workers"], bool):
            raise ConfigError(f"[run] workers must be an integer, got {run_table['workers']!r}")
        kwargs["workers"] = run_table["workers"]
    if "emit_annotated" in run_table:
        if not isinstance(run_table["emit_annotated"], bool):
            raise ConfigError("[run] emit_annotated must be true or false")
        kwargs["emit_annotated"] = run_table["emit_annotated"]

    try:
        return PipelineConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
