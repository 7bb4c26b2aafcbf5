"""Run configuration: a versioned YAML file plus command-line overrides."""
from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigError
from .foveation import FOVEAL_RADIUS_PRESETS, GRADES, FoveationModel
from .synthesis import LAYOUTS, parse_density

CONFIG_VERSION = 1
CONFIG_ENV = "FOVENHANCE_CONFIG"

# Example file.  Threshold defaults are demo placeholders, not measurements.
EXAMPLE_CONFIG = """\
config_version: 1
gaze: [512, 512]          # pixels (x, y); omit for image centre
pixels_per_degree: 80
threshold:                # tolerable blur (px) = slope * eccentricity (deg) + intercept
  slope: 0.02
  intercept: 0.0
grade: phase_aligned      # foveated | intensity_adjusted | oriented | phase_aligned
density: 2x2              # one impulse per 1x1, 2x2 or 4x4 cell
seed: 0
depth: 6
layout: exact             # exact | paper
remeasure_phi: false
contrast:
  mode: off               # off | simple
  strength: 0.0
linearize: false
bit_depth: 8
foveal_radius: null       # degrees, or small | medium | large
"""


@dataclass
class RunConfig:
    input: str | None = None
    output: str | None = None
    mode: str = "enhance"
    gaze: tuple | None = None
    pixels_per_degree: float = 80.0
    threshold_slope: float = 0.02
    threshold_intercept: float = 0.0
    grade: str = "phase_aligned"
    density: int = 2
    seed: int = 0
    depth: int = 6
    layout: str = "exact"
    remeasure_phi: bool = False
    contrast_mode: str = "off"
    contrast_strength: float = 0.0
    linearize: bool = False
    bit_depth: int = 8
    foveal_radius: float | None = None
    report: str | None = None
    grades: list = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self) -> "RunConfig":
        if self.mode not in ("enhance", "analyze", "diagnose", "bench", "compare"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.grade not in GRADES:
            raise ConfigError(f"unknown grade {self.grade!r}; choose from {GRADES}")
        for g in self.grades:
            if g not in GRADES:
                raise ConfigError(f"unknown grade {g!r} in compare list")
        self.density = parse_density(self.density)
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}")
        if int(self.depth) != self.depth or self.depth < 3:
            raise ConfigError(f"depth must be an integer >= 3, got {self.depth}")
        self.depth = int(self.depth)
        self.seed = int(self.seed)
        if self.contrast_mode not in ("off", "simple"):
            raise ConfigError("contrast mode must be 'off' or 'simple'")
        if self.contrast_strength < 0:
            raise ConfigError("contrast strength must be >= 0")
        if self.bit_depth not in (8, 16):
            raise ConfigError("bit depth must be 8 or 16")
        if self.gaze is not None:
            if len(self.gaze) != 2:
                raise ConfigError("gaze must be (x, y)")
            self.gaze = (float(self.gaze[0]), float(self.gaze[1]))
        if isinstance(self.foveal_radius, str):
            if self.foveal_radius not in FOVEAL_RADIUS_PRESETS:
                raise ConfigError(f"foveal radius preset must be one of {sorted(FOVEAL_RADIUS_PRESETS)}")
            self.foveal_radius = FOVEAL_RADIUS_PRESETS[self.foveal_radius]
        # surface model errors at load time
        self.model((1, 1))
        return self

    def model(self, shape) -> FoveationModel:
        gaze = self.gaze if self.gaze is not None else ((shape[1] - 1) / 2.0, (shape[0] - 1) / 2.0)
        return FoveationModel(gaze=gaze, pixels_per_degree=float(self.pixels_per_degree),
                              threshold_slope=float(self.threshold_slope),
                              threshold_intercept=float(self.threshold_intercept),
                              grade=self.grade, foveal_radius=self.foveal_radius)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}
        if d["gaze"] is not None:
            d["gaze"] = list(d["gaze"])
        return d


_FLAT_KEYS = {"gaze", "pixels_per_degree", "grade", "density", "seed", "depth", "layout",
              "remeasure_phi", "linearize", "bit_depth", "foveal_radius", "input", "output",
              "report", "grades", "mode"}


def config_from_mapping(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    data = dict(data)
    version = data.pop("config_version", None)
    if version is None:
        raise ConfigError("config is missing 'config_version'")
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {version}; this build reads {CONFIG_VERSION}")
    kw = {}
    thr = data.pop("threshold", None)
    if thr is not None:
        if not isinstance(thr, dict) or set(thr) - {"slope", "intercept"}:
            raise ConfigError("threshold must be a mapping with 'slope' and/or 'intercept'")
        if "slope" in thr:
            kw["threshold_slope"] = float(thr["slope"])
        if "intercept" in thr:
            kw["threshold_intercept"] = float(thr["intercept"])
    contrast = data.pop("contrast", None)
    if contrast is not None:
        if not isinstance(contrast, dict) or set(contrast) - {"mode", "strength"}:
            raise ConfigError("contrast must be a mapping with 'mode' and/or 'strength'")
        if "mode" in contrast:
            # YAML reads a bare `off` as False
            mode = contrast["mode"]
            kw["contrast_mode"] = "off" if mode is False or mode is None else str(mode)
        if "strength" in contrast:
            kw["contrast_strength"] = float(contrast["strength"])
    unknown = set(data) - _FLAT_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw.update(data)
    try:
        return RunConfig(**kw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_config(path=None) -> RunConfig:
    """Read ``path``; fall back to ``$FOVENHANCE_CONFIG``; defaults otherwise."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {p} is not valid YAML: {exc}") from exc
    return config_from_mapping(data or {})
