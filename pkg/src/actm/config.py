"""INI project configuration with unit-suffixed keys.

Every key is known in advance; unknown sections or keys are rejected so a
typo never silently falls back to a default. Values are converted to SI on
load.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .fem import CrossSection, Material
from .ga import GAConfig
from .geometry import CrankGeometry
from .synthesis import PositiveSpring, SynthesisConfig

__all__ = ["ConfigError", "ProjectConfig", "load_config", "default_config_text"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


_SCHEMA = {
    "geometry": {"w_mm": float, "r_mm": float},
    "spring": {"k_mnm_per_deg": float, "handle_ratio": float},
    "window": {
        "theta1_deg": float,
        "theta2_deg": float,
        "relaxed_chord_mm": "optional_float",
        "fitness_step_deg": float,
        "report_step_deg": float,
    },
    "material": {"e_gpa": float, "poisson": float, "yield_mpa": float},
    "design": {
        "box_width_mm": float,
        "box_height_mm": float,
        "thickness_mm": float,
        "search_width_mm": float,
        "n_elements": int,
        "stress_penalty": float,
        "best_design": "optional_str",
    },
    "ga": {
        "mode": str,
        "population_size": int,
        "crossover_probability": float,
        "mutation_mu": float,
        "mutation_sigma": float,
        "cull_fraction": float,
        "max_generations": int,
        "fitness_threshold": "optional_float",
        "seed": int,
        "n_jobs": int,
    },
    "output": {"out_dir": str},
}


def default_config_text():
    return resources.files("actm").joinpath("data/default.ini").read_text()


@dataclass(frozen=True)
class ProjectConfig:
    """Parsed configuration; all quantities SI."""

    synthesis: SynthesisConfig
    material: Material
    box: tuple
    thickness: float
    search_width: float
    n_elements: int
    stress_penalty: float
    fitness_step: float
    report_step: float
    ga: GAConfig
    mode: str
    n_jobs: int
    out_dir: Path
    best_design: Path = None

    @property
    def search_section(self):
        return CrossSection(self.thickness, self.search_width)

    def with_seed(self, seed):
        return replace(self, ga=replace(self.ga, rng_seed=int(seed)))

    def with_out_dir(self, out_dir):
        return replace(self, out_dir=Path(out_dir))


def _convert(section, key, raw, kind):
    raw = raw.strip()
    try:
        if kind == "optional_float":
            return float(raw) if raw else None
        if kind == "optional_str":
            return raw or None
        if kind is int:
            return int(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _read(text, source):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return parser


def load_config(path=None):
    """Parse a config file layered over the shipped defaults.

    Keys missing from ``path`` keep their default values; unknown sections or
    keys raise :class:`ConfigError`, as do values that violate a type or
    domain invariant.
    """
    values = {}
    layers = [(default_config_text(), "<default>")]
    if path is not None:
        try:
            layers.append((Path(path).read_text(), str(path)))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for text, source in layers:
        parser = _read(text, source)
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"{source}: unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
                values[(section, key)] = _convert(section, key, raw, _SCHEMA[section][key])
    v = lambda s, k: values[(s, k)]  # noqa: E731
    try:
        geometry = CrankGeometry(v("geometry", "w_mm") * 1e-3, v("geometry", "r_mm") * 1e-3)
        spring = PositiveSpring.from_mNm_per_deg(v("spring", "k_mnm_per_deg"))
        chord = v("window", "relaxed_chord_mm")
        synthesis = SynthesisConfig(
            geometry,
            spring,
            theta1=np.radians(v("window", "theta1_deg")),
            theta2=np.radians(v("window", "theta2_deg")),
            relaxed_chord=None if chord is None else chord * 1e-3,
            handle_ratio=v("spring", "handle_ratio"),
        )
        material = Material(v("material", "e_gpa") * 1e9, v("material", "poisson"), v("material", "yield_mpa") * 1e6)
        threshold = v("ga", "fitness_threshold")
        ga = GAConfig(
            population_size=v("ga", "population_size"),
            crossover_probability=v("ga", "crossover_probability"),
            mutation_mu=v("ga", "mutation_mu"),
            mutation_sigma=v("ga", "mutation_sigma"),
            cull_fraction=v("ga", "cull_fraction"),
            max_generations=v("ga", "max_generations"),
            fitness_threshold=threshold,
            rng_seed=v("ga", "seed"),
        )
        box = (v("design", "box_width_mm") * 1e-3, v("design", "box_height_mm") * 1e-3)
        section = CrossSection(v("design", "thickness_mm") * 1e-3, v("design", "search_width_mm") * 1e-3)
        if min(box) <= 0:
            raise ValueError("design box dimensions must be positive")
        if v("design", "n_elements") < 2:
            raise ValueError("n_elements must be >= 2")
        if v("ga", "mode") not in ("fem", "surrogate"):
            raise ValueError("ga mode must be 'fem' or 'surrogate'")
        for key in ("fitness_step_deg", "report_step_deg"):
            if not v("window", key) > 0:
                raise ValueError(f"{key} must be positive")
        best = v("design", "best_design")
        return ProjectConfig(
            synthesis=synthesis,
            material=material,
            box=box,
            thickness=section.in_plane_thickness,
            search_width=section.out_of_plane_width,
            n_elements=v("design", "n_elements"),
            stress_penalty=v("design", "stress_penalty"),
            fitness_step=np.radians(v("window", "fitness_step_deg")),
            report_step=np.radians(v("window", "report_step_deg")),
            ga=ga,
            mode=v("ga", "mode"),
            n_jobs=v("ga", "n_jobs"),
            out_dir=Path(v("output", "out_dir")),
            best_design=None if best is None else Path(best),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
