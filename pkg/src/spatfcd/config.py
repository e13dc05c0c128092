"""Flat key=value configuration for every pipeline stage.

The file format is a plain TOML/INI-style list of `section.key = value`
lines; `#` starts a comment. Every key has a default, so an empty or missing
file is valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class CleanSettings:
    max_travel_s: int = 1800
    max_speed_mps: float = 40.0
    max_wait_s: int = 3600
    max_dist_m: float = 200.0
    approach_len_m: float = 300.0


@dataclass(frozen=True, slots=True)
class SuperposeSettings:
    min_events: int = 30


@dataclass(frozen=True, slots=True)
class CycleSettings:
    k_candidates: int = 5
    min_cycle_s: float = 30.0
    c_max_s: float = 600.0
    min_ks: float = 0.05


@dataclass(frozen=True, slots=True)
class TodSettings:
    coarse_window_s: int = 3600
    coarse_step_s: int = 900
    fine_window_s: int = 1800
    fine_step_s: int = 300
    penalty_w: float = 0.1
    c_max_s: float = 600.0
    night_start_s: int = 82800   # 23:00
    night_end_s: int = 18000     # 05:00
    cycle_diff_s: float = 2.0


@dataclass(frozen=True, slots=True)
class DurationSettings:
    alpha: float = 10.0
    grad_window: int = 3
    exclusion_w: int = 20
    min_segment: int = 5


@dataclass(frozen=True, slots=True)
class Settings:
    clean: CleanSettings = field(default_factory=CleanSettings)
    superpose: SuperposeSettings = field(default_factory=SuperposeSettings)
    cycle: CycleSettings = field(default_factory=CycleSettings)
    tod: TodSettings = field(default_factory=TodSettings)
    duration: DurationSettings = field(default_factory=DurationSettings)


def _clock(value: str) -> int:
    """Accept either plain seconds or HH:MM clock notation."""
    if ":" in value:
        hh, mm = value.split(":")
        sec = int(hh) * 3600 + int(mm) * 60
    else:
        sec = int(value)
    if not 0 <= sec < 86400:
        raise ConfigError(f"clock value out of range: {value!r}")
    return sec


# key -> (section attr, field name, parser)
_KEYS = {
    "clean.max_travel_s": ("clean", "max_travel_s", int),
    "clean.max_speed_mps": ("clean", "max_speed_mps", float),
    "clean.max_wait_s": ("clean", "max_wait_s", int),
    "clean.max_dist_m": ("clean", "max_dist_m", float),
    "clean.approach_len_m": ("clean", "approach_len_m", float),
    "superpose.min_events": ("superpose", "min_events", int),
    "cycle.k_candidates": ("cycle", "k_candidates", int),
    "cycle.min_cycle_s": ("cycle", "min_cycle_s", float),
    "cycle.c_max_s": ("cycle", "c_max_s", float),
    "cycle.min_ks": ("cycle", "min_ks", float),
    "tod.coarse_window_s": ("tod", "coarse_window_s", int),
    "tod.coarse_step_s": ("tod", "coarse_step_s", int),
    "tod.fine_window_s": ("tod", "fine_window_s", int),
    "tod.fine_step_s": ("tod", "fine_step_s", int),
    "tod.penalty_w": ("tod", "penalty_w", float),
    "tod.c_max_s": ("tod", "c_max_s", float),
    "tod.night_start": ("tod", "night_start_s", _clock),
    "tod.night_end": ("tod", "night_end_s", _clock),
    "tod.cycle_diff_s": ("tod", "cycle_diff_s", float),
    "dur.alpha": ("duration", "alpha", float),
    "dur.grad_window": ("duration", "grad_window", int),
    "dur.exclusion_W": ("duration", "exclusion_w", int),
    "dur.min_segment": ("duration", "min_segment", int),
}


def parse_settings(text: str) -> Settings:
    overrides: dict[str, dict[str, object]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        section, name, parser = _KEYS[key]
        try:
            overrides.setdefault(section, {})[name] = parser(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    settings = Settings()
    for section, values in overrides.items():
        settings = replace(settings, **{section: replace(getattr(settings, section), **values)})
    return settings


def load_settings(path=None) -> Settings:
    if path is None:
        return Settings()
    with open(path, "r", encoding="utf-8") as fh:
        return parse_settings(fh.read())
