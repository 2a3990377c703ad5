"""Plain-text experiment files.

Grammar, one statement per line (UTF-8)::

    # comment (also allowed after a value)
    key = value

Keys are flat (``preset``, ``algorithm``) or dotted with a section prefix
(``game.uav_count``, ``learning.tau``, ``run.record_stride``). Values are
numbers, booleans (``true``/``false``), bare words, comma-separated lists,
or ``linspace(first, last, count)``. A key may appear only once.

``preset`` names a bundled game (see :data:`uavgame.presets.GAME_PRESETS`)
whose fields the ``game.*`` keys then override; without a preset every game
field must be given. ``game.field_angle`` is in radians; ``game.field_angle_deg``
is accepted instead. ``learning.m_factor`` sets m as a multiple of 2*Delta.
An optional ``sweep.*`` section (``axis``, ``values``, ``seeds``, ``m_unit``)
supplies defaults for the ``sweep`` command; ``m_unit = delta`` reads m values
as multiples of Delta.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .game import ConfigError, GameConfig, validate_config
from .learning import ALGORITHMS, LearnerParams, check_m_bound, delta_bound
from .presets import GAME_PRESETS

GAME_FIELDS = tuple(f.name for f in dataclasses.fields(GameConfig))
_LIST_FIELDS = {"power_levels", "altitude_levels", "turbulence", "noise_range"}
_INT_FIELDS = {"uav_count", "channel_count", "channel_capacity", "channels_per_uav"}
_LEARNING_KEYS = {"tau", "m", "m_factor", "max_iterations", "seed", "allow_unstable_m"}
_RUN_KEYS = {"record_stride", "output"}
_SWEEP_KEYS = {"axis", "values", "seeds", "m_unit"}
_TOP_KEYS = {"preset", "algorithm", "name"}
SWEEP_AXES = ("tau", "m", "uav_count")
_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")


class SpecParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class SweepPlan:
    axis: str
    values: tuple
    seeds: int = 5
    m_unit: str = "abs"

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
        if self.m_unit not in ("abs", "delta"):
            raise ValueError("m_unit must be 'abs' or 'delta'")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.seeds < 1:
            raise ValueError("sweep needs at least one seed")


@dataclass(frozen=True)
class ExperimentSpec:
    game: GameConfig
    algorithm: str
    params: LearnerParams
    record_stride: int = 1
    output: Optional[str] = None
    preset: Optional[str] = None
    name: Optional[str] = None
    sweep: Optional[SweepPlan] = None
    m_factor: Optional[float] = None

    def with_seed(self, seed: int) -> "ExperimentSpec":
        return dataclasses.replace(self, params=dataclasses.replace(self.params, seed=int(seed)))

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)

    def with_game(self, game: GameConfig) -> "ExperimentSpec":
        """Swap the game, re-deriving m when it is tied to the stability bound."""
        params = self.params
        if self.m_factor is not None:
            params = dataclasses.replace(params, m=self.m_factor * delta_bound(game).min_m)
        return dataclasses.replace(self, game=game, params=params)


def _scalar(text: str, line: int):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if re.fullmatch(r"[A-Za-z_./~][\w./~-]*", text):
        return text
    raise SpecParseError(f"cannot read value {text!r}", line)


def _value(text: str, line: int):
    m = _LINSPACE.match(text)
    if m:
        a, b, n = (_scalar(x.strip(), line) for x in m.groups())
        if not isinstance(n, int) or n < 1:
            raise SpecParseError("linspace count must be a positive integer", line)
        return tuple(np.linspace(float(a), float(b), n).tolist())
    if "," in text:
        parts = [p.strip() for p in text.split(",")]
        if any(not p for p in parts):
            raise SpecParseError("empty list element", line)
        return tuple(_scalar(p, line) for p in parts)
    return _scalar(text, line)


def parse_text(text: str) -> dict:
    """Parse the key-value grammar into ``{key: (value, line)}``."""
    entries = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise SpecParseError(f"expected 'key = value', got {body!r}", n)
        key, val = (s.strip() for s in body.split("=", 1))
        if not re.fullmatch(r"[A-Za-z_]\w*(\.[A-Za-z_]\w*)?", key):
            raise SpecParseError(f"bad key {key!r}", n)
        if not val:
            raise SpecParseError(f"missing value for {key!r}", n)
        if key in entries:
            raise SpecParseError(f"duplicate key {key!r}", n)
        entries[key] = (_value(val, n), n)
    return entries


def _game_value(field, value, line):
    if field in _LIST_FIELDS:
        seq = value if isinstance(value, tuple) else (value,)
        if any(isinstance(v, (bool, str)) or v is None for v in seq):
            raise SpecParseError(f"game.{field} needs numbers", line)
        return tuple(float(v) for v in seq)
    if isinstance(value, (tuple, str, bool)) or value is None:
        raise SpecParseError(f"game.{field} needs a single number", line)
    if field in _INT_FIELDS:
        if int(value) != value:
            raise SpecParseError(f"game.{field} must be an integer", line)
        return int(value)
    return float(value)


def spec_from_entries(entries: dict) -> ExperimentSpec:
    game_kw, learn, run, top, sweep = {}, {}, {}, {}, {}
    for key, (value, line) in entries.items():
        section, _, name = key.rpartition(".")
        if section == "game":
            if name == "field_angle_deg":
                if "game.field_angle" in entries:
                    raise SpecParseError("give field_angle or field_angle_deg, not both", line)
                game_kw["field_angle"] = math.radians(_game_value("field_angle", value, line))
            elif name in GAME_FIELDS:
                game_kw[name] = _game_value(name, value, line)
            else:
                raise SpecParseError(f"unknown key {key!r}", line)
        elif section == "learning" and name in _LEARNING_KEYS:
            learn[name] = (value, line)
        elif section == "run" and name in _RUN_KEYS:
            run[name] = (value, line)
        elif section == "sweep" and name in _SWEEP_KEYS:
            sweep[name] = (value, line)
        elif section == "" and name in _TOP_KEYS:
            top[name] = (value, line)
        else:
            raise SpecParseError(f"unknown key {key!r}", line)

    preset = top.get("preset", (None, None))[0]
    if preset is not None:
        if preset not in GAME_PRESETS:
            raise SpecParseError(f"unknown preset {preset!r}", top["preset"][1])
        game = GAME_PRESETS[preset]().replace(**game_kw) if game_kw else GAME_PRESETS[preset]()
    else:
        missing = [f for f in GAME_FIELDS if f not in game_kw]
        if missing:
            raise SpecParseError("missing required keys: " + ", ".join("game." + f for f in missing))
        game = GameConfig(**game_kw)
    validate_config(game).raise_if_failed()

    if "algorithm" not in top:
        raise SpecParseError("missing required key: algorithm")
    algorithm, aline = top["algorithm"]
    if algorithm not in ALGORITHMS:
        raise SpecParseError(f"algorithm must be one of {ALGORITHMS}", aline)
    if "tau" not in learn:
        raise SpecParseError("missing required key: learning.tau")

    def num(name, default=None, kind=float):
        if name not in learn:
            return default
        v, ln = learn[name]
        if isinstance(v, (tuple, str)) or v is None or (kind is not bool and isinstance(v, bool)):
            raise SpecParseError(f"learning.{name} has the wrong type", ln)
        if kind is int and int(v) != v:
            raise SpecParseError(f"learning.{name} must be an integer", ln)
        return kind(v)

    m = num("m")
    factor = num("m_factor")
    if m is not None and factor is not None:
        raise SpecParseError("give learning.m or learning.m_factor, not both", learn["m_factor"][1])
    if factor is not None:
        m = factor * delta_bound(game).min_m
    try:
        params = LearnerParams(tau=num("tau"), m=m, max_iterations=num("max_iterations", 1000, int),
                               seed=num("seed", 0, int),
                               allow_unstable_m=num("allow_unstable_m", False, bool))
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    if algorithm == "spblla":
        check_m_bound(game, params)

    stride = 1
    if "record_stride" in run:
        stride, ln = run["record_stride"]
        if not isinstance(stride, int) or isinstance(stride, bool) or stride < 1:
            raise SpecParseError("run.record_stride must be a positive integer", ln)
    output = run.get("output", (None, None))[0]
    if output is not None and not isinstance(output, str):
        output = str(output)
    name = top.get("name", (None, None))[0]
    return ExperimentSpec(game, algorithm, params, stride, output, preset,
                          None if name is None else str(name), _sweep_plan(sweep), factor)


def _sweep_plan(sweep: dict) -> Optional[SweepPlan]:
    if not sweep:
        return None
    if "axis" not in sweep or "values" not in sweep:
        raise SpecParseError("sweep section needs sweep.axis and sweep.values")
    values, ln = sweep["values"]
    values = values if isinstance(values, tuple) else (values,)
    if any(isinstance(v, (bool, str)) or v is None for v in values):
        raise SpecParseError("sweep.values needs numbers", ln)
    seeds = sweep.get("seeds", (5, None))[0]
    try:
        return SweepPlan(str(sweep["axis"][0]), values, int(seeds),
                         str(sweep.get("m_unit", ("abs", None))[0]))
    except (ValueError, TypeError) as exc:
        raise SpecParseError(str(exc), sweep["axis"][1]) from None


def parse_spec(text: str) -> ExperimentSpec:
    entries = parse_text(text)
    if not entries:
        raise SpecParseError("empty spec: missing required keys algorithm, learning.tau")
    return spec_from_entries(entries)


def load_spec(path) -> ExperimentSpec:
    """Read an experiment file. Raises SpecParseError or ConfigError/ParameterBoundError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise SpecParseError(f"{path}: not UTF-8 ({exc.reason})") from None
    return parse_spec(text)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def dump_spec(spec: ExperimentSpec) -> str:
    """Write every resolved field so the file alone reproduces the run."""
    lines = []
    if spec.name is not None:
        lines.append(f"name = {spec.name}")
    if spec.preset is not None:
        lines.append(f"preset = {spec.preset}")
    lines.append(f"algorithm = {spec.algorithm}")
    for f in GAME_FIELDS:
        lines.append(f"game.{f} = {_fmt(getattr(spec.game, f))}")
    p = spec.params
    lines.append(f"learning.tau = {_fmt(float(p.tau))}")
    if spec.m_factor is not None:
        lines.append(f"learning.m_factor = {_fmt(float(spec.m_factor))}  # m = {_fmt(float(p.m))}")
    elif p.m is not None:
        lines.append(f"learning.m = {_fmt(float(p.m))}")
    lines.append(f"learning.max_iterations = {int(p.max_iterations)}")
    lines.append(f"learning.seed = {int(p.seed)}")
    lines.append(f"learning.allow_unstable_m = {_fmt(bool(p.allow_unstable_m))}")
    lines.append(f"run.record_stride = {int(spec.record_stride)}")
    if spec.output is not None:
        lines.append(f"run.output = {spec.output}")
    if spec.sweep is not None:
        lines.append(f"sweep.axis = {spec.sweep.axis}")
        lines.append(f"sweep.values = {_fmt(spec.sweep.values)}")
        lines.append(f"sweep.seeds = {spec.sweep.seeds}")
        lines.append(f"sweep.m_unit = {spec.sweep.m_unit}")
    return "\n".join(lines) + "\n"
