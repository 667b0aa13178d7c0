"""Scenario configuration files.

A scenario is an INI-style file with four flat sections::

    [model]
    muB = 1.0
    omega = 1e-3          # ratio omega / muB
    theta = 0.7853981633974483
    k = 1e-2              # ratio k / muB
    nbar = 0
    alpha = 0
    tracer_a = 1

    [run]
    channel = thermal     # thermal | dephasing
    frame = instantaneous # diagonal | instantaneous
    duration = 4          # in units of duration_unit
    duration_unit = pi/muB  # 1/muB | pi/muB | period | decay
    sample_count = 401

    [integrator]
    method = rk4          # rk4 | rk45
    step =                # blank: automatic
    rtol = 1e-10
    atol = 1e-12

    [outputs]
    write = trajectory, bloch, magnetization
    checks = radius_monotone

Angles are radians.  ``omega`` and ``k`` are dimensionless ratios to
``muB``; every time in the file (``duration``, ``step``) is measured in
units of ``1/muB`` unless ``duration_unit`` says otherwise.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field

from .engine import IntegratorOptions, Method
from .generators import Channel
from .model import DegeneracyError, Frame, ModelParams, derived

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "OUTPUT_KINDS",
    "CHECK_KINDS",
    "DURATION_UNITS",
    "parse_config",
    "load_config",
]

OUTPUT_KINDS = ("trajectory", "bloch", "magnetization", "spectrum", "compare", "phases")
CHECK_KINDS = (
    "radius_monotone",
    "final_sz_negative",
    "berry_shift",
    "hwhm",
    "compare",
    "norm_conserved",
)
DURATION_UNITS = ("1/muB", "pi/muB", "period", "decay")

_SCHEMA = {
    "model": {"muB", "omega", "theta", "k", "nbar", "alpha", "tracer_a"},
    "run": {"channel", "frame", "duration", "duration_unit", "sample_count"},
    "integrator": {"method", "step", "rtol", "atol", "max_step"},
    "outputs": {"write", "checks"},
}
_REQUIRED = {"run": {"duration"}}


class ConfigError(ValueError):
    """Malformed or inconsistent scenario file; names the line and key when known."""


@dataclass(frozen=True)
class ScenarioConfig:
    params: ModelParams
    channel: Channel = Channel.THERMAL
    frame: Frame = Frame.DIAGONAL
    duration: float = 100.0
    sample_count: int = 1001
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    outputs: tuple = ("trajectory",)
    checks: tuple = ()
    name: str = "scenario"

    @property
    def times(self):
        import numpy as np

        return np.linspace(0.0, self.duration, self.sample_count)


def _line_of(text: str, section: str, key: str) -> int | None:
    cur = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            cur = m.group(1).strip().lower()
            continue
        if cur == section and re.match(rf"{re.escape(key)}\s*[=:]", line, flags=re.IGNORECASE):
            return i
    return None


def _where(text, section, key) -> str:
    line = _line_of(text, section, key)
    loc = f"line {line}, " if line else ""
    return f"{loc}[{section}] {key}"


def _float(text, section, key, raw) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"{_where(text, section, key)}: expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{_where(text, section, key)}: must be finite")
    return v


def _list(raw: str) -> tuple:
    return tuple(x.strip().lower() for x in re.split(r"[,\s]+", raw) if x.strip())


def parse_config(text: str, name: str = "scenario") -> ScenarioConfig:
    """Parse and validate a scenario file.

    Raises
    ------
    ConfigError
        Unknown section or key, missing required key, malformed value,
        out-of-range parameter, or a regime violation for an output that
        needs the closed forms.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None

    for section in cp.sections():
        s = section.lower()
        if s not in _SCHEMA:
            line = next(
                (i for i, raw in enumerate(text.splitlines(), 1) if raw.strip() == f"[{section}]"), None
            )
            raise ConfigError(f"line {line}: unknown section [{section}]")
        for key in cp[section]:
            if key not in _SCHEMA[s]:
                raise ConfigError(f"{_where(text, s, key)}: unknown key")
    for s, keys in _REQUIRED.items():
        for key in keys:
            if not cp.has_option(s, key):
                raise ConfigError(f"[{s}] {key}: missing required key")

    def get(section, key, default=None):
        if cp.has_option(section, key):
            v = cp.get(section, key).strip()
            return v if v != "" else default
        return default

    model = {}
    for key in ("muB", "omega", "theta", "k", "nbar", "alpha", "tracer_a"):
        raw = get("model", key)
        if raw is not None:
            model[key] = _float(text, "model", key, raw)
    muB = model.pop("muB", 1.0)
    if "omega" in model:
        model["omega"] *= muB
    if "k" in model:
        model["k"] *= muB
    try:
        params = ModelParams(muB=muB, **model)
    except ValueError as exc:
        key = str(exc).split(" ", 1)[0]
        raise ConfigError(f"{_where(text, 'model', key)}: {exc}") from None
    try:
        derived(params)
    except DegeneracyError as exc:
        raise ConfigError(f"[model]: {exc}") from None

    try:
        channel = Channel.parse(get("run", "channel", "thermal"))
    except ValueError as exc:
        raise ConfigError(f"{_where(text, 'run', 'channel')}: {exc}") from None
    try:
        frame = Frame.parse(get("run", "frame", "diagonal"))
    except ValueError as exc:
        raise ConfigError(f"{_where(text, 'run', 'frame')}: {exc}") from None
    if frame not in (Frame.DIAGONAL, Frame.INSTANTANEOUS):
        raise ConfigError(f"{_where(text, 'run', 'frame')}: runs integrate in 'diagonal' or 'instantaneous'")

    unit_raw = get("run", "duration_unit", "1/muB")
    unit = {u.lower(): u for u in DURATION_UNITS}.get(unit_raw.lower())
    if unit is None:
        raise ConfigError(f"{_where(text, 'run', 'duration_unit')}: expected one of {', '.join(DURATION_UNITS)}")
    raw_duration = get("run", "duration")
    if raw_duration is None:
        raise ConfigError(f"{_where(text, 'run', 'duration')}: empty value")
    duration = _float(text, "run", "duration", raw_duration)
    if unit == "pi/muB":
        duration *= math.pi / muB
    elif unit == "1/muB":
        duration /= muB
    elif unit == "period":
        if params.omega == 0:
            raise ConfigError(f"{_where(text, 'run', 'duration_unit')}: no drive period when omega = 0")
        duration *= params.period
    elif unit == "decay":
        if params.k == 0:
            raise ConfigError(f"{_where(text, 'run', 'duration_unit')}: no decay time when k = 0")
        rate = params.decay_rate if channel is Channel.THERMAL else params.k
        duration /= rate
    if not duration > 0:
        raise ConfigError(f"{_where(text, 'run', 'duration')}: duration must be > 0")

    raw_n = get("run", "sample_count", "1001")
    try:
        sample_count = int(raw_n)
    except ValueError:
        raise ConfigError(f"{_where(text, 'run', 'sample_count')}: expected an integer, got {raw_n!r}") from None
    if sample_count < 2:
        raise ConfigError(f"{_where(text, 'run', 'sample_count')}: need at least 2 samples")

    integ = {}
    try:
        integ["method"] = Method.parse(get("integrator", "method", "rk4"))
    except ValueError as exc:
        raise ConfigError(f"{_where(text, 'integrator', 'method')}: {exc}") from None
    for key in ("step", "rtol", "atol", "max_step"):
        raw = get("integrator", key)
        if raw is not None:
            v = _float(text, "integrator", key, raw)
            if not v > 0:
                raise ConfigError(f"{_where(text, 'integrator', key)}: must be > 0")
            integ[key] = v / muB if key in ("step", "max_step") else v
    integrator = IntegratorOptions(**integ)

    outputs = _list(get("outputs", "write", "trajectory"))
    for o in outputs:
        if o not in OUTPUT_KINDS:
            raise ConfigError(f"{_where(text, 'outputs', 'write')}: unknown output {o!r}")
    checks = _list(get("outputs", "checks", ""))
    for c in checks:
        if c not in CHECK_KINDS:
            raise ConfigError(f"{_where(text, 'outputs', 'checks')}: unknown check {c!r}")
    if "compare" in checks and "compare" not in outputs:
        outputs = outputs + ("compare",)

    spectral = "spectrum" in outputs or {"berry_shift", "hwhm"} & set(checks)
    dt = duration / (sample_count - 1)
    if spectral and dt > math.pi / (4 * muB):
        raise ConfigError(
            f"{_where(text, 'run', 'sample_count')}: spectra need dt <= pi/(4 muB) = {math.pi / (4 * muB):.4g}, "
            f"got {dt:.4g}"
        )

    # analytic outputs need the closed-form regime up front
    needs_regime = {"berry_shift", "hwhm"} & set(checks)
    if needs_regime and not (params.is_adiabatic() and params.is_weak()):
        raise ConfigError(
            f"[outputs] checks: {', '.join(sorted(needs_regime))} need omega/muB <= 0.01 and k/muB <= 0.01"
        )
    return ScenarioConfig(
        params=params,
        channel=channel,
        frame=frame,
        duration=duration,
        sample_count=sample_count,
        integrator=integrator,
        outputs=outputs,
        checks=checks,
        name=name,
    )


def load_config(path) -> ScenarioConfig:
    from pathlib import Path

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, name=path.stem)
