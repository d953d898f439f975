"""Run configuration: a flat text file of dotted ``section.key = value`` lines.

The file is a TOML subset (dotted keys, no tables required)::

    grid.n = 256
    params.beta = -1.0
    ic.kind = "gaussian"
    ic.amp = 0.1
    stepper.method = "rk4"
    rhs = "direct"

Unknown keys are rejected. ``dumps`` writes every field so that
``loads(dumps(cfg)) == cfg``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .ics import IC_KINDS, Gaussian
from .model import ModelParams
from .spectral import Grid
from .timestep import Method, RhsChoice, StepperConfig


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None,
                 path: str | None = None):
        self.key, self.line, self.path = key, line, path
        super().__init__(message)

    def diagnostic(self) -> str:
        where = self.path or "<config>"
        if self.line is not None:
            where += f":{self.line}"
        key = f" {self.key}:" if self.key else ""
        return f"{where}:{key} {self}"


@dataclass(frozen=True)
class GridConfig:
    length: float = 2 * math.pi
    n: int = 256

    def build(self) -> Grid:
        return Grid(self.length, self.n)


@dataclass(frozen=True)
class OutputConfig:
    out_dir: str = "out"
    write_snapshots: bool = False
    monitor_s: float = 2.0


@dataclass(frozen=True)
class HarnessConfig:
    s_values: tuple[float, ...] = (1.6, 2.0)
    radius: float = 1.0
    radii: tuple[float, ...] = (0.5, 1.0, 2.0)
    n_samples: int = 200
    seed: int = 42
    margin: float = 0.6
    accretivity_pairs: int = 100
    xi_max: float = 1e4
    inequality_samples: int = 100_000
    continuity_deltas: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    continuity_T: float = 1.0


@dataclass(frozen=True)
class ConvergenceConfig:
    dts: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3)
    t_end: float = 1.0
    n_coarse: int = 256
    n_fine: int = 1024
    dt_space: float = 1e-3


@dataclass(frozen=True)
class BreakingConfig:
    amps: tuple[float, ...] = (0.1, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    params: ModelParams = field(default_factory=ModelParams)
    ic: object = field(default_factory=Gaussian)
    stepper: StepperConfig = field(default_factory=StepperConfig)
    rhs: RhsChoice = RhsChoice.DIRECT
    outputs: OutputConfig = field(default_factory=OutputConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    breaking: BreakingConfig = field(default_factory=BreakingConfig)

    def digest(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()


_SECTIONS = {
    "grid": GridConfig, "params": ModelParams, "stepper": StepperConfig,
    "outputs": OutputConfig, "harness": HarnessConfig,
    "convergence": ConvergenceConfig, "breaking": BreakingConfig,
}


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(r"^\s*" + re.escape(key).replace(r"\.", r"\s*\.\s*") + r"\s*=")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return i
    return None


def _coerce(value, ftype: str, key: str):
    t = ftype.replace(" ", "")
    if t.startswith("tuple"):
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {value!r}", key)
        return tuple(float(_coerce(v, "float", key)) for v in value)
    if t == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", key)
        return value
    if t == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key)
        return value
    if t in ("float", "float|None"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key)
        return float(value)
    if t == "Method":
        try:
            return Method(value)
        except ValueError:
            raise ConfigError(f"unknown method {value!r}; use 'rk4' or 'adaptive'", key)
    if t == "str":
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key)
        return value
    raise TypeError(f"unhandled field type {ftype} for {key}")


def _build(cls, section: str, items: dict, text: str):
    kwargs = {}
    known = {f.name: f for f in fields(cls) if f.init}
    for k, v in items.items():
        key = f"{section}.{k}"
        if k not in known:
            raise ConfigError("unknown key", key, _line_of(text, key))
        try:
            kwargs[k] = _coerce(v, str(known[k].type), key)
        except ConfigError as err:
            err.line = _line_of(text, key)
            raise
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as err:
        msg = str(err)
        hits = [(m.start(), name) for name in known
                for m in [re.search(rf"\b{re.escape(name)}\b", msg)] if m]
        name = min(hits)[1] if hits else None
        key = f"{section}.{name}" if name else section
        raise ConfigError(msg, key, _line_of(text, key) if name else None) from None


def loads(text: str, path: str | None = None) -> RunConfig:
    try:
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as err:
            m = re.search(r"line (\d+)", str(err))
            raise ConfigError(f"syntax error: {err}", None, int(m.group(1)) if m else None)
        flat = _flatten(raw)
        grouped: dict[str, dict] = {}
        for key, value in flat.items():
            if "." not in key:
                if key != "rhs":
                    raise ConfigError("unknown key", key, _line_of(text, key))
                continue
            section, rest = key.split(".", 1)
            if section not in _SECTIONS and section != "ic":
                raise ConfigError("unknown section", key, _line_of(text, key))
            grouped.setdefault(section, {})[rest] = value

        parts = {name: _build(cls, name, grouped.get(name, {}), text)
                 for name, cls in _SECTIONS.items()}

        ic_items = dict(grouped.get("ic", {}))
        kind = ic_items.pop("kind", "gaussian")
        if kind not in IC_KINDS:
            raise ConfigError(f"unknown initial condition {kind!r}; choose from "
                              f"{sorted(IC_KINDS)}", "ic.kind", _line_of(text, "ic.kind"))
        ic = _build(IC_KINDS[kind], "ic", ic_items, text)

        rhs_raw = flat.get("rhs", RhsChoice.DIRECT.value)
        try:
            rhs = RhsChoice(rhs_raw)
        except ValueError:
            raise ConfigError(f"unknown rhs {rhs_raw!r}; choose from "
                              f"{[c.value for c in RhsChoice]}", "rhs", _line_of(text, "rhs"))

        try:
            grid = parts["grid"].build()
        except ValueError as err:
            raise ConfigError(str(err), "grid.n", _line_of(text, "grid.n"))
        if hasattr(ic, "mode"):
            try:
                ic.mode(grid)
            except ValueError as err:
                raise ConfigError(str(err), "ic.k", _line_of(text, "ic.k"))
        if hasattr(ic, "amp") and not math.isfinite(ic.amp):
            raise ConfigError("amplitude must be finite", "ic.amp", _line_of(text, "ic.amp"))
        if parts["harness"].n_samples < 2:
            raise ConfigError("n_samples must be >= 2", "harness.n_samples",
                              _line_of(text, "harness.n_samples"))
        return RunConfig(ic=ic, rhs=rhs, **parts)
    except ConfigError as err:
        err.path = path
        raise


def load(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err.strerror}", path=str(p))
    return loads(text, str(p))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, (Method, RhsChoice)):
        return json.dumps(v.value)
    return json.dumps(str(v))


def dumps(cfg: RunConfig) -> str:
    lines = []
    for section in ("grid", "params", "ic", "stepper", "rhs", "outputs", "harness",
                    "convergence", "breaking"):
        obj = getattr(cfg, section)
        if section == "rhs":
            lines.append(f"rhs = {_fmt(obj)}")
            continue
        if section == "ic":
            lines.append(f"ic.kind = {json.dumps(obj.kind)}")
        for f in fields(obj):
            value = getattr(obj, f.name)
            if value is None:
                continue
            lines.append(f"{section}.{f.name} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)


def with_overrides(cfg: RunConfig, **sections) -> RunConfig:
    """Return a copy with selected fields replaced, e.g. ``harness={"seed": 7}``."""
    changes = {name: dataclasses.replace(getattr(cfg, name), **vals)
               for name, vals in sections.items()}
    return dataclasses.replace(cfg, **changes)
