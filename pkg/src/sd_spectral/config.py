"""Flat ``key = value`` scenario configuration.

Keys are dotted (``grid.points``, ``params.mu``). Lines starting with ``#``
are comments. Values are layered: built-in defaults, then the config file,
then command-line overrides. Unknown keys are rejected.

Initial data are written as ``kind(name=value, ...)``, e.g.::

    initial.u = gaussian(amplitude=1.0, width=1.0, center=[0, 0])
    initial.v = debye_equilibrium

Supported kinds: ``zero``, ``gaussian(amplitude, width, center)``
(``amplitude * exp(-|x - center|^2 / width^2)``, centre measured from the
box midpoint), ``constant(value)``, ``mode(k, amplitude)`` (integer wave
index per axis), ``random_bandlimited(seed, cutoff, amplitude)``,
``debye_equilibrium`` (v only: ``v = lambda |u0|^2``) and
``from_file(path)``.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from .errors import ConfigError

__all__ = [
    "InitialDataSpec",
    "ScenarioConfig",
    "SCHEMA",
    "parse_spec",
    "parse_config_text",
    "load_config",
    "config_to_text",
]

_SPEC_PARAMS = {
    "zero": {},
    "gaussian": {"amplitude": 1.0, "width": 1.0, "center": None},
    "constant": {"value": 1.0},
    "mode": {"k": None, "amplitude": 1.0},
    "random_bandlimited": {"seed": 0, "cutoff": 2.0, "amplitude": 1.0},
    "debye_equilibrium": {},
    "from_file": {"path": None},
}


@dataclass(frozen=True)
class InitialDataSpec:
    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _SPEC_PARAMS:
            raise ConfigError(f"unknown initial-data kind {self.kind!r}")
        allowed = _SPEC_PARAMS[self.kind]
        for name, _ in self.params:
            if name not in allowed:
                raise ConfigError(f"{self.kind}: unknown parameter {name!r}")

    def get(self, name: str):
        for k, v in self.params:
            if k == name:
                return v
        return _SPEC_PARAMS[self.kind][name]

    def __str__(self):
        if not self.params:
            return self.kind
        args = ", ".join(f"{k}={v!r}" for k, v in self.params)
        return f"{self.kind}({args})"


def _split_args(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return parts


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text  # bare strings such as file paths


def _freeze(v):
    return tuple(v) if isinstance(v, list) else v


def parse_spec(text: str) -> InitialDataSpec:
    if isinstance(text, InitialDataSpec):
        return text
    m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\((.*)\))?\s*", str(text), re.S)
    if not m:
        raise ConfigError(f"malformed initial-data spec {text!r}")
    kind, body = m.group(1), m.group(2) or ""
    params = []
    for part in _split_args(body):
        if "=" not in part:
            raise ConfigError(f"{kind}: argument {part.strip()!r} must be name=value")
        name, value = part.split("=", 1)
        params.append((name.strip(), _freeze(_literal(value.strip()))))
    return InitialDataSpec(kind, tuple(params))


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    t = str(text).strip().strip("[]")
    return tuple(float(x) for x in t.replace(",", " ").split())


def _optional_float(text):
    if text is None or str(text).strip().lower() in ("", "none", "auto"):
        return None
    return float(text)


def _lam(text) -> int:
    v = int(float(text))
    if v not in (1, -1) or float(text) != v:
        raise ValueError("lambda must be +1 or -1")
    return v


def _positive(conv: Callable) -> Callable:
    def check(text):
        v = conv(text)
        if not v > 0:
            raise ValueError("must be positive")
        return v

    return check


# dotted key -> (attribute, parser, default)
SCHEMA: dict[str, tuple[str, Callable, Any]] = {
    "name": ("name", str, "run"),
    "seed": ("seed", int, 0),
    "grid.dim": ("dim", int, 2),
    "grid.points": ("points", int, 128),
    "grid.extent": ("extent", _positive(float), 20.0),
    "params.mu": ("mu", _positive(float), 1.0),
    "params.lambda": ("lam", _lam, 1),
    "time.dt": ("dt", _positive(float), 1e-3),
    "time.t_end": ("t_end", float, 1.0),
    "time.dealias": ("dealias", _bool, False),
    "initial.u": ("initial_u", parse_spec, "gaussian(amplitude=1.0, width=1.0)"),
    "initial.v": ("initial_v", parse_spec, "debye_equilibrium"),
    "diagnostics.cadence": ("cadence", _positive(int), 10),
    "diagnostics.beta": ("beta", _optional_float, None),
    "diagnostics.beta_safety": ("beta_safety", _positive(float), 2.0),
    "output.dir": ("out_dir", str, ""),
    "output.snapshot_times": ("snapshot_times", _float_list, ()),
}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "run"
    seed: int = 0
    dim: int = 2
    points: int = 128
    extent: float = 20.0
    mu: float = 1.0
    lam: int = 1
    dt: float = 1e-3
    t_end: float = 1.0
    dealias: bool = False
    initial_u: InitialDataSpec = field(default_factory=lambda: parse_spec("gaussian(amplitude=1.0, width=1.0)"))
    initial_v: InitialDataSpec = field(default_factory=lambda: parse_spec("debye_equilibrium"))
    cadence: int = 10
    beta: Optional[float] = None
    beta_safety: float = 2.0
    out_dir: str = ""
    snapshot_times: tuple = ()

    def __post_init__(self):
        from .spectral import Grid

        try:
            Grid(self.dim, self.points, self.extent)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.t_end < 0:
            raise ConfigError("time.t_end must be >= 0")
        if self.initial_u.kind == "debye_equilibrium":
            raise ConfigError("debye_equilibrium is only valid for initial.v")
        if self.lam not in (1, -1):
            raise ConfigError("params.lambda must be +1 or -1")

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Raw ``key -> value`` strings; rejects unknown and duplicate keys."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _parse_overrides(items: Iterable[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must be key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r} in override")
        out[key] = value
    return out


def _convert(raw: dict[str, str]) -> dict[str, Any]:
    kw = {}
    for key, value in raw.items():
        attr, conv, _ = SCHEMA[key]
        try:
            kw[attr] = conv(value)
        except (ValueError, TypeError, ConfigError) as exc:
            raise ConfigError(f"{key}: invalid value {value!r} ({exc})") from None
    return kw


def load_config(path: Optional[str] = None, overrides: Iterable[str] = (), base: Optional[dict] = None) -> ScenarioConfig:
    """Resolve defaults < ``base`` < file < overrides into a ScenarioConfig."""
    raw: dict[str, str] = {}
    if base:
        raw.update({k: str(v) for k, v in base.items()})
        unknown = set(base) - set(SCHEMA)
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}")
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        raw.update(parse_config_text(text, str(path)))
    raw.update(_parse_overrides(overrides))
    return ScenarioConfig(**_convert(raw))


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def config_to_text(cfg: ScenarioConfig) -> str:
    lines = []
    for key, (attr, _, _) in SCHEMA.items():
        lines.append(f"{key} = {_format(getattr(cfg, attr))}")
    return "\n".join(lines) + "\n"
