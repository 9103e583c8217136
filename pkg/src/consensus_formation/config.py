"""Scenario configuration files.

A scenario is an INI file whose sections mirror the library types::

    [scenario]   name, seed
    [run]        mode (``run``, ``certify-only``, ``oracle``, ``sweep``), sweep seeds
    [graph]      topology (``line:N``, ``star:N`` or ``0-1, 1-2, ...``)
    [formation]  shape (``triangular`` or ``explicit``) and its parameters
    [plant]      model (``quadrotor``, ``single_integrator``, ``linear``) and parameters
    [gain]       kind (``identity``, ``diagonal``, ``matrix``, ``search``, ``cascade``, ``riccati``)
    [reference]  kind (``figure_eight`` or ``stationary``) and its parameters
    [leader]     mode and tracking gains
    [simulation] dt, horizon, init_box, record_stride, override_certificate
    [certificate] optional sampled drift check
    [output]     dir, trace, window

Unknown sections or keys and malformed values are reported with the line
number they appear on. Every numeric value is parsed as a 64-bit float.
"""

from __future__ import annotations

import configparser
import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import ConfigurationError

BUNDLED_DIR = Path(__file__).with_name("scenarios")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    parts = text.replace(",", " ").split()
    if not parts:
        raise ValueError("expected at least one number")
    return tuple(float(p) for p in parts)


def _ints(text: str) -> tuple[int, ...]:
    parts = text.replace(",", " ").split()
    if not parts:
        raise ValueError("expected at least one integer")
    return tuple(int(p) for p in parts)


def _matrix(text: str) -> tuple[tuple[float, ...], ...]:
    rows = [r for r in text.split(";") if r.strip()]
    out = tuple(_floats(r) for r in rows)
    if len({len(r) for r in out}) != 1:
        raise ValueError("matrix rows have different lengths")
    return out


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        v = text.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return v
    return parse


def _str(text: str) -> str:
    return text.strip()


# section -> key -> (parser, default). ``None`` defaults mean "not set".
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "scenario": {"name": (_str, "scenario"), "seed": (int, 0)},
    "run": {"mode": (_choice("run", "certify-only", "oracle", "sweep"), "run"), "seeds": (_ints, (0, 1, 2, 3))},
    "graph": {"topology": (_str, "line:4"), "leader": (int, 0)},
    "formation": {
        "shape": (_choice("triangular", "explicit"), "triangular"),
        "delta_l1": (float, 1.0), "delta_12": (float, 0.8), "delta_13": (float, 0.8),
        "spread_angle_deg": (float, 60.0),
        "goals": (_matrix, None), "edges": (_str, None),
    },
    "plant": {
        "model": (_choice("quadrotor", "single_integrator", "linear"), "quadrotor"),
        "dim": (int, 3),
        "a": (_matrix, None),
        "mass": (float, 0.028), "arm_length": (float, 0.046),
        "inertia_xx": (float, 6.4893e-6), "inertia_yy": (float, 16.4562e-6), "inertia_zz": (float, 29.5435e-6),
        "gravity": (float, 9.81),
    },
    "gain": {
        "kind": (_choice("identity", "diagonal", "matrix", "search", "cascade", "riccati"), "identity"),
        "diagonal": (_floats, None), "matrix": (_matrix, None),
        "search_grid": (_floats, (0.5, 1.0, 2.0)),
        "kp_position": (float, 4.0), "kd_position": (float, 4.0),
        "kp_altitude": (float, 4.0), "kd_altitude": (float, 4.0),
        "kp_attitude": (float, 100.0), "kd_attitude": (float, 20.0),
        "kp_yaw": (float, 25.0), "kd_yaw": (float, 10.0),
        "margin": (float, 1.0), "riccati_scale": (float, 0.5), "riccati_weights": (_floats, None),
    },
    "reference": {
        "kind": (_choice("figure_eight", "stationary"), "figure_eight"),
        "amplitude": (float, 1.0), "period": (float, 20.0), "altitude": (float, 1.0),
        "point": (_floats, (0.0, 0.0, 1.0)),
    },
    "leader": {
        "mode": (_choice("consensus", "track", "pinned"), "consensus"),
        "kp_position": (float, 4.0), "kd_position": (float, 4.0),
        "kp_attitude": (float, 400.0), "kd_attitude": (float, 40.0),
        "kp_yaw": (float, 100.0), "kd_yaw": (float, 20.0),
        "max_tilt": (float, 0.6), "k": (float, 1.0),
    },
    "simulation": {
        "dt": (float, 1e-3), "horizon": (float, 30.0), "init_box": (float, 0.5),
        "record_stride": (int, 1), "override_certificate": (_bool, False),
    },
    "certificate": {"sample_box": (_opt_float, None), "samples": (int, 1000), "sample_seed": (int, 0)},
    "output": {
        "dir": (_str, None), "trace": (_bool, True),
        "window_start": (_opt_float, None), "window_end": (_opt_float, None),
    },
}


@dataclass
class ScenarioConfig:
    """Resolved configuration: every schema key present with a typed value."""

    values: dict[str, dict[str, Any]]
    source: str = "<defaults>"

    def get(self, section: str, key: str) -> Any:
        return self.values[section][key]

    def with_overrides(self, overrides: dict[tuple[str, str], Any]) -> "ScenarioConfig":
        vals = copy.deepcopy(self.values)
        for (section, key), value in overrides.items():
            if section not in vals or key not in vals[section]:
                raise ConfigurationError(f"unknown override {section}.{key}")
            if value is not None:
                vals[section][key] = value
        return ScenarioConfig(vals, self.source)

    def echo(self) -> dict[str, dict[str, Any]]:
        """Plain-data copy for the run summary."""
        def plain(v: Any) -> Any:
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            return v
        return {s: {k: plain(v) for k, v in kv.items()} for s, kv in self.values.items()}


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """Map (section, key) to the 1-based line where the key is set."""
    out: dict[tuple[str, str], int] = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            out[(section, "")] = no
        elif section is not None and not raw[:1].isspace():
            if "=" in line:
                out.setdefault((section, line.split("=", 1)[0].strip().lower()), no)
    return out


def defaults() -> ScenarioConfig:
    return ScenarioConfig({s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from None
    lines = _line_index(text)
    cfg = defaults()
    for section in parser.sections():
        sec = section.lower()
        where = f"{source}:{lines.get((sec, ''), '?')}"
        if sec not in SCHEMA:
            raise ConfigurationError(f"{where}: unknown section [{section}]")
        for key, raw in parser.items(section):
            where = f"{source}:{lines.get((sec, key), '?')}"
            if key not in SCHEMA[sec]:
                raise ConfigurationError(f"{where}: unknown key '{key}' in [{section}]")
            fn, _ = SCHEMA[sec][key]
            try:
                cfg.values[sec][key] = fn(raw)
            except ValueError as exc:
                raise ConfigurationError(f"{where}: bad value for {sec}.{key}: {exc}") from None
    cfg.source = source
    return cfg


def resolve_scenario_path(name: str | Path) -> Path:
    """A file path, or the stem of a bundled scenario such as ``crazyflie_triangle``."""
    p = Path(name)
    if p.is_file():
        return p
    bundled = BUNDLED_DIR / (p.name if p.suffix == ".cfg" else f"{p.name}.cfg")
    if bundled.is_file():
        return bundled
    raise ConfigurationError(f"scenario file not found: {name}")


def load_config(path: str | Path) -> ScenarioConfig:
    p = resolve_scenario_path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read {p}: {exc}") from None
    return parse_config(text, source=str(p))


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in BUNDLED_DIR.glob("*.cfg"))


def as_array(value: Any) -> np.ndarray:
    return np.array(value, dtype=np.float64)
