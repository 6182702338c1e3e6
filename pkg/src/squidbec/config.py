"""INI run configuration with explicit unit suffixes.

Every dimensioned value is written as ``<number> <unit>``, e.g. ``L = 100 pH``
or ``E_hfs = 6.835 GHz``.  Frequencies given in Hz-type units are cyclic and
converted to rad/s; ``rad/s`` is taken as is.  Vectors are whitespace- or
comma-separated numbers followed by one unit (``trap_center = 0 0 50 um``).

A run manifest (JSON) written by the CLI is also accepted as a config: its
``config`` object holds the resolved key/value text of every section.
"""

from __future__ import annotations

import configparser
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from .constants import AMU, MU_B, PHI_0, TWO_PI


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is ``section.key`` where known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.message = message
        self.path = path
        self.line = line
        where = ""
        if path:
            where += f"[{path}] "
        if line:
            where += f"(line {line}) "
        super().__init__(where + message)

    def located(self, line: int | None) -> ConfigError:
        return type(self)(self.message, self.path, self.line or line)


class UnknownKeyError(ConfigError):
    pass


class UnitError(ConfigError):
    pass


# unit -> (dimension, factor to SI)
UNITS: dict[str, tuple[str, float]] = {
    "H": ("inductance", 1.0), "nH": ("inductance", 1e-9), "pH": ("inductance", 1e-12),
    "F": ("capacitance", 1.0), "pF": ("capacitance", 1e-12), "fF": ("capacitance", 1e-15),
    "A": ("current", 1.0), "mA": ("current", 1e-3), "uA": ("current", 1e-6),
    "nA": ("current", 1e-9),
    "m": ("length", 1.0), "mm": ("length", 1e-3), "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "s": ("time", 1.0), "ms": ("time", 1e-3), "us": ("time", 1e-6), "ns": ("time", 1e-9),
    "rad/s": ("frequency", 1.0), "Hz": ("frequency", TWO_PI),
    "kHz": ("frequency", TWO_PI * 1e3), "MHz": ("frequency", TWO_PI * 1e6),
    "GHz": ("frequency", TWO_PI * 1e9),
    "kg": ("mass", 1.0), "u": ("mass", AMU),
    "Wb": ("flux", 1.0), "Phi0": ("flux", PHI_0),
    "J/T": ("moment", 1.0), "muB": ("moment", MU_B),
    "rad": ("angle", 1.0), "deg": ("angle", math.pi / 180),
}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUMBER}(?:[\s,]+{_NUMBER})*)\s*([A-Za-z/]+[0-9]?)?\s*$")


def parse_quantity(text: str, dimension: str, count: int | None = 1,
                   path: str | None = None) -> float | tuple[float, ...]:
    """Parse ``"<numbers> <unit>"`` into SI; ``count=None`` accepts any length."""
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"cannot parse quantity {text!r}", path)
    numbers = [float(x) for x in re.split(r"[\s,]+", m.group(1).strip())]
    unit = m.group(2)
    if unit is None:
        raise UnitError(f"missing unit for {dimension} value {text!r}", path)
    if unit not in UNITS:
        raise UnitError(f"unknown unit {unit!r}", path)
    dim, factor = UNITS[unit]
    if dim != dimension:
        raise UnitError(f"unit {unit!r} is a {dim}, expected a {dimension}", path)
    if count is not None and len(numbers) != count:
        raise ConfigError(f"expected {count} value(s), got {len(numbers)}", path)
    values = tuple(x * factor for x in numbers)
    return values[0] if count == 1 else values


@dataclass(frozen=True)
class Key:
    """Schema entry: default text, parser and optional validator."""

    default: str | None
    parse: Callable[[str, str], Any]
    check: Callable[[Any], str | None] | None = None


def _q(dim, count=1):
    return lambda text, path: parse_quantity(text, dim, count, path)


def _q_or(word, dim):
    def parse(text, path):
        return word if text.strip() == word else parse_quantity(text, dim, 1, path)
    return parse


def _int(text, path):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", path) from None
    if v != int(v):
        raise ConfigError(f"expected an integer, got {text!r}", path)
    return int(v)


def _float(text, path):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", path) from None


def _complex(text, path):
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"expected a complex number, got {text!r}", path) from None


def _floats(text, path):
    try:
        return tuple(float(x) for x in re.split(r"[\s,]+", text.strip()))
    except ValueError:
        raise ConfigError(f"expected numbers, got {text!r}", path) from None


def _bool(text, path):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}", path)


def _choice(*options):
    def parse(text, path):
        if text.strip() not in options:
            raise ConfigError(f"expected one of {options}, got {text!r}", path)
        return text.strip()
    return parse


def _str(text, path):
    return text.strip()


def _positive(v):
    return None if v > 0 else "must be positive"


def _non_negative(v):
    return None if v >= 0 else "must be non-negative"


def _positive_or_word(v):
    return None if isinstance(v, str) else _positive(v)


def _all_positive(v):
    return None if v and all(x > 0 for x in v) else "all values must be positive"


def _off_level(v):
    # the ramp is timed from 1.01 w_off, which needs w_off > 0
    return None if 0 < v < 0.98 else "must lie in (0, 0.98)"


SCHEMA: dict[str, dict[str, Key]] = {
    "squid": {
        "L": Key("100 pH", _q("inductance"), _positive),
        "C": Key("5 fF", _q("capacitance"), _positive),
        "I_c": Key(None, _q("current"), _positive),
        "beta_L": Key("2.1", _float, _positive),
        "Phi_ex": Key("0.51 Phi0", _q("flux")),
        "symmetry_tol": Key("0.1", _float, _positive),
        "potential_samples": Key("2001", _int, _positive),
    },
    "loop": {
        "radius": Key("1 um", _q("length"), _positive),
        "wire_radius": Key("0 um", _q("length"), _non_negative),
        "center": Key("0 0 0 um", _q("length", 3)),
        "axis": Key("0 0 1", _floats),
        "current": Key("1 mA", _q_or("squid", "current"), _positive_or_word),
    },
    "bec": {
        "N": Key("1e6", _int, _positive),
        "omega_ho": Key("50 Hz", _q("frequency"), _positive),
        "m_atom": Key("86.909180527 u", _q("mass"), _positive),
        "trap_center": Key("0 0 50 um", _q("length", 3)),
        "E_hfs": Key("6.835 GHz", _q("frequency"), _positive),
        "mu_transition": Key("1 muB", _q("moment"), _positive),
        "nodes": Key("32", _int, _positive),
        "profile_samples": Key("201", _int, _positive),
    },
    "field": {
        "x_range": Key("-3 3 um", _q("length", 2)),
        "y_range": Key("0 0 um", _q("length", 2)),
        "z_range": Key("0.25 5.25 um", _q("length", 2)),
        "nx": Key("13", _int, _positive),
        "ny": Key("1", _int, _positive),
        "nz": Key("11", _int, _positive),
    },
    "dynamics": {
        "protocol": Key("transfer", _choice("transfer", "entangle")),
        "E_hfs": Key("6.835 GHz", _q("frequency"), _positive),
        "omega": Key("1 MHz", _q_or("coupling", "frequency"), _positive_or_word),
        "omega_phase": Key("0 rad", _q("angle")),
        "alpha": Key("0", _complex),
        "beta": Key("1", _complex),
        "ramp_time": Key("1 us", _q("time"), _positive),
        "w_off": Key("0.5", _float, _off_level),
        "hold_rule": Key("window", _choice("window", "midpoint", "optimize")),
        "frame": Key("lab", _choice("lab", "rotating")),
        "steps_per_period": Key("100", _int, _positive),
        "n_records": Key("2000", _int, _positive),
        "ramps": Key("0.01 0.03 0.1 0.3 1 us", _q("time", None), _all_positive),
        "workers": Key("1", _int, _positive),
        "include_zz": Key("false", _bool),
    },
    "tomography": {
        "shots": Key("10000", _int, _positive),
        "seed": Key("20240601", _int, _non_negative),
        "z": Key("1.96", _float, _positive),
    },
    "output": {
        "directory": Key("squidbec-out", _str),
        "precision": Key("17", _int, _positive),
    },
}

FAST_OVERRIDES = {("dynamics", "E_hfs"): "100 MHz", ("dynamics", "omega"): "1 MHz"}


@dataclass
class RunConfig:
    """Resolved configuration.

    ``text`` keeps the canonical key/value strings (what a manifest records);
    ``values`` holds the parsed SI values.
    """

    text: dict[str, dict[str, str]]
    values: dict[str, dict[str, Any]]
    source: str | None = None
    present: frozenset[str] = field(default_factory=frozenset)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    def with_overrides(self, overrides: dict[tuple[str, str], str]) -> RunConfig:
        text = {s: dict(kv) for s, kv in self.text.items()}
        for (section, key), value in overrides.items():
            text[section][key] = value
        return build_config(text, self.source, present=self.present)

    # domain objects -------------------------------------------------------

    def squid_params(self):
        from .squid_circuit import SquidParams

        s = self.values["squid"]
        I_c = s["I_c"] if s["I_c"] is not None else s["beta_L"] * PHI_0 / (TWO_PI * s["L"])
        return SquidParams(L=s["L"], C=s["C"], I_c=I_c, Phi_ex=s["Phi_ex"])

    def loop_geometry(self):
        from .loop_field import LoopGeometry

        s = self.values["loop"]
        try:
            return LoopGeometry(s["radius"], s["wire_radius"], s["center"], s["axis"])
        except ValueError as exc:
            raise ConfigError(str(exc), "loop") from exc

    def bec_params(self):
        from .bec_coupling import BecParams

        s = self.values["bec"]
        return BecParams(N=s["N"], omega_ho=s["omega_ho"], m_atom=s["m_atom"],
                         trap_center=s["trap_center"], E_hfs=s["E_hfs"],
                         mu_transition=s["mu_transition"])

    def as_dict(self) -> dict[str, dict[str, str]]:
        return {s: dict(kv) for s, kv in self.text.items()}


def _line_index(lines: list[str]) -> dict[tuple[str, str], int]:
    index, section = {}, None
    for n, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
        elif section and ("=" in stripped or ":" in stripped) and not stripped.startswith(("#", ";")):
            key = re.split(r"[=:]", stripped, maxsplit=1)[0].strip()
            index.setdefault((section, key), n)
    return index


def build_config(text: dict[str, dict[str, str]], source: str | None = None,
                 lines: dict[tuple[str, str], int] | None = None,
                 present: frozenset[str] | None = None) -> RunConfig:
    """Validate key/value text against the schema and fill defaults."""
    lines = lines or {}
    for section, kv in text.items():
        if section not in SCHEMA:
            raise UnknownKeyError(f"unknown section {section!r}", section,
                                  lines.get((section, None)))
        for key in kv:
            if key not in SCHEMA[section]:
                raise UnknownKeyError(f"unknown key {key!r}", f"{section}.{key}",
                                      lines.get((section, key)))
    resolved_text: dict[str, dict[str, str]] = {}
    values: dict[str, dict[str, Any]] = {}
    for section, keys in SCHEMA.items():
        given = text.get(section, {})
        resolved_text[section] = {}
        values[section] = {}
        for key, spec in keys.items():
            raw = given.get(key, spec.default)
            path = f"{section}.{key}"
            if raw is None:
                values[section][key] = None
                continue
            try:
                value = spec.parse(raw, path)
                problem = spec.check(value) if spec.check else None
            except ConfigError as exc:
                raise exc.located(lines.get((section, key))) from None
            if problem:
                raise ConfigError(f"{problem} (got {raw!r})", path, lines.get((section, key)))
            resolved_text[section][key] = raw.strip()
            values[section][key] = value
    if text.get("squid", {}).get("I_c") is not None and "beta_L" in text.get("squid", {}):
        raise ConfigError("give either I_c or beta_L, not both", "squid")
    if values["squid"]["I_c"] is not None:
        resolved_text["squid"].pop("beta_L", None)
        values["squid"]["beta_L"] = None
    present = present if present is not None else frozenset(text)
    return RunConfig(resolved_text, values, source, present)


def parse_config(path: str | Path) -> RunConfig:
    """Read an INI file (or a run manifest) and return a validated RunConfig."""
    path = Path(path)
    content = path.read_text()
    if path.suffix == ".json":
        try:
            data = json.loads(content)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", None, exc.lineno) from None
        text = data.get("config", data)
        if not isinstance(text, dict):
            raise ConfigError("manifest has no config object")
        return build_config({s: {k: str(v) for k, v in kv.items()} for s, kv in text.items()},
                            str(path))
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(content, source=str(path))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(f"syntax error: {exc.message.splitlines()[0]}", None, line) from None
    index = _line_index(content.splitlines())
    for section in parser.sections():
        index.setdefault((section, None), next(
            (n for n, l in enumerate(content.splitlines(), 1) if l.strip() == f"[{section}]"), None))
    text = {s: dict(parser[s]) for s in parser.sections()}
    return build_config(text, str(path), index)


def default_config() -> RunConfig:
    return build_config({})


def paper_defaults_path() -> Path:
    return Path(str(resources.files("squidbec") / "data" / "paper-defaults.ini"))
