"""Experiment configuration: INI text with fixed sections and validated keys."""
from __future__ import annotations

import ast
import configparser
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

from . import io
from .spectrum import ALPHA_MAX, degeneracy_setup

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "evaluate_time", "DEFAULTS"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the section, key and line."""


# section -> key -> (type, default)
DEFAULTS = {
    "problem": {
        "alpha": (float, 2.0 / 3.0),
        "modes": (int, 20),
        "time": (str, "1.2*T0"),
        "mu": (str, "power"),
        "seed": (int, 0),
    },
    "target": {
        "kind": (str, "random-decaying"),
        "decay": (float, 2.0),
        "scale": (float, 1.0),
        "mode": (int, 1),
        "amplitude": (float, 1e-3),
        "component": (str, "velocity"),
        "path": (str, ""),
    },
    "control": {
        "kind": (str, "synthesized"),
        "scale": (float, 0.01),
        "amplitude": (float, 0.2),
        "pieces": (int, 16),
        "hold": (str, "linear"),
    },
    "tolerances": {
        "zero_tol": (float, 1e-12),
        "quad_tol": (float, 1e-10),
        "step_tol": (float, 1e-9),
        "cutoff": (float, 1e-12),
        "admissibility_floor": (float, 0.1),
        "kadec_tail_start": (int, 20),
    },
    "output": {
        "dir": (str, "out"),
        "samples": (int, 1001),
        "trajectory_stride": (int, 64),
        "plots": (bool, False),
    },
    "verify": {
        "perturb_kn": (float, 0.0),
        "criteria": (str, "all"),
    },
}

_CHOICES = {
    ("target", "kind"): ("zero", "single-mode", "random-decaying", "file"),
    ("target", "component"): ("position", "velocity"),
    ("control", "kind"): ("synthesized", "zero", "rough"),
    ("control", "hold"): ("linear", "previous"),
}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


def evaluate_time(expr: str, T0: float) -> float:
    """Arithmetic over numbers and the name ``T0``, e.g. ``"1.2*T0"``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "T0":
            return T0
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported element in time expression {expr!r}")

    try:
        value = ev(ast.parse(str(expr).strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot evaluate time expression {expr!r}: {exc}") from None
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"time expression {expr!r} must give a positive time, got {value}")
    return value


@dataclass
class ExperimentConfig:
    values: dict
    source: str = "<defaults>"
    _lines: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, section):
        return self.values[section]

    @property
    def alpha(self) -> float:
        return self.values["problem"]["alpha"]

    @property
    def N(self) -> int:
        return self.values["problem"]["modes"]

    @property
    def seed(self) -> int:
        return self.values["problem"]["seed"]

    @property
    def T0(self) -> float:
        return degeneracy_setup(self.alpha).T0

    @property
    def T(self) -> float:
        return evaluate_time(self.values["problem"]["time"], self.T0)

    @property
    def output_dir(self) -> Path:
        return Path(self.values["output"]["dir"])

    def canonical_text(self) -> str:
        lines = []
        for sec in DEFAULTS:
            lines.append(f"[{sec}]")
            for key in DEFAULTS[sec]:
                if (sec, key) == ("output", "dir"):
                    # where results go does not change their content
                    continue
                v = self.values[sec][key]
                lines.append(f"{key} = {io.fmt_float(v) if isinstance(v, float) else v}")
        return "\n".join(lines) + "\n"

    @property
    def digest(self) -> str:
        return io.config_hash(self.canonical_text())

    def where(self, section, key):
        line = self._lines.get((section, key))
        loc = f"{self.source}, line {line}" if line else self.source
        return f"[{section}] {key} ({loc})"

    def override(self, section, key, raw):
        self.values[section][key] = _convert(self, section, key, raw, cli=True)
        self._lines.pop((section, key), None)
        source, self.source = self.source, "command line"
        try:
            _validate(self)
        finally:
            self.source = source


def _key_lines(text):
    out, section = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif section and s and s[0] not in "#;" and ("=" in s or ":" in s):
            sep = min(p for p in (s.find("="), s.find(":")) if p >= 0)
            out[(section, s[:sep].strip().lower())] = i
    return out


def _convert(cfg, section, key, raw, cli=False):
    typ = DEFAULTS[section][key][0]
    where = f"--{key}" if cli else cfg.where(section, key)
    try:
        if typ is bool:
            low = str(raw).strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(f"expected a boolean, got {raw!r}")
            return low in ("true", "yes", "1", "on")
        if typ is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError("must be finite")
            return v
        if typ is int:
            return int(str(raw).strip())
        return str(raw).strip()
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _validate(cfg):
    v = cfg.values
    a = v["problem"]["alpha"]
    try:
        degeneracy_setup(a)
    except ValueError as exc:
        raise ConfigError(f"{cfg.where('problem', 'alpha')}: {exc}") from None
    if a > ALPHA_MAX:
        raise ConfigError(f"{cfg.where('problem', 'alpha')}: alpha must not exceed {ALPHA_MAX}, got {a}")
    if v["problem"]["modes"] < 1:
        raise ConfigError(f"{cfg.where('problem', 'modes')}: must be >= 1")
    try:
        cfg.T
    except ValueError as exc:
        raise ConfigError(f"{cfg.where('problem', 'time')}: {exc}") from None
    mu = v["problem"]["mu"]
    if mu not in ("power", "one", "power+smooth") and not mu.startswith("table:"):
        raise ConfigError(f"{cfg.where('problem', 'mu')}: unknown potential {mu!r} "
                          "(power, one, power+smooth or table:PATH)")
    for (sec, key), allowed in _CHOICES.items():
        if v[sec][key] not in allowed:
            raise ConfigError(f"{cfg.where(sec, key)}: {v[sec][key]!r} not in {allowed}")
    if v["target"]["kind"] == "file" and not v["target"]["path"]:
        raise ConfigError(f"{cfg.where('target', 'path')}: required when kind = file")
    for sec, key in (("output", "samples"), ("output", "trajectory_stride"), ("control", "pieces")):
        if v[sec][key] < 1 + (key == "samples"):
            raise ConfigError(f"{cfg.where(sec, key)}: too small")
    for key, (typ, _) in DEFAULTS["tolerances"].items():
        if typ is float and not v["tolerances"][key] > 0:
            raise ConfigError(f"{cfg.where('tolerances', key)}: must be positive")


def load_config(path=None, text=None) -> ExperimentConfig:
    """Parse and validate; unknown sections or keys are errors."""
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in DEFAULTS.items()}
    source = "<defaults>"
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        source = str(path)
    elif text is not None:
        source = "<text>"
    cfg = ExperimentConfig(values, source)
    if text:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        cfg._lines = _key_lines(text)
        for sec in parser.sections():
            if sec not in DEFAULTS:
                raise ConfigError(f"{source}: unknown section [{sec}]")
            for key, raw in parser.items(sec):
                if key not in DEFAULTS[sec]:
                    raise ConfigError(f"{cfg.where(sec, key)}: unknown key")
                values[sec][key] = _convert(cfg, sec, key, raw)
    _validate(cfg)
    return cfg
