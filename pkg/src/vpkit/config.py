"""Flat ``key = value`` run configuration.

Lines are ``key = value`` with ``#`` comments. Numeric values accept plain
literals and small arithmetic expressions over numbers and ``pi`` (for
example ``lx = 2*pi`` or ``dt = 1/256``).
"""
from __future__ import annotations

import ast
import math
import operator
import warnings
from dataclasses import dataclass, field

from .grid import DEFAULT_MEM_CAP, GridError, PhaseGrid, SimParams, build_grid
from .initial_data import FAMILIES, InitialDataSpec

CHECKS = ("theorem", "apriori", "averaging", "flow", "uniqueness", "cancellation", "converge",
          "transport")


class ConfigError(ValueError):
    def __init__(self, key: str | None, line: int | None, message: str):
        where = f"line {line}" if line else "config"
        label = f"key '{key}'" if key else "syntax"
        super().__init__(f"{where}: {label}: {message}")
        self.key = key
        self.line = line


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.operand))
    raise ValueError("not a numeric expression")


def _float(text: str) -> float:
    try:
        val = float(_eval(ast.parse(text, mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError, TypeError) as exc:
        raise ValueError(f"expected a number, got {text!r}") from exc
    if not math.isfinite(val):
        raise ValueError(f"value {text!r} is not finite")
    return val


def _int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        val = _float(text)
        if val != int(val):
            raise ValueError(f"expected an integer, got {text!r}") from None
        return int(val)


def _str(text: str) -> str:
    return text.strip().strip('"').strip("'")


def _checks(text: str) -> tuple:
    items = tuple(c.strip() for c in text.split(",") if c.strip())
    for c in items:
        if c not in CHECKS:
            raise ValueError(f"unknown check {c!r}; known: {', '.join(CHECKS)}")
    return items


KEYS = {
    "n": (_int, 1), "nx": (_int, 64), "nv": (_int, 64),
    "lx": (_float, 2 * math.pi), "lv": (_float, 8.0),
    "s": (_float, 1.0), "sigma": (_int, 1),
    "t_final": (_float, 1.0), "dt": (_float, 1.0 / 64),
    "poisson_mode": (_str, "periodic"), "support_tol": (_float, 1e-8),
    "snapshot_every": (_int, 16),
    "data_family": (_str, "maxwellian_bump"), "data_alpha": (_float, 0.2),
    "data_q0": (_float, 6.0), "data_beta": (_float, 4.0), "data_seed": (_int, 0),
    "data_amplitude": (_float, 1.0),
    "checks": (_checks, ("theorem",)), "out_dir": (_str, "out"),
    "mem_cap_bytes": (_int, DEFAULT_MEM_CAP),
}


@dataclass
class RunConfig:
    grid: PhaseGrid
    params: SimParams
    data: InitialDataSpec
    out_dir: str = "out"
    snapshot_every: int = 16
    checks: tuple = ("theorem",)
    mem_cap: int = DEFAULT_MEM_CAP
    warnings: list = field(default_factory=list)

    @property
    def theorem_mode(self) -> bool:
        return "theorem" in self.checks


def parse_config(text: str) -> RunConfig:
    """Parse and validate; every error names the key and (where known) the line."""
    vals = {k: d for k, (_, d) in KEYS.items()}
    where = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(key, lineno, "unknown key")
        if key in where:
            raise ConfigError(key, lineno, f"duplicate key (first set on line {where[key]})")
        try:
            vals[key] = KEYS[key][0](value)
        except ValueError as exc:
            raise ConfigError(key, lineno, str(exc)) from None
        where[key] = lineno

    def fail(key, msg):
        raise ConfigError(key, where.get(key), msg)

    if vals["n"] not in (1, 2, 3):
        fail("n", f"unsupported dimension {vals['n']} (1, 2 or 3)")
    if vals["sigma"] not in (1, -1):
        fail("sigma", "must be +1 or -1")
    if vals["dt"] <= 0:
        fail("dt", "must be positive (use the API for backward runs)")
    if vals["t_final"] < 0:
        fail("t_final", "must be >= 0")
    if vals["support_tol"] <= 0:
        fail("support_tol", "must be positive")
    if vals["poisson_mode"] not in ("periodic", "free_space"):
        fail("poisson_mode", "must be 'periodic' or 'free_space'")
    if vals["poisson_mode"] == "free_space" and vals["n"] != 3:
        fail("poisson_mode", "free_space requires n = 3")
    if vals["snapshot_every"] < 1:
        fail("snapshot_every", "must be >= 1")
    if vals["data_family"] not in FAMILIES:
        fail("data_family", f"unknown family; known: {', '.join(FAMILIES)}")
    if vals["mem_cap_bytes"] <= 0:
        fail("mem_cap_bytes", "must be positive")
    steps = vals["t_final"] / vals["dt"]
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        fail("t_final", "must be an integer multiple of dt")
    try:
        grid = build_grid(vals["n"], vals["nx"], vals["nv"], vals["lx"], vals["lv"],
                          mem_cap=vals["mem_cap_bytes"])
    except GridError as exc:
        msg = str(exc)
        key = "nx" if msg.startswith("nx") else "nv" if msg.startswith("nv") else \
            "mem_cap_bytes" if "cap" in msg else "lx"
        fail(key, msg)
    if not vals["data_q0"] > 0 or vals["data_q0"] >= vals["lv"] - 2 * grid.dv:
        fail("data_q0", f"must lie in (0, lv - 2 dv) = (0, {vals['lv'] - 2 * grid.dv})")

    notes = []
    theorem = "theorem" in vals["checks"]
    n, s = vals["n"], vals["s"]
    if s < 0:
        fail("s", "must be >= 0")
    if theorem and not s > n / 2 - 0.25:
        notes.append(f"s = {s} <= n/2 - 1/4 = {n / 2 - 0.25}: below the well-posedness hypothesis")
    if vals["data_family"] == "singular_x" and theorem and not 0 < vals["data_alpha"] < 0.25:
        fail("data_alpha", "singular_x requires alpha in (0, 1/4)")
    if vals["data_family"] == "spectral_random" and not vals["data_beta"] > s + n:
        fail("data_beta", f"spectral_random requires beta > s + n = {s + n}")
    for msg in notes:
        warnings.warn(msg, stacklevel=2)

    params = SimParams(sigma=vals["sigma"], s=s, t_final=vals["t_final"], dt=vals["dt"],
                       support_tol=vals["support_tol"], poisson_mode=vals["poisson_mode"])
    data = InitialDataSpec(family=vals["data_family"], q0=vals["data_q0"],
                           amplitude=vals["data_amplitude"], alpha=vals["data_alpha"],
                           beta=vals["data_beta"], seed=vals["data_seed"])
    return RunConfig(grid, params, data, vals["out_dir"], vals["snapshot_every"],
                     vals["checks"], vals["mem_cap_bytes"], notes)
