"""Flat ``[section]`` / ``key = value`` model configuration and curve CSV files.

configparser is not used because unknown keys must be rejected with the
offending line number.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import CubicDrift, DriftFunction, LinearDrift, PolynomialDrift, TwoFactorModel


class ConfigError(ValueError):
    pass


SECTIONS = {
    "shortrate": {"kappa", "theta", "lambda", "T"},
    "volatility": {"omega", "lambda_tilde", "drift"},
    "risk": {"lambda", "lambda_tilde"},
    "numerics": {"n_y", "n_t", "tol", "seed", "paths", "dt"},
}
REQUIRED = {
    "shortrate": {"kappa", "theta", "lambda", "T"},
    "volatility": {"omega", "lambda_tilde", "drift"},
}

_DRIFT_RE = re.compile(r"^\s*(linear|cubic|polynomial)\s*\(([^)]*)\)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class Numerics:
    n_y: int = 400
    n_t: int = 2000
    tol: float = 1e-10
    seed: int = 12345
    paths: int = 100_000
    dt: float = 1e-3


@dataclass(frozen=True)
class ModelConfig:
    model: TwoFactorModel
    numerics: Numerics
    source: str = ""


def _number(text: str, lineno: int, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: '{key}' expects a decimal number, got '{text}'") from None


def parse_drift(text: str, lineno: int = 0) -> DriftFunction:
    """``linear(kappa_y, theta_y)``, ``cubic(c, y1, y2, y3)`` or ``polynomial(c0, c1, ...)``."""
    m = _DRIFT_RE.match(text)
    if not m:
        raise ConfigError(f"line {lineno}: cannot parse drift '{text}'")
    kind = m.group(1).lower()
    args = [_number(a.strip(), lineno, "drift") for a in m.group(2).split(",") if a.strip()]
    try:
        if kind == "linear" and len(args) == 2:
            return LinearDrift(*args)
        if kind == "cubic" and len(args) == 4:
            return CubicDrift(args[0], tuple(args[1:]))
        if kind == "polynomial" and args:
            return PolynomialDrift(tuple(args))
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: {exc}") from None
    raise ConfigError(f"line {lineno}: wrong number of drift arguments for '{kind}'")


def parse_config(text: str) -> ModelConfig:
    values: dict[str, dict[str, tuple[str, int]]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            values.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of any section")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SECTIONS[section]:
            raise ConfigError(f"line {lineno}: unknown key '{key}' in [{section}]")
        if key in values[section]:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        values[section][key] = (val, lineno)

    for sec, keys in REQUIRED.items():
        missing = keys - set(values.get(sec, {}))
        if missing:
            raise ConfigError(f"missing keys in [{sec}]: {', '.join(sorted(missing))}")

    def num(sec, key):
        val, ln = values[sec][key]
        return _number(val, ln, key)

    sr, vol = values["shortrate"], values["volatility"]
    lam = num("shortrate", "lambda")
    lt = num("volatility", "lambda_tilde")
    risk = values.get("risk", {})
    if "lambda" in risk:
        lam = num("risk", "lambda")
    if "lambda_tilde" in risk:
        lt = num("risk", "lambda_tilde")
    drift = parse_drift(*vol["drift"])
    try:
        model = TwoFactorModel.build(
            num("shortrate", "kappa"), num("shortrate", "theta"), lam, num("shortrate", "T"),
            num("volatility", "omega"), lt, drift,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    nums = {}
    for key, (val, ln) in values.get("numerics", {}).items():
        x = _number(val, ln, key)
        if key in ("n_y", "n_t", "seed", "paths"):
            if x != int(x) or x < (0 if key == "seed" else 1):
                raise ConfigError(f"line {ln}: '{key}' must be a positive integer")
            x = int(x)
        elif not x > 0:
            raise ConfigError(f"line {ln}: '{key}' must be positive")
        nums[key] = x
    return ModelConfig(model, Numerics(**nums), text)


def load_config(path: str | Path) -> ModelConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def fmt(x: float) -> str:
    """17 significant digits, always with '.' as decimal point."""
    if x != x:
        return "nan"
    return format(float(x), ".17g")


def write_csv(path: str | Path, header: Sequence[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


@dataclass(frozen=True)
class CurveFile:
    header: tuple
    data: np.ndarray  # rows x columns

    @property
    def tau(self):
        return self.data[:, 0]

    @property
    def price(self):
        return self.data[:, 1]

    @property
    def yields(self):
        return self.data[:, 2]


CURVE_HEADER = ("tau", "price", "yield")


def read_curve(path: str | Path) -> CurveFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read curve file: {exc}") from None
    lines = text.splitlines()
    if not lines:
        raise ConfigError("curve file is empty")
    header = tuple(h.strip() for h in lines[0].split(","))
    if header[:3] != CURVE_HEADER:
        raise ConfigError("line 1: curve header must start with 'tau,price,yield'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(header):
            raise ConfigError(f"line {lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            row = [float(v) for v in fields]
        except ValueError:
            raise ConfigError(f"line {lineno}: non-numeric field") from None
        if rows and not row[0] > rows[-1][0]:
            raise ConfigError(f"line {lineno}: tau must be strictly increasing")
        if not row[1] > 0:
            raise ConfigError(f"line {lineno}: price must be positive")
        rows.append(row)
    if not rows:
        raise ConfigError("curve file has no data rows")
    return CurveFile(header, np.asarray(rows))


def write_curve(path: str | Path, curve: CurveFile) -> None:
    write_csv(path, curve.header, curve.data)
