import numpy as np
import pytest

from tsq.config import ConfigError, CurveFile, fmt, parse_config, parse_drift, read_curve, write_curve
from tsq.model import CubicDrift, LinearDrift, PolynomialDrift

from conftest import REFERENCE_INI


def test_reference_config():
    cfg = parse_config(REFERENCE_INI)
    m = cfg.model
    assert (m.kappa, m.theta, m.lam, m.T, m.omega, m.lambda_tilde) == (1, 0.05, 0.5, 5, 0.2, 0.1)
    assert m.drift == LinearDrift(2, 0.04)
    assert cfg.numerics.seed == 7 and cfg.numerics.n_y == 400


def test_risk_section_overrides():
    cfg = parse_config(REFERENCE_INI + "\n[risk]\nlambda = 0\nlambda_tilde = 0.3\n")
    assert cfg.model.lam == 0 and cfg.model.lambda_tilde == 0.3


@pytest.mark.parametrize(
    "text,expected",
    [
        ("linear(2, 0.04)", LinearDrift(2, 0.04)),
        ("cubic(-1, 0.02, 0.05, 0.08)", CubicDrift(-1.0, (0.02, 0.05, 0.08))),
        ("Polynomial(0.08, -2, 0, -1)", PolynomialDrift((0.08, -2.0, 0.0, -1.0))),
    ],
)
def test_parse_drift(text, expected):
    assert parse_drift(text) == expected


@pytest.mark.parametrize(
    "edit,lineno",
    [
        (lambda t: t.replace("theta = 0.05", "theta = 0.05\nrho = 0.3"), 4),
        (lambda t: t.replace("kappa = 1", "kappa = one"), 2),
        (lambda t: t.replace("[numerics]", "[extras]"), 12),
        (lambda t: t.replace("drift = linear(2, 0.04)", "drift = exp(2)"), 10),
        (lambda t: t.replace("drift = linear(2, 0.04)", "drift = cubic(1, 0.02, 0.05, 0.08)"), 10),
        (lambda t: t.replace("seed = 7", "seed = 7.5"), 13),
        (lambda t: t.replace("T = 5", "T = 5\nT = 6"), 6),
    ],
)
def test_errors_name_the_line(edit, lineno):
    with pytest.raises(ConfigError, match=f"line {lineno}:"):
        parse_config(edit(REFERENCE_INI))


def test_missing_key():
    with pytest.raises(ConfigError, match="omega"):
        parse_config(REFERENCE_INI.replace("omega = 0.2\n", ""))


@pytest.mark.parametrize("x", [0.1, 1 / 3, 1e-300, 123456789.123456789, -2.5e-7])
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x
    assert "," not in fmt(x)


def test_curve_round_trip(tmp_path):
    data = np.array([[0.5, 0.98, 0.0404], [1.0, 0.96, 0.0408]])
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_curve(p1, CurveFile(("tau", "price", "yield"), data))
    write_curve(p2, read_curve(p1))
    assert p1.read_bytes() == p2.read_bytes()


@pytest.mark.parametrize(
    "body,match",
    [
        ("tau,price\n1,0.9\n", "line 1"),
        ("tau,price,yield\n1,0.9,0.1\n1,0.9,0.1\n", "line 3: tau must be strictly increasing"),
        ("tau,price,yield\n1,-0.9,0.1\n", "line 2: price"),
        ("tau,price,yield\n1,0.9\n", "line 2: expected 3 fields"),
        ("tau,price,yield\n1,x,0.1\n", "line 2: non-numeric"),
        ("", "empty"),
    ],
)
def test_curve_validation(tmp_path, body, match):
    p = tmp_path / "m.csv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(ConfigError, match=match):
        read_curve(p)
