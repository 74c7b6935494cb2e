"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 hypothesis (A)
violation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import errors
from .averaging import AveragedPrice, average_a, averaged_price, maturity_derivatives
from .config import ConfigError, CurveFile, ModelConfig, fmt, load_config, read_curve, write_csv
from .density import build_stationary_density
from .model import validate_hypothesis_A, yield_from_price
from .montecarlo import SimulationConfig, mc_bond_price
from .no1f import MomentSet, closest_vasicek, nonexistence_residual
from .pricer1f import vasicek_B
from .pricer2f import solve_A_pde

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_NUMERIC = 0, 2, 3, 4


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text}") from None


def _check_hypothesis(cfg: ModelConfig):
    m = cfg.model
    rep = validate_hypothesis_A(m.drift, m.omega)
    if not rep.passed:
        raise errors.HypothesisAViolated("hypothesis (A) fails: " + "; ".join(rep.failing_clauses()))


def _solve(cfg: ModelConfig):
    _check_hypothesis(cfg)
    m, num = cfg.model, cfg.numerics
    f = build_stationary_density(m.drift, m.omega, num.tol)
    surface = solve_A_pde(m, n_y=num.n_y, n_t=num.n_t, density=f)
    return f, surface, average_a(surface, f)


def _curve_taus(T, tau_min, tau_max, steps):
    tau_max = T if tau_max is None else tau_max
    if not 0 < tau_min < tau_max <= T + 1e-12:
        raise ConfigError(f"need 0 < tau-min < tau-max <= T = {T}")
    return np.linspace(tau_min, tau_max, steps)


def _model_curve(avg: AveragedPrice, r: float, taus: np.ndarray):
    prices = np.asarray(averaged_price(avg, avg.T - taus, r))
    return prices, np.asarray(yield_from_price(prices, taus))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_density(args) -> int:
    cfg = load_config(args.config)
    _check_hypothesis(cfg)
    f = build_stationary_density(cfg.model.drift, cfg.model.omega, cfg.numerics.tol)
    ys = np.geomspace(f.y_max * 1e-6, f.y_max, args.points)
    write_csv(args.out, ("y", "f"), zip(ys, f.pdf(ys)))
    return EXIT_OK


def cmd_curve(args) -> int:
    cfg = load_config(args.config)
    taus = _curve_taus(cfg.model.T, args.tau_min, args.tau_max, args.steps)
    _, surface, avg = _solve(cfg)
    prices, yields = _model_curve(avg, args.r, taus)
    header = ["tau", "price", "yield"]
    cols = [taus, prices, yields]
    for y in args.per_y or []:
        if not 0 <= y <= surface.y_max:
            raise ConfigError(f"--per-y value {y} outside [0, {surface.y_max:.6g}]")
        A = np.asarray([surface.A_at(cfg.model.T - tau, y) for tau in taus])
        pi = A * np.exp(-vasicek_B(cfg.model.kappa, taus) * args.r)
        header.append(f"yield_y={fmt(y)}")
        cols.append(np.asarray(yield_from_price(pi, taus)))
    write_csv(args.out, header, zip(*cols))
    return EXIT_OK


def _report_lines(cfg, rep, deriv, cv):
    m = cfg.model
    d = m.drift
    out = [
        "volatility-averaged term structure: one-factor non-existence report",
        f"kappa={fmt(m.kappa)} theta={fmt(m.theta)} lambda={fmt(m.lam)} lambda_tilde={fmt(m.lambda_tilde)} "
        f"omega={fmt(m.omega)} T={fmt(m.T)} drift_coefficients="
        + (" ".join(fmt(float(c)) for c in d.coefficients) if d.is_polynomial else "general"),
        f"K = {fmt(rep.K)}",
        f"Omega_bar_sq = {fmt(rep.Omega_bar_sq)}",
        "",
        "order,route1_printed,route1_derived,route2_printed,route2_oracle,pde_estimate",
    ]
    for k in range(4):
        r2p = rep.route2.printed[k] if rep.route2 else float("nan")
        r2o = rep.route2.check[k] if rep.route2 else float("nan")
        out.append(",".join([str(k + 1)] + [fmt(float(v)) for v in (
            rep.route1.printed[k], rep.route1.check[k], r2p, r2o, deriv[k])]))
    out += [
        "",
        f"residual_paper = {fmt(rep.residual_paper)}",
        f"residual_derived = {fmt(rep.residual_derived) if rep.residual_derived is not None else 'n/a'}",
        f"closest_vasicek_max_gap = {fmt(cv.max_gap) if cv else 'n/a (negative Omega_bar_sq)'}",
    ]
    if cv:
        out.append(f"closest_vasicek_first_tau_above_1e-6 = {fmt(cv.first_tau_above) if cv.first_tau_above else 'none'}")
        out.append(f"closest_vasicek_loglog_slope = {fmt(cv.loglog_slope) if cv.loglog_slope else 'n/a'}")
    for flag in rep.flags:
        out.append(f"flag: {flag}")
    out.append(f"verdict: {rep.verdict}")
    return out


def cmd_nonexist(args) -> int:
    cfg = load_config(args.config)
    f, surface, avg = _solve(cfg)
    ms = MomentSet.from_density(f)
    rep = nonexistence_residual(cfg.model, ms)
    deriv = maturity_derivatives(avg)
    try:
        cv = closest_vasicek(cfg.model, ms, avg)
    except errors.NegativeVariance:
        cv = None
    lines = _report_lines(cfg, rep, deriv, cv)
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if args.csv:
        table = lines[lines.index("order,route1_printed,route1_derived,route2_printed,route2_oracle,pde_estimate"):]
        table = table[: table.index("")]
        Path(args.csv).write_text("\n".join(table) + "\n", encoding="utf-8", newline="\n")
    print(f"verdict: {rep.verdict}")
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = load_config(args.config)
    m, num = cfg.model, cfg.numerics
    tau = m.T if args.tau is None else args.tau
    sim = SimulationConfig(
        n_paths=args.paths or num.paths,
        dt=args.dt or num.dt,
        seed=num.seed if args.seed is None else args.seed,
        r0=args.r,
        y0=args.y0,
        antithetic=args.antithetic,
    )
    est = mc_bond_price(m, sim, tau)
    se = "" if est.n_paths < 2 else fmt(est.stderr)
    line = f"{fmt(est.mean)},{se},{est.n_paths}"
    if args.out:
        Path(args.out).write_text("mean,stderr,paths\n" + line + "\n", encoding="utf-8", newline="\n")
    print(line)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    market: CurveFile = read_curve(args.market)
    taus = _curve_taus(cfg.model.T, args.tau_min, args.tau_max, args.steps)
    mt = market.tau
    if mt[0] < taus[0] - 1e-12 or mt[-1] > taus[-1] + 1e-12:
        raise ConfigError(f"market maturities must lie within [{fmt(taus[0])}, {fmt(taus[-1])}]")
    _, _, avg = _solve(cfg)
    _, yields = _model_curve(avg, args.r, taus)
    model_y = np.interp(mt, taus, yields)
    write_csv(args.out, ("tau", "model_yield", "market_yield", "gap"),
              zip(mt, model_y, market.yields, model_y - market.yields))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsq", description="Volatility-averaged two-factor term structures.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", help="stationary dispersion density as CSV (y, f)")
    d.add_argument("config")
    d.add_argument("--points", type=_positive_int, default=200)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_density)

    def curve_grid(sp):
        sp.add_argument("--r", type=float, required=True, help="current short rate")
        sp.add_argument("--tau-min", type=_positive_float, default=1e-3)
        sp.add_argument("--tau-max", type=_positive_float, default=None, help="defaults to T")
        sp.add_argument("--steps", type=_positive_int, default=100)

    c = sub.add_parser("curve", help="averaged term structure as CSV (tau, price, yield)")
    c.add_argument("config")
    curve_grid(c)
    c.add_argument("--per-y", type=_float_list, default=None, help="dispersion levels for un-averaged yields")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_curve)

    n = sub.add_parser("nonexist", help="non-existence report (Taylor table, residuals, verdict)")
    n.add_argument("config")
    n.add_argument("--out", required=True)
    n.add_argument("--csv", default=None, help="also write the Taylor table as CSV")
    n.set_defaults(func=cmd_nonexist)

    m = sub.add_parser("mc", help="Monte-Carlo bond price: mean,stderr,paths")
    m.add_argument("config")
    m.add_argument("--paths", type=_positive_int, default=None)
    m.add_argument("--dt", type=_positive_float, default=None)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--r", type=float, required=True)
    m.add_argument("--tau", type=_positive_float, default=None)
    m.add_argument("--y0", type=float, default=None, help="fixed initial dispersion (default: sample f)")
    m.add_argument("--antithetic", action="store_true")
    m.add_argument("--out", default=None)
    m.set_defaults(func=cmd_mc)

    k = sub.add_parser("compare", help="overlay a market curve on the averaged model curve")
    k.add_argument("config")
    k.add_argument("--market", required=True)
    curve_grid(k)
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, errors.NonPositiveOmega) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT if isinstance(exc, ConfigError) else EXIT_HYPOTHESIS
    except errors.HypothesisAViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ArithmeticError, errors.NegativeVariance) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
