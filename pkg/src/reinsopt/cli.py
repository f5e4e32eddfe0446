"""Command-line front door: validation, solving, simulation and reproduction."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .backward import backward_investment, solve_j2
from .config import apply_overrides, default_config, load_config, validate_assumptions
from .experiments import EXPERIMENTS, reproduce_all
from .forward import optimal_investment
from .retention import curve_to_csv, solve_retention
from .simulate import (
    canned_perturbations,
    density_check,
    martingale_suite,
    optimal_strategy,
    simulate_joint,
    simulate_wealth,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", default=None, help="configuration file")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override one config key (repeatable)")


def _load(args) -> "ModelConfig":
    cfg = load_config(args.config) if args.config else default_config()
    pairs = {}
    for item in args.overrides:
        if "=" not in item:
            raise SystemExit(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value.strip()
    if pairs:
        cfg = apply_overrides(cfg, pairs)
    if args.seed is not None:
        cfg = apply_overrides(cfg, {"seed": str(args.seed)})
    return cfg


def _cmd_validate(args) -> int:
    cfg = _load(args)
    report = validate_assumptions(cfg)
    if report.passed:
        print("validation: PASS (all premium assumptions hold on the sample grid)")
        return 0
    print("validation: FAIL")
    for rule, msg, witness in report.violations:
        print(f"  [{rule}] {msg}  witness (t, state, theta) = {witness}")
    return 1


def _cmd_solve(args) -> int:
    cfg = _load(args)
    times = np.linspace(cfg.t0, cfg.T, args.points)
    print("optimal retention theta_bar(t, state):")
    header = "      t  " + "  ".join(f"state {j}" for j in range(1, cfg.regime.K + 1))
    print(header)
    for t in times:
        vals = [solve_retention(cfg, float(t), j).theta_star for j in range(1, cfg.regime.K + 1)]
        print(f"  {t:7.4f}  " + "  ".join(f"{v:7.5f}" for v in vals))
    s_grid = np.linspace(0.5, 2.0, 7)
    print("\noptimal investment pi_star(s, state) (time-independent):")
    print("      s  " + "  ".join(f"state {j}" for j in range(1, cfg.regime.K + 1)))
    for s in s_grid:
        vals = [float(optimal_investment(cfg, cfg.t0, float(s), j))
                for j in range(1, cfg.regime.K + 1)]
        print(f"  {s:7.4f}  " + "  ".join(f"{v:8.4f}" for v in vals))
    sol = solve_j2(cfg, step=args.dt)
    print(f"\nfixed-horizon benchmark at t0, s0={cfg.market.s0}: "
          f"pi_B = {float(backward_investment(sol, cfg.t0, cfg.market.s0)):.6f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        curve_path = os.path.join(args.out, "retention_curve.csv")
        curve_to_csv(cfg, times, curve_path)
        sol_path = os.path.join(args.out, "backward_solution.csv")
        sol.to_csv(sol_path)
        print(f"wrote {curve_path} and {sol_path}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    regime, claims, market = simulate_joint(cfg, args.dt, rng)
    wealth = simulate_wealth(cfg, market, regime, claims, optimal_strategy(cfg))
    os.makedirs(args.out, exist_ok=True)
    regime.to_csv(os.path.join(args.out, "regime.csv"))
    claims.to_csv(os.path.join(args.out, "claims.csv"))
    market.to_csv(os.path.join(args.out, "market.csv"))
    wealth.to_csv(os.path.join(args.out, "wealth.csv"))
    print(f"simulated one joint path: {regime.jump_times.size} regime switches, "
          f"{claims.times.size} claims, terminal wealth {wealth.wealth[-1]:.6f}")
    print(f"wrote regime.csv, claims.csv, market.csv, wealth.csv to {args.out}")
    return 0


def _cmd_check_martingale(args) -> int:
    cfg = _load(args)
    base = optimal_strategy(cfg)
    strategies = [base] + canned_perturbations(cfg, base)
    suite = martingale_suite(cfg, strategies, args.paths, args.dt, seed=cfg.seed)
    print("label,estimate,target,std_error,n_paths,verdict")
    bad = False
    for rep in suite.reports:
        print(rep.record())
        if rep.verdict == "violation":
            bad = True
    if suite.reports[0].verdict != "martingale-consistent":
        bad = True
    return 1 if bad else 0


def _cmd_check_density(args) -> int:
    cfg = _load(args)
    rep = density_check(cfg, args.paths, args.dt, seed=cfg.seed)
    z = (rep.mean - 1.0) / rep.std_error if rep.std_error else 0.0
    print(f"density mean = {rep.mean:.6f} (s.e. {rep.std_error:.6f}, n = {rep.n_paths}, "
          f"z = {z:+.2f})")
    return 0 if abs(rep.mean - 1.0) <= 3.0 * rep.std_error else 1


def _cmd_reproduce(args) -> int:
    names = (args.experiment,) if args.experiment else EXPERIMENTS
    pairs = {}
    for item in args.overrides:
        if "=" not in item:
            raise SystemExit(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value.strip()
    status, manifest = reproduce_all(
        args.config,
        args.out,
        seed=args.seed,
        n_paths=args.paths,
        dt=args.dt,
        t_star=args.tstar,
        overrides=pairs,
        names=names,
    )
    for exp in manifest["experiments"]:
        mark = "PASS" if exp["passed"] else "FAIL"
        print(f"[{mark}] {exp['name']} ({len(exp['files'])} files)")
        for item in exp["assertions"]:
            if not item["passed"]:
                print(f"       failed: {item['label']}")
    print(f"manifest: {os.path.join(args.out, 'manifest.json')}")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reinsopt",
        description="Forward-preference investment/reinsurance toolkit for a "
                    "regime-switching CEV market",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the premium assumptions of a config")
    _add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("solve", help="print the retention curve and investment table")
    _add_common(p)
    p.add_argument("--points", type=int, default=11, help="time-grid points")
    p.add_argument("--dt", type=float, default=1e-3, help="backward ODE step")
    p.add_argument("--out", metavar="DIR", default=None, help="also write CSV output")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("simulate", help="simulate one joint optimal-strategy path")
    _add_common(p)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--out", metavar="DIR", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("check-martingale", help="Monte Carlo martingale/supermartingale suite")
    _add_common(p)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.set_defaults(func=_cmd_check_martingale)

    p = sub.add_parser("check-density", help="Monte Carlo mean-one density check")
    _add_common(p)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.set_defaults(func=_cmd_check_density)

    p = sub.add_parser("reproduce", help="run the numbered experiments and write a manifest")
    _add_common(p)
    p.add_argument("--out", metavar="DIR", required=True)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--tstar", type=float, default=0.5,
                   help="evaluation date for the sweep experiments")
    p.add_argument("--experiment", choices=EXPERIMENTS, default=None,
                   help="run a single experiment instead of all")
    p.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
