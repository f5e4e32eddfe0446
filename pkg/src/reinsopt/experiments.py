"""Reproducible numerical experiments with machine-checked qualitative assertions.

Each experiment writes plot-ready CSV files (comma separated, header row, '.'
decimal, LF endings) and checks the qualitative behavior programmatically:
monotonicities, regime orderings, sign and limit conditions.  ``reproduce_all``
runs the full set and writes a manifest with per-assertion outcomes; any
failed assertion makes the overall status nonzero.

Everything is deterministic given the configuration and the seed, so repeated
runs produce byte-identical outputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .backward import investment_gap, investment_gap_at, solve_j2, value_gap_delta
from .config import ModelConfig, apply_overrides, default_config, load_config
from .forward import optimal_investment
from .simulate import (
    canned_perturbations,
    density_check,
    martingale_suite,
    optimal_strategy,
    simulate_joint,
)

EXPERIMENTS = (
    "fig1-trajectory",
    "fig2-beta-sweep",
    "fig3-gamma-sweep",
    "fig4-fb-gap",
    "fig5-value-gap",
    "martingale-suite",
    "density-suite",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment run: recognized name, sparse config overrides, output dir."""

    name: str
    output_dir: str
    overrides: dict = field(default_factory=dict)
    n_paths: int = 100_000
    dt: float = 1e-3
    t_star: float = 0.5
    seed: int | None = None
    config: ModelConfig | None = None

    def __post_init__(self) -> None:
        if self.name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.name!r}; expected one of {EXPERIMENTS}")


@dataclass
class ExperimentResult:
    name: str
    files: list = field(default_factory=list)
    assertions: list = field(default_factory=list)  # (label, bool)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.assertions)

    def check(self, label: str, ok) -> None:
        self.assertions.append((label, bool(ok)))


def _write_csv(path: str, header: list[str], columns: list[np.ndarray]) -> None:
    rows = np.broadcast_arrays(*columns)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(rows[0].size):
            fh.write(",".join(_fmt(col.flat[k]) for col in rows) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    if isinstance(v, (str, np.str_)):
        return str(v)
    return repr(float(v))


def _resolve_config(spec: ExperimentSpec) -> ModelConfig:
    cfg = spec.config if spec.config is not None else default_config()
    if spec.overrides:
        cfg = apply_overrides(cfg, spec.overrides)
    if spec.seed is not None:
        cfg = replace(cfg, seed=spec.seed)
    return cfg


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run one named experiment; returns written files and assertion outcomes."""
    cfg = _resolve_config(spec)
    os.makedirs(spec.output_dir, exist_ok=True)
    runner = _RUNNERS[spec.name]
    return runner(cfg, spec)


def _fig1(cfg: ModelConfig, spec: ExperimentSpec) -> ExperimentResult:
    """One joint trajectory of the optimal strategy over the horizon."""
    res = ExperimentResult("fig1-trajectory")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    regime, claims, market = simulate_joint(cfg, spec.dt, rng)
    strat = optimal_strategy(cfg)
    t = market.times
    states = regime.states_at(t)
    pi = strat.investment(t, market.prices, states)
    theta = strat.retention(t, states)
    path = os.path.join(spec.output_dir, "fig1_trajectory.csv")
    _write_csv(path, ["t", "state", "price", "pi_star", "theta_star"],
               [t, states, market.prices, pi, theta])
    res.files.append(path)

    res.check("retention interior (0, 1)", np.all((theta > 0) & (theta < 1)))
    # piecewise decrease of the retention between consecutive switch times
    ok = True
    edges = np.concatenate([[cfg.t0], regime.jump_times, [cfg.T]])
    for lo, hi in zip(edges[:-1], edges[1:]):
        seg = theta[(t >= lo) & (t <= hi)]
        if seg.size > 1 and not np.all(np.diff(seg) < 0):
            ok = False
    res.check("retention decreasing within each regime", ok)
    res.check("price positive", np.all(market.prices > 0) and not market.absorbed)
    return res


def _fig2(cfg: ModelConfig, spec: ExperimentSpec) -> ExperimentResult:
    """Optimal investment against the elasticity, at prices below and above 1."""
    res = ExperimentResult("fig2-beta-sweep")
    betas = np.linspace(-0.975, 0.0, 40)
    for s in (0.5, 1.5):
        cols = {
            j: np.array([
                float(optimal_investment(apply_overrides(cfg, {"market.beta": b}),
                                         spec.t_star, s, j))
                for b in betas
            ])
            for j in (1, 2)
        }
        path = os.path.join(spec.output_dir, f"fig2_beta_sweep_s{s:g}.csv")
        _write_csv(path, ["beta", "pi_state1", "pi_state2"], [betas, cols[1], cols[2]])
        res.files.append(path)
        if s < 1.0:
            res.check(f"s={s:g}: increasing in beta (both regimes)",
                      np.all(np.diff(cols[1]) > 0) and np.all(np.diff(cols[2]) > 0))
        else:
            res.check(f"s={s:g}: decreasing in beta (both regimes)",
                      np.all(np.diff(cols[1]) < 0) and np.all(np.diff(cols[2]) < 0))
        res.check(f"s={s:g}: bad state invests less", np.all(cols[2] < cols[1]))
    return res


def _fig3(cfg: ModelConfig, spec: ExperimentSpec) -> ExperimentResult:
    """Optimal investment against the risk-aversion coefficient."""
    res = ExperimentResult("fig3-gamma-sweep")
    gammas = np.linspace(0.1, 2.0, 39)
    for s in (0.5, 1.5):
        cols = {
            j: np.array([
                float(optimal_investment(apply_overrides(cfg, {"gamma": g}),
                                         spec.t_star, s, j))
                for g in gammas
            ])
            for j in (1, 2)
        }
        path = os.path.join(spec.output_dir, f"fig3_gamma_sweep_s{s:g}.csv")
        _write_csv(path, ["gamma", "pi_state1", "pi_state2"], [gammas, cols[1], cols[2]])
        res.files.append(path)
        res.check(f"s={s:g}: decreasing in gamma (both regimes)",
                  np.all(np.diff(cols[1]) < 0) and np.all(np.diff(cols[2]) < 0))
        res.check(f"s={s:g}: bad state invests less", np.all(cols[2] < cols[1]))
    return res


def _fig4(cfg: ModelConfig, spec: ExperimentSpec) -> ExperimentResult:
    """Forward-minus-fixed-horizon investment gap against t, beta and gamma."""
    res = ExperimentResult("fig4-fb-gap")
    sol = solve_j2(cfg)
    ts = np.linspace(cfg.t0, cfg.T, 101)
    prices = (0.5, 1.0, 1.5)
    gaps_t = {s: np.asarray(investment_gap(sol, ts, s)) for s in prices}
    path = os.path.join(spec.output_dir, "fig4_gap_vs_t.csv")
    _write_csv(path, ["t"] + [f"gap_s{s:g}" for s in prices],
               [ts] + [gaps_t[s] for s in prices])
    res.files.append(path)
    for s in prices:
        res.check(f"s={s:g}: gap nonnegative", np.all(gaps_t[s] >= -1e-14))
        res.check(f"s={s:g}: gap nonincreasing in t", np.all(np.diff(gaps_t[s]) <= 1e-14))
        res.check(f"s={s:g}: gap vanishes at the horizon", abs(gaps_t[s][-1]) < 1e-12)

    betas = np.linspace(-0.975, 0.0, 40)
    gap_beta = {
        s: np.array([
            float(investment_gap_at(apply_overrides(cfg, {"market.beta": b}), cfg.t0, s))
            for b in betas
        ])
        for s in prices
    }
    path = os.path.join(spec.output_dir, "fig4_gap_vs_beta.csv")
    _write_csv(path, ["beta"] + [f"gap_s{s:g}" for s in prices],
               [betas] + [gap_beta[s] for s in prices])
    res.files.append(path)
    res.check("gap positive for beta < 0",
              all(np.all(gap_beta[s][:-1] > 0) for s in prices))
    res.check("gap zero at beta = 0",
              all(abs(gap_beta[s][-1]) < 1e-12 for s in prices))

    gammas = np.linspace(0.1, 2.0, 39)
    gap_gamma = {
        s: np.array([
            float(investment_gap_at(apply_overrides(cfg, {"gamma": g}), cfg.t0, s))
            for g in gammas
        ])
        for s in prices
    }
    path = os.path.join(spec.output_dir, "fig4_gap_vs_gamma.csv")
    _write_csv(path, ["gamma"] + [f"gap_s{s:g}" for s in prices],
               [gammas] + [gap_gamma[s] for s in prices])
    res.files.append(path)
    res.check("gap positive across gamma",
              all(np.all(gap_gamma[s] > 0) for s in prices))
    return res


def _fig5(cfg: ModelConfig, spec: ExperimentSpec) -> ExperimentResult:
    """Relative value gap between the fixed-horizon and forward criteria."""
    res = ExperimentResult("fig5-value-gap")
    sol = solve_j2(cfg)
    s_grid = np.linspace(0.5, 2.0, 50)
    d1 = np.asarray(value_gap_delta(sol, s_grid, 1))
    d2 = np.asarray(value_gap_delta(sol, s_grid, 2))
    path = os.path.join(spec.output_dir, "fig5_value_gap.csv")
    _write_csv(path, ["s", "delta_state1", "delta_state2"], [s_grid, d1, d2])
    res.files.append(path)
    res.check("delta decreasing in s (state 1)", np.all(np.diff(d1) < 0))
    res.check("delta decreasing in s (state 2)", np.all(np.diff(d2) < 0))
    return res


def _martingale(cfg: ModelConfig, spec: ExperimentSpec) -> ExperimentResult:
    """Martingale property of the optimal strategy, supermartingale for perturbations."""
    res = ExperimentResult("martingale-suite")
    base = optimal_strategy(cfg)
    strategies = [base] + canned_perturbations(cfg, base)
    suite = martingale_suite(cfg, strategies, spec.n_paths, spec.dt, seed=cfg.seed)
    path = os.path.join(spec.output_dir, "martingale_suite.csv")
    with open(path, "w", newline="") as fh:
        fh.write("label,estimate,target,std_error,n_paths,verdict\n")
        for rep in suite.reports:
            fh.write(rep.record() + "\n")
    res.files.append(path)

    opt = suite.report("optimal")
    res.check("optimal strategy martingale-consistent",
              opt.verdict == "martingale-consistent")
    res.check("saturated paths below 0.1%",
              all(rep.n_saturated < 1e-3 * spec.n_paths for rep in suite.reports))
    for rep in suite.reports[1:]:
        res.check(f"{rep.label}: estimate at or below target + 3 s.e.",
                  rep.estimate <= rep.target + 3.0 * rep.std_error)
    for label in ("pi-x0.5", "pi-x2"):
        gap, se = suite.paired_gap(label)
        res.check(f"{label}: strictly below optimal beyond 3 s.e. (paired)",
                  gap < -3.0 * se)
    return res


def _density(cfg: ModelConfig, spec: ExperimentSpec) -> ExperimentResult:
    """Mean-one property of the measure-change density."""
    res = ExperimentResult("density-suite")
    rep = density_check(cfg, spec.n_paths, spec.dt, seed=cfg.seed)
    path = os.path.join(spec.output_dir, "density_suite.csv")
    _write_csv(path, ["mean", "std_error", "n_paths", "n_absorbed", "n_saturated"],
               [np.array([rep.mean]), np.array([rep.std_error]),
                np.array([rep.n_paths]), np.array([rep.n_absorbed]),
                np.array([rep.n_saturated])])
    res.files.append(path)
    res.check("density mean within 3 s.e. of 1",
              abs(rep.mean - 1.0) <= 3.0 * rep.std_error)
    return res


_RUNNERS = {
    "fig1-trajectory": _fig1,
    "fig2-beta-sweep": _fig2,
    "fig3-gamma-sweep": _fig3,
    "fig4-fb-gap": _fig4,
    "fig5-value-gap": _fig5,
    "martingale-suite": _martingale,
    "density-suite": _density,
}


def reproduce_all(
    config_path: str | None,
    output_dir: str,
    seed: int | None = None,
    n_paths: int = 100_000,
    dt: float = 1e-3,
    t_star: float = 0.5,
    overrides: dict | None = None,
    names: tuple[str, ...] = EXPERIMENTS,
) -> tuple[int, dict]:
    """Run every experiment and write a manifest; nonzero status on any failure."""
    cfg = load_config(config_path) if config_path else default_config()
    manifest = {"seed": seed if seed is not None else cfg.seed, "experiments": []}
    status = 0
    for name in names:
        spec = ExperimentSpec(
            name=name,
            output_dir=os.path.join(output_dir, name),
            overrides=overrides or {},
            n_paths=n_paths,
            dt=dt,
            t_star=t_star,
            seed=seed,
            config=cfg,
        )
        result = run_experiment(spec)
        manifest["experiments"].append(
            {
                "name": name,
                "files": [os.path.relpath(f, output_dir) for f in result.files],
                "assertions": [{"label": lbl, "passed": ok} for lbl, ok in result.assertions],
                "passed": result.passed,
            }
        )
        if not result.passed:
            status = 1
    manifest["passed"] = status == 0
    os.makedirs(output_dir, exist_ok=True)
    with open(os.path.join(output_dir, "manifest.json"), "w", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status, manifest
