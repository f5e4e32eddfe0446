import math

import numpy as np
import pytest

from reinsopt import (
    RegimePath,
    apply_overrides,
    simulate_claims,
    simulate_chain,
    simulate_joint,
    simulate_market,
    simulate_wealth,
)
from reinsopt.simulate import (
    PRICE_FLOOR,
    RetentionInterpolant,
    Strategy,
    _euler_prices,
    build_time_grid,
    canned_perturbations,
    density_check,
    martingale_check,
    martingale_suite,
    optimal_strategy,
)


def _rng(seed=0):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _const_strategy(pi=0.0, theta=1.0, label="const"):
    return Strategy(
        label=label,
        pi_fn=lambda t, s, j: np.broadcast_to(pi, np.shape(t)),
        theta_fn=lambda t, j: np.broadcast_to(theta, np.shape(t)),
    )


class TestGrid:
    def test_base_grid_endpoints(self):
        grid = build_time_grid(0.0, 1.0, 1e-2)
        assert grid[0] == 0.0 and grid[-1] == 1.0 and grid.size == 101

    def test_events_inserted_once(self, cfg):
        rng = _rng(3)
        regime, claims, market = simulate_joint(cfg, 1e-2, rng)
        for ev in np.concatenate([regime.jump_times, claims.times]):
            assert np.count_nonzero(market.times == ev) == 1

    def test_event_outside_horizon_rejected(self):
        with pytest.raises(ValueError):
            build_time_grid(0.0, 1.0, 0.1, [1.5])


class TestEulerCore:
    def test_no_noise_limit_tracks_ode(self, cfg):
        # vanishing volatility turns the step into deterministic growth
        tiny = apply_overrides(cfg, {"market.sigma": "1e-12, 1e-12"})
        regime = RegimePath(np.array([]), np.array([1]), 0.0, 1.0, 2)
        for dt in (1e-2, 1e-3):
            market = simulate_market(tiny, regime, dt, _rng(1))
            want = np.exp(tiny.market.mu[0] * 1.0)
            assert market.prices[-1] == pytest.approx(want, abs=3 * dt)

    def test_flat_elasticity_lognormal_moments(self):
        # beta = 0 with constant coefficients is geometric Brownian motion
        mu, sigma, n, dt = 0.1, 0.2, 100_000, 1e-3
        times = np.broadcast_to(np.linspace(0.0, 1.0, 1001), (n, 1001))
        states = np.ones((n, 1000), dtype=np.int64)
        dW = _rng(12).standard_normal((n, 1000)) * math.sqrt(dt)
        prices, absorbed = _euler_prices(
            times, states, dW, np.array([mu]), np.array([sigma]), 0.0, 1.0
        )
        assert not absorbed.any()
        logs = np.log(prices[:, -1])
        se_mean = logs.std(ddof=1) / math.sqrt(n)
        assert abs(logs.mean() - (mu - 0.5 * sigma**2)) < 3 * se_mean
        var = logs.var(ddof=1)
        se_var = np.sqrt(np.var((logs - logs.mean()) ** 2, ddof=1) / n)
        assert abs(var - sigma**2) < 3 * se_var

    def test_strong_convergence_rate(self, cfg):
        # against a shared-increment dt/16 reference the Euler error behaves
        # like sqrt(dt): quadrupling the step roughly doubles the error
        n, n_fine = 4000, 1024
        dW_fine = _rng(7).standard_normal((n, n_fine)) / math.sqrt(n_fine)
        mu, sigma, beta = cfg.market.mu, cfg.market.sigma, cfg.market.beta
        states_of = lambda cols: np.ones((n, cols), dtype=np.int64)
        grid_of = lambda cols: np.broadcast_to(np.linspace(0.0, 1.0, cols + 1), (n, cols + 1))
        ref, _ = _euler_prices(grid_of(n_fine), states_of(n_fine), dW_fine, mu, sigma, beta, 1.0)
        errors = []
        for factor in (16, 64):
            cols = n_fine // factor
            dW = dW_fine.reshape(n, cols, factor).sum(axis=2)
            approx, _ = _euler_prices(grid_of(cols), states_of(cols), dW, mu, sigma, beta, 1.0)
            errors.append(np.mean(np.abs(approx[:, -1] - ref[:, -1])))
        ratio = errors[1] / errors[0]
        assert 1.4 < ratio < 3.0, ratio

    def test_absorption_flagged_and_floored(self):
        # brutal volatility forces some paths onto the floor
        times = np.broadcast_to(np.linspace(0.0, 1.0, 101), (500, 101))
        states = np.ones((500, 100), dtype=np.int64)
        dW = _rng(8).standard_normal((500, 100)) * math.sqrt(1e-2)
        prices, absorbed = _euler_prices(
            times, states, dW, np.array([0.0]), np.array([5.0]), -0.5, 0.05
        )
        assert absorbed.any()
        assert prices.min() >= PRICE_FLOOR


class TestWealth:
    def test_fully_reinsured_flat_book_is_constant(self, cfg):
        # expected-value premia with equal loadings make a = b(., ., 1); with
        # no investment and full protection the wealth cannot move
        with pytest.warns(UserWarning):
            flat = apply_overrides(
                cfg,
                {"premia.principle": "expected-value",
                 "premia.deltaI": "0.1", "premia.deltaR": "0.1"},
            )
        rng = _rng(21)
        regime, claims, market = simulate_joint(flat, 1e-2, rng)
        wealth = simulate_wealth(flat, market, regime, claims, _const_strategy())
        assert np.max(np.abs(wealth.wealth - flat.x0)) < 1e-12

    def test_uninvested_fully_reinsured_is_deterministic(self, cfg):
        from reinsopt.premiums import gross_premium_a, reins_premium_b

        rng = _rng(22)
        regime, claims, market = simulate_joint(cfg, 1e-3, rng)
        wealth = simulate_wealth(cfg, market, regime, claims, _const_strategy())
        tl = market.times[:-1]
        states = regime.states_at(tl)
        a = gross_premium_a(cfg.premia, cfg.claims, tl, states)
        b = reins_premium_b(cfg.premia, cfg.claims, tl, states, 1.0)
        want = cfg.x0 + np.sum((a - b) * np.diff(market.times))
        assert wealth.wealth[-1] == pytest.approx(want, rel=1e-12)

    def test_claim_jump_bookkeeping(self, cfg):
        # with zero retention each claim knocks exactly its size off the wealth
        rng = _rng(23)
        for _ in range(20):
            regime, claims, market = simulate_joint(cfg, 1e-2, rng)
            if claims.times.size:
                break
        assert claims.times.size
        strat = _const_strategy(pi=0.0, theta=0.0)
        wealth = simulate_wealth(cfg, market, regime, claims, strat)
        idx = np.searchsorted(market.times, claims.times)
        tl = market.times[:-1]
        states = regime.states_at(tl)
        from reinsopt.premiums import gross_premium_a, reins_premium_b

        drift = (
            gross_premium_a(cfg.premia, cfg.claims, tl, states)
            - reins_premium_b(cfg.premia, cfg.claims, tl, states, 0.0)
        ) * np.diff(market.times)
        for k, z in zip(idx, claims.sizes):
            jump = wealth.wealth[k] - wealth.wealth[k - 1] - drift[k - 1]
            assert jump == pytest.approx(-z, abs=1e-12)

    def test_claims_must_sit_on_grid(self, cfg):
        rng = _rng(24)
        regime = simulate_chain(cfg.regime, cfg.t0, cfg.T, rng)
        claims = simulate_claims(cfg.claims, regime, cfg.t0, cfg.T, rng)
        market = simulate_market(cfg, regime, 1e-2, rng)  # grid without claim times
        if claims.times.size:
            with pytest.raises(ValueError, match="grid"):
                simulate_wealth(cfg, market, regime, claims, _const_strategy())

    def test_terminal_matches_increment_sum(self, cfg):
        rng = _rng(25)
        regime, claims, market = simulate_joint(cfg, 1e-3, rng)
        strat = optimal_strategy(cfg)
        wealth = simulate_wealth(cfg, market, regime, claims, strat)
        rebuilt = cfg.x0 + math.fsum(np.diff(wealth.wealth))
        assert abs(rebuilt - wealth.wealth[-1]) < 1e-10 * max(1.0, abs(wealth.wealth[-1]))


class TestRetentionInterpolant:
    def test_matches_exact_solver_at_knots_and_between(self, cfg):
        from reinsopt.retention import retention_on_grid

        interp = RetentionInterpolant(cfg, n_knots=4097)
        ts = np.linspace(cfg.t0, cfg.T, 997)  # mostly off-knot points
        for j in (1, 2):
            exact, _, _ = retention_on_grid(cfg, ts, j)
            got = interp(ts, np.full(ts.shape, j))
            assert np.max(np.abs(got - exact)) < 1e-7


class TestMonteCarlo:
    def test_reproducible_bitwise(self, cfg):
        strat = optimal_strategy(cfg)
        r1 = martingale_check(cfg, strat, 400, 5e-3, seed=99)
        r2 = martingale_check(cfg, strat, 400, 5e-3, seed=99)
        assert r1 == r2

    def test_batch_partition_invariance(self, cfg):
        strat = optimal_strategy(cfg)
        r1 = martingale_check(cfg, strat, 500, 5e-3, seed=98, batch_size=500)
        r2 = martingale_check(cfg, strat, 500, 5e-3, seed=98, batch_size=64)
        assert r1.estimate == r2.estimate and r1.std_error == r2.std_error

    def test_optimal_smoke(self, cfg):
        rep = martingale_check(cfg, optimal_strategy(cfg), 4000, 2e-3, seed=11)
        assert rep.verdict == "martingale-consistent"
        assert rep.n_saturated == 0 and rep.n_absorbed == 0

    def test_suite_supermartingale_direction(self, cfg):
        base = optimal_strategy(cfg)
        suite = martingale_suite(
            cfg, [base] + canned_perturbations(cfg, base), 4000, 2e-3, seed=12
        )
        for rep in suite.reports[1:]:
            assert rep.estimate <= rep.target + 3 * rep.std_error, rep.label

    def test_record_line(self, cfg):
        rep = martingale_check(cfg, optimal_strategy(cfg), 300, 1e-2, seed=13)
        fields = rep.record().split(",")
        assert fields[0] == "optimal" and fields[5] == rep.verdict
        assert float(fields[1]) == rep.estimate

    def test_density_exact_without_drift(self, cfg):
        calm = apply_overrides(cfg, {"market.mu": "0.0, 0.0"})
        rep = density_check(calm, 500, 5e-3, seed=14)
        assert rep.mean == 1.0 and rep.std_error == 0.0

    def test_density_smoke(self, cfg):
        rep = density_check(cfg, 4000, 2e-3, seed=15)
        assert abs(rep.mean - 1.0) <= 3 * rep.std_error

    def test_absorbed_paths_reported_and_excluded(self, cfg):
        wild = apply_overrides(cfg, {"market.sigma": "4.0, 5.0", "market.s0": "0.05"})
        rep = density_check(wild, 300, 1e-2, seed=16)
        assert rep.n_absorbed > 0
        assert rep.n_paths + rep.n_absorbed + rep.n_saturated == 300
