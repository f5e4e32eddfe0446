import numpy as np
import pytest

from reinsopt import (
    Region,
    apply_overrides,
    classify_region,
    retention_curve,
    retention_on_grid,
    solve_retention,
)
from reinsopt.retention import (
    FOC_TOL,
    curve_to_csv,
    foc_residual,
    psi_theta,
    retention_time_derivative,
)

from oracles import grid_argmax_retention, random_validated_config

# grid-argmax oracle values (1e5-point grid over the reinsurance maximand)
THETA_0_E1 = 0.37279975649347713
THETA_0_E2 = 0.23609628131397664


class TestClassification:
    def test_default_model_is_interior_everywhere(self, cfg):
        for t in np.linspace(cfg.t0, cfg.T, 25):
            for j in (1, 2):
                assert classify_region(cfg, float(t), j) is Region.INTERIOR

    def test_zero_loading_gives_full_protection(self, cfg):
        # b(theta) = lam E[Z] theta exactly: marginal cost equals expected claims
        with pytest.warns(UserWarning):
            flat = apply_overrides(
                cfg,
                {
                    "premia.principle": "expected-value",
                    "premia.deltaI": "0.0",
                    "premia.deltaR": "0.0",
                },
            )
        assert classify_region(flat, 0.0, 1) is Region.D1
        sol = solve_retention(flat, 0.0, 1)
        assert sol.theta_star == 1.0 and sol.region is Region.D1

    def test_steep_premium_gives_no_protection(self, cfg):
        # small risk aversion and a large loading put every point in D0
        steep = apply_overrides(
            cfg,
            {
                "premia.principle": "expected-value",
                "premia.deltaI": "0.05",
                "premia.deltaR": "2.0",
                "gamma": "0.05",
            },
        )
        assert classify_region(steep, 0.0, 1) is Region.D0
        sol = solve_retention(steep, 0.0, 1)
        assert sol.theta_star == 0.0 and sol.region is Region.D0


class TestInteriorSolve:
    def test_matches_grid_argmax_state1(self, cfg):
        sol = solve_retention(cfg, 0.0, 1)
        grid_theta, step = grid_argmax_retention(cfg, 0.0, 1, n_grid=10**5)
        assert abs(sol.theta_star - grid_theta) <= step
        assert sol.theta_star == pytest.approx(THETA_0_E1, abs=1e-4)

    def test_matches_grid_argmax_state2(self, cfg):
        sol = solve_retention(cfg, 0.0, 2)
        assert sol.theta_star == pytest.approx(THETA_0_E2, abs=1e-4)

    def test_residual_below_tolerance(self, cfg):
        for t in (0.0, 0.31, 0.77, 1.0):
            for j in (1, 2):
                sol = solve_retention(cfg, t, j)
                assert abs(sol.residual) < FOC_TOL
                assert abs(foc_residual(cfg, t, j, sol.theta_star)) < FOC_TOL

    def test_concavity_witness(self, cfg):
        # the maximand curves downward at the solution
        h = 1e-5
        for j in (1, 2):
            th = solve_retention(cfg, 0.5, j).theta_star
            second = (
                psi_theta(cfg, 0.5, j, th + h)
                - 2 * psi_theta(cfg, 0.5, j, th)
                + psi_theta(cfg, 0.5, j, th - h)
            ) / h**2
            assert second < 0

    def test_bounds_always_hold(self, cfg):
        ts = np.linspace(cfg.t0, cfg.T, 101)
        for j in (1, 2):
            theta, _, _ = retention_on_grid(cfg, ts, j)
            assert np.all((theta >= 0.0) & (theta <= 1.0))

    def test_scalar_and_grid_paths_identical(self, cfg):
        # the fixed-horizon benchmark shares this code path; values must agree bitwise
        ts = np.linspace(cfg.t0, cfg.T, 17)
        for j in (1, 2):
            theta, _, _ = retention_on_grid(cfg, ts, j)
            for k, t in enumerate(ts):
                assert solve_retention(cfg, float(t), j).theta_star == theta[k]


class TestCurves:
    def test_strictly_decreasing_in_time(self, cfg):
        ts = np.linspace(cfg.t0, cfg.T, 100)
        for j in (1, 2):
            curve = [s.theta_star for s in retention_curve(cfg, j, ts)]
            assert np.all(np.diff(curve) < 0)

    def test_time_homogeneous_intensity_gives_flat_curve(self, cfg):
        flat = apply_overrides(cfg, {"claims.k1": "0.0"})
        ts = np.linspace(0.0, 1.0, 20)
        curve = np.array([s.theta_star for s in retention_curve(flat, 1, ts)])
        assert np.max(np.abs(np.diff(curve))) < 1e-12

    def test_bad_state_retains_less(self, cfg):
        # higher intensity makes protection steeper, so the retention drops
        ts = np.linspace(cfg.t0, cfg.T, 100)
        c1 = np.array([s.theta_star for s in retention_curve(cfg, 1, ts)])
        c2 = np.array([s.theta_star for s in retention_curve(cfg, 2, ts)])
        assert np.all(c2 < c1)

    def test_grid_must_increase(self, cfg):
        with pytest.raises(ValueError):
            retention_curve(cfg, 1, [0.5, 0.2])
        with pytest.raises(ValueError):
            retention_curve(cfg, 1, [0.5, 1.5])

    def test_csv_export(self, cfg, tmp_path):
        out = tmp_path / "curve.csv"
        ts = np.linspace(cfg.t0, cfg.T, 5)
        curve_to_csv(cfg, ts, out)
        text = out.read_text()
        lines = text.splitlines()
        assert lines[0] == "t,state,theta_star,region"
        assert len(lines) == 1 + 2 * ts.size
        assert "np." not in text  # plain decimal floats only


class TestImplicitDerivative:
    def test_negative_under_default_model(self, cfg):
        ts = np.linspace(cfg.t0, cfg.T, 40)
        for j in (1, 2):
            d = retention_time_derivative(cfg, ts, j)
            assert np.all(d < 0)

    def test_matches_finite_difference(self, cfg):
        # solver tolerance ~1e-11 on theta limits the attainable FD accuracy
        h = 1e-5
        for j in (1, 2):
            for t in (0.1, 0.5, 0.9):
                up = solve_retention(cfg, t + h, j).theta_star
                dn = solve_retention(cfg, t - h, j).theta_star
                fd = (up - dn) / (2 * h)
                d = float(retention_time_derivative(cfg, np.asarray([t]), j)[0])
                assert d == pytest.approx(fd, rel=1e-3)

    def test_zero_for_scale_invariant_principles(self, cfg):
        # expected-value and variance premia scale with the intensity, so the
        # first-order condition loses its time dependence
        for principle in ("expected-value", "variance"):
            alt = apply_overrides(cfg, {"premia.principle": principle,
                                        "premia.deltaI": "0.1",
                                        "premia.deltaR": "0.3"})
            d = retention_time_derivative(alt, np.asarray([0.4]), 1)
            # theta carries the solver tolerance, so exact zero is not attainable
            assert d[0] == pytest.approx(0.0, abs=1e-9)


class TestArgmaxEquivalence:
    def test_random_validated_configs(self):
        rng = np.random.Generator(np.random.PCG64(2026))
        for _ in range(10):
            cfg = random_validated_config(rng)
            t = float(rng.uniform(cfg.t0, cfg.T))
            j = int(rng.integers(1, cfg.regime.K + 1))
            sol = solve_retention(cfg, t, j)
            grid_theta, step = grid_argmax_retention(cfg, t, j, n_grid=10**4)
            assert abs(sol.theta_star - grid_theta) <= step, (
                f"solver {sol.theta_star} vs grid {grid_theta} ({sol.region})"
            )
