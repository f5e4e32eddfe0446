import numpy as np
import pytest

from reinsopt import PremiumSpec, gross_premium_a, reins_premium_b, reins_premium_db
from reinsopt.claims import ClaimModel

from oracles import quad_moment

CLAIMS = ClaimModel()  # mean-1 truncated exponential, zmax 10, exponential intensity


class TestGrossPremium:
    def test_intensity_adjusted_value(self):
        spec = PremiumSpec(deltaI=0.05, deltaR=0.1)
        m2 = quad_moment(CLAIMS, 2, 0.0)
        lam = np.e  # state 1 at t = 0
        want = lam * 1.0 + 2 * 0.05 * lam * m2 * (1 + lam)
        assert gross_premium_a(spec, CLAIMS, 0.0, 1) == pytest.approx(want, rel=1e-10)

    def test_zero_loading_reduces_to_expected_claims(self):
        with pytest.warns(UserWarning):
            spec = PremiumSpec(deltaI=0.0, deltaR=0.0)
        lam = np.e**2
        assert gross_premium_a(spec, CLAIMS, 0.0, 2) == pytest.approx(lam, rel=1e-10)

    def test_expected_value_principle(self):
        spec = PremiumSpec(principle="expected-value", deltaI=0.3, deltaR=0.4)
        lam = np.e
        assert gross_premium_a(spec, CLAIMS, 0.0, 1) == pytest.approx(1.3 * lam, rel=1e-10)

    def test_nonnegative_and_continuous(self):
        ts = np.linspace(0.0, 1.0, 301)
        for principle in ("intensity-adjusted-variance", "expected-value", "variance"):
            spec = PremiumSpec(principle=principle)
            a = gross_premium_a(spec, CLAIMS, ts, 1)
            assert np.all(a >= 0)
            assert np.max(np.abs(np.diff(a))) < 0.15  # no jumps on a fine grid


class TestReinsurancePremium:
    def test_zero_retention_costs_nothing(self):
        for principle in ("intensity-adjusted-variance", "expected-value", "variance"):
            spec = PremiumSpec(principle=principle)
            assert reins_premium_b(spec, CLAIMS, 0.37, 2, 0.0) == 0.0

    def test_full_protection_value(self):
        spec = PremiumSpec()
        m2 = quad_moment(CLAIMS, 2, 0.0)
        lam = np.e
        want = lam + 2 * 0.1 * lam * m2 * (1 + lam)
        assert reins_premium_b(spec, CLAIMS, 0.0, 1, 1.0) == pytest.approx(want, rel=1e-10)

    def test_convexity_midpoint(self):
        spec = PremiumSpec()
        mid = reins_premium_b(spec, CLAIMS, 0.0, 1, 0.5)
        chord = 0.5 * (
            reins_premium_b(spec, CLAIMS, 0.0, 1, 0.0)
            + reins_premium_b(spec, CLAIMS, 0.0, 1, 1.0)
        )
        assert mid < chord

    def test_nondecreasing_in_theta(self):
        thetas = np.linspace(0.0, 1.0, 101)
        for principle in ("intensity-adjusted-variance", "expected-value", "variance"):
            spec = PremiumSpec(principle=principle)
            db, _ = reins_premium_db(spec, CLAIMS, 0.5, 2, thetas)
            assert np.all(db >= 0)

    def test_marginal_cost_at_one_exceeds_expected_claims(self):
        # what makes full protection never optimal under positive loading
        spec = PremiumSpec()
        ts = np.linspace(0.0, 1.0, 51)
        for j in (1, 2):
            db1, _ = reins_premium_db(spec, CLAIMS, ts, j, 1.0)
            lam = CLAIMS.lambda0 * np.exp(CLAIMS.k1 * ts + j * CLAIMS.k2)
            assert np.all(db1 > lam * 1.0)


class TestDerivatives:
    def test_value_at_zero(self):
        spec = PremiumSpec()
        db, _ = reins_premium_db(spec, CLAIMS, 0.0, 1, 0.0)
        assert db == pytest.approx(np.e * 1.0, rel=1e-10)

    @pytest.mark.parametrize(
        "principle", ["intensity-adjusted-variance", "expected-value", "variance"]
    )
    def test_matches_finite_differences(self, principle):
        spec = PremiumSpec(principle=principle)
        rng = np.random.Generator(np.random.PCG64(11))
        h1, h2 = 1e-6, 1e-4  # wider stencil for the curvature: roundoff scales 1/h^2
        for _ in range(20):
            t = float(rng.uniform(0.0, 1.0))
            j = int(rng.integers(1, 3))
            theta = float(rng.uniform(h2, 1.0 - h2))
            db, d2b = reins_premium_db(spec, CLAIMS, t, j, theta)
            fd1 = (
                reins_premium_b(spec, CLAIMS, t, j, theta + h1)
                - reins_premium_b(spec, CLAIMS, t, j, theta - h1)
            ) / (2 * h1)
            fd2 = (
                reins_premium_b(spec, CLAIMS, t, j, theta + h2)
                - 2 * reins_premium_b(spec, CLAIMS, t, j, theta)
                + reins_premium_b(spec, CLAIMS, t, j, theta - h2)
            ) / h2**2
            assert db == pytest.approx(fd1, rel=1e-6)
            assert d2b == pytest.approx(fd2, rel=1e-4, abs=1e-5)

    def test_zero_reinsurer_loading_kills_curvature(self):
        with pytest.warns(UserWarning):
            spec = PremiumSpec(deltaR=0.0)
        _, d2b = reins_premium_db(spec, CLAIMS, 0.2, 1, 0.6)
        assert d2b == 0.0


class TestSpecGuards:
    def test_unknown_principle(self):
        with pytest.raises(ValueError, match="principle"):
            PremiumSpec(principle="exponential")

    def test_negative_loading(self):
        with pytest.raises(ValueError):
            PremiumSpec(deltaI=-0.1)

    def test_warns_on_inverted_loadings(self):
        with pytest.warns(UserWarning, match="deltaR"):
            PremiumSpec(deltaI=0.2, deltaR=0.1)
