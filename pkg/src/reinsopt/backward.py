"""Classical fixed-horizon exponential-utility benchmark with independent markets.

The asset coefficients are frozen at their stationary averages mu_bar and
sigma_bar (weights from the chain's stationary law), while claims and premia
stay regime dependent.  The value function is -exp(-gamma x + h_B) with

    h_B(t, s, e_i) = J1(t) s^{-2 beta} + J2(t, e_i),
    J1(t) = -mu_bar^2 / (2 sigma_bar^2) * (T - t),

and J2 solving, backward from J2(T, .) = 0,

    dJ2/dt(t, e_i) = gamma [a - b(theta_bar)] - sum_j e^{J2_j - J2_i} q_ij
                     + (mu_bar^2 / 2) beta (2 beta + 1) (T - t)
                     - lambda(t, e_i) int (e^{gamma(1-theta_bar)z} - 1) F(dz).

In Jt_i = e^{J2_i} coordinates the system is linear, dJt/dt = c(t) Jt - Q Jt,
and is integrated with classical fixed-step fourth-order Runge-Kutta.  The
optimal amount invested is

    mu_bar / (gamma sigma_bar^2 s^{2 beta}) - 2 beta J1(t) / (gamma sigma_bar s^{2 beta}),

a myopic part identical to the forward strategy plus a horizon correction that
vanishes at t = T.  The correction denominator carries sigma_bar to the first
power, as stated for this benchmark.  The optimal retention coincides with the
forward one and is evaluated through the shared solver at every stage time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .claims import claim_moment, intensity
from .config import ModelConfig
from .premiums import gross_premium_a, reins_premium_b
from .regimes import stationary_distribution
from .retention import retention_on_grid


@dataclass(frozen=True)
class BackwardSolution:
    """J1/J2 values on an increasing grid over [t0, T], plus market averages."""

    T: float
    time_grid: NDArray[np.float64]
    j1_values: NDArray[np.float64]
    j2_values: NDArray[np.float64]  # shape (len(grid), K)
    mu_bar: float
    sigma_bar: float
    gamma: float
    beta: float

    def __post_init__(self) -> None:
        assert np.all(np.abs(self.j2_values[-1]) < 1e-12), "J2(T, .) must vanish"
        assert abs(self.j1_values[-1]) < 1e-12, "J1(T) must vanish"
        assert np.all(self.j1_values <= 1e-15), "J1 must be <= 0 before the horizon"

    def to_csv(self, path) -> None:
        K = self.j2_values.shape[1]
        header = "t,J1," + ",".join(f"J2_{j}" for j in range(1, K + 1))
        with open(path, "w", newline="") as fh:
            fh.write(header + "\n")
            for k, t in enumerate(self.time_grid):
                row = [repr(float(t)), repr(float(self.j1_values[k]))]
                row += [repr(float(v)) for v in self.j2_values[k]]
                fh.write(",".join(row) + "\n")


def stationary_market_averages(cfg: ModelConfig) -> tuple[float, float]:
    """(mu_bar, sigma_bar) averaged under the chain's stationary distribution."""
    p = stationary_distribution(cfg.regime)
    return float(p @ cfg.market.mu), float(p @ cfg.market.sigma)


def j1(sol: BackwardSolution, t) -> float | NDArray[np.float64]:
    """Closed form J1(t) = -mu_bar^2 / (2 sigma_bar^2) (T - t)."""
    return -(sol.mu_bar**2) / (2.0 * sol.sigma_bar**2) * (sol.T - np.asarray(t, dtype=float))


def _drift_coeff(cfg: ModelConfig, t: float, mu_bar: float) -> NDArray[np.float64]:
    """Per-state coefficient c_i(t) of the linear Jt system."""
    states = np.arange(1, cfg.regime.K + 1)
    tt = np.full(states.shape, t)
    theta, _, _ = retention_on_grid(cfg, tt, states)
    a = gross_premium_a(cfg.premia, cfg.claims, tt, states)
    b = reins_premium_b(cfg.premia, cfg.claims, tt, states, theta)
    lam = intensity(cfg.claims, tt, states)
    jump = claim_moment(cfg.claims, 0, cfg.gamma * (1.0 - theta))
    beta = cfg.market.beta
    return (
        cfg.gamma * (a - b)
        + 0.5 * mu_bar**2 * beta * (2.0 * beta + 1.0) * (cfg.T - t)
        - lam * jump
    )


def solve_j2(
    cfg: ModelConfig,
    step: float = 1e-3,
    mu_bar: float | None = None,
    sigma_bar: float | None = None,
) -> BackwardSolution:
    """Integrate the J2 system backward from the horizon.

    Runs classical RK4 with a fixed step on the exponential transform
    Jt = e^{J2}, where the system is linear with time-varying coefficients.
    Positivity of Jt is monitored; losing it signals inconsistent inputs.
    The stationary averages may be overridden.
    """
    if mu_bar is None or sigma_bar is None:
        mb, sb = stationary_market_averages(cfg)
        mu_bar = mb if mu_bar is None else mu_bar
        sigma_bar = sb if sigma_bar is None else sigma_bar
    K = cfg.regime.K
    Q = cfg.regime.Q
    n = max(1, int(round((cfg.T - cfg.t0) / step)))
    h = (cfg.T - cfg.t0) / n
    grid = cfg.t0 + h * np.arange(n + 1)
    grid[-1] = cfg.T

    def rhs(t: float, jt: NDArray[np.float64]) -> NDArray[np.float64]:
        return _drift_coeff(cfg, t, mu_bar) * jt - Q @ jt

    jt_values = np.empty((n + 1, K))
    jt = np.ones(K)
    jt_values[n] = jt
    t = cfg.T
    for k in range(n, 0, -1):
        s1 = rhs(t, jt)
        s2 = rhs(t - 0.5 * h, jt - 0.5 * h * s1)
        s3 = rhs(t - 0.5 * h, jt - 0.5 * h * s2)
        s4 = rhs(t - h, jt - h * s3)
        jt = jt - (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
        if np.any(jt <= 0.0) or not np.all(np.isfinite(jt)):
            raise RuntimeError(
                f"exponential transform left (0, inf) near t={t - h:.6g};"
                " reduce the step or check the configuration"
            )
        t -= h
        jt_values[k - 1] = jt

    j2_values = np.log(jt_values)
    j1_values = -(mu_bar**2) / (2.0 * sigma_bar**2) * (cfg.T - grid)
    return BackwardSolution(
        T=cfg.T,
        time_grid=grid,
        j1_values=j1_values,
        j2_values=j2_values,
        mu_bar=mu_bar,
        sigma_bar=sigma_bar,
        gamma=cfg.gamma,
        beta=cfg.market.beta,
    )


def j2_at(sol: BackwardSolution, t, state: int):
    """Linear interpolation of J2(., e_state) on the solved grid."""
    return np.interp(np.asarray(t, dtype=float), sol.time_grid, sol.j2_values[:, state - 1])


def backward_investment(sol: BackwardSolution, t, s):
    """Optimal fixed-horizon amount in the risky asset at (t, s)."""
    s = np.asarray(s, dtype=float)
    s2b = s ** (2.0 * sol.beta)
    myopic = sol.mu_bar / (sol.gamma * sol.sigma_bar**2 * s2b)
    correction = 2.0 * sol.beta * np.asarray(j1(sol, t)) / (sol.gamma * sol.sigma_bar * s2b)
    return myopic - correction


def investment_gap(sol: BackwardSolution, t, s):
    """Forward minus fixed-horizon investment, 2 beta J1(t) / (gamma sigma_bar s^{2 beta}).

    Nonnegative for beta in (-1, 0], vanishing at t = T or beta = 0.
    """
    s = np.asarray(s, dtype=float)
    return 2.0 * sol.beta * np.asarray(j1(sol, t)) / (sol.gamma * sol.sigma_bar * s ** (2.0 * sol.beta))


def investment_gap_at(cfg: ModelConfig, t, s, mu_bar=None, sigma_bar=None):
    """Closed-form investment gap at (t, s) without solving the J2 system.

    Only J1 enters the gap, so parameter sweeps (beta, gamma) can avoid the
    backward integration entirely.
    """
    if mu_bar is None or sigma_bar is None:
        mb, sb = stationary_market_averages(cfg)
        mu_bar = mb if mu_bar is None else mu_bar
        sigma_bar = sb if sigma_bar is None else sigma_bar
    beta = cfg.market.beta
    j1v = -(mu_bar**2) / (2.0 * sigma_bar**2) * (cfg.T - np.asarray(t, dtype=float))
    return 2.0 * beta * j1v / (cfg.gamma * sigma_bar * np.asarray(s, dtype=float) ** (2.0 * beta))


def value_gap_delta(sol: BackwardSolution, s, state: int):
    """Relative value gap at the initial time,

        Delta(s, e_i) = exp(J1(t0) s^{-2 beta} + J2(t0, e_i)) - 1,

    independent of initial wealth (the -gamma x factor cancels).
    """
    s = np.asarray(s, dtype=float)
    h_b = sol.j1_values[0] * s ** (-2.0 * sol.beta) + sol.j2_values[0, state - 1]
    return np.exp(h_b) - 1.0
