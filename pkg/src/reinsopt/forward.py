"""Forward performance machinery.

The forward utility normalized at t0 is U_t(x) = -exp(-gamma * x + h(t0, t))
with the path exponent

    h(t0, t) = int_{t0}^{t} g(v, S_v, Y_v) dv,
    g(t, s, e_i) = 0.5 * (mu_i / (sigma_i s^beta))^2 + gamma * a(t, e_i) - phi(t, e_i),
    phi(t, e_i) = gamma * b(t, e_i, theta_bar) + lambda(t, e_i) * int (e^{gamma(1-theta_bar)z} - 1) F(dz),

where theta_bar is the optimal retention.  The optimal amount invested in the
risky asset is the myopic portfolio mu_i / (gamma * sigma_i^2 * s^{2 beta}),
independent of time and horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .claims import claim_moment, intensity
from .config import ModelConfig
from .premiums import gross_premium_a, reins_premium_b
from .retention import retention_on_grid

EXP_GUARD = 700.0


@dataclass(frozen=True)
class ForwardState:
    """Snapshot of the forward exponent along a path; h_value = 0 at t = t0."""

    t: float
    h_value: float
    regime: int
    price: float


def phi(cfg: ModelConfig, t, state, theta=None):
    """Retention-adjusted drift correction phi(t, e_i); vectorized.

    ``theta`` may be supplied to reuse an existing retention evaluation,
    otherwise the optimal retention is solved at each point.
    """
    if theta is None:
        theta, _, _ = retention_on_grid(cfg, np.asarray(t, dtype=float), state)
    b = reins_premium_b(cfg.premia, cfg.claims, t, state, theta)
    lam = intensity(cfg.claims, t, state)
    jump_term = claim_moment(cfg.claims, 0, cfg.gamma * (1.0 - np.asarray(theta)))
    return cfg.gamma * b + lam * jump_term


def g_rate(cfg: ModelConfig, t, s, state, theta=None):
    """Forward exponent rate g(t, s, e_i); vectorized in (t, s, state)."""
    s = np.asarray(s, dtype=float)
    j = np.asarray(state)
    mu = cfg.market.mu[j - 1]
    sigma = cfg.market.sigma[j - 1]
    sharpe = mu / (sigma * s**cfg.market.beta)
    a = gross_premium_a(cfg.premia, cfg.claims, t, state)
    return 0.5 * sharpe**2 + cfg.gamma * a - phi(cfg, t, state, theta=theta)


def optimal_investment(cfg: ModelConfig, t, s, state):
    """Optimal forward amount in the risky asset, mu / (gamma sigma^2 s^{2 beta}).

    The time argument is kept for signature symmetry; the value depends on
    (s, e_i) only.
    """
    del t
    s = np.asarray(s, dtype=float)
    j = np.asarray(state)
    mu = cfg.market.mu[j - 1]
    sigma = cfg.market.sigma[j - 1]
    return mu / (cfg.gamma * sigma**2 * s ** (2.0 * cfg.market.beta))


def forward_utility(cfg: ModelConfig, x, h_value):
    """U(x, h) = -exp(-gamma x + h); increasing and concave in x."""
    expo = -cfg.gamma * np.asarray(x, dtype=float) + np.asarray(h_value, dtype=float)
    if np.any(expo > EXP_GUARD):
        raise OverflowError(f"utility exponent above the +-{EXP_GUARD} guard")
    return -np.exp(expo)


def accumulate_h(cfg: ModelConfig, market_path, regime_path, t0: float, t: float) -> float:
    """Trapezoidal quadrature of g along a simulated path from t0 to t.

    The market grid already contains every regime-switch time, so no interval
    straddles a jump of g; both trapezoid endpoints use the interval's state
    (the right endpoint takes the left limit of the regime there).
    """
    times = market_path.times
    if t0 < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError("requested horizon not covered by the market path")
    if t <= t0:
        return 0.0
    prices = market_path.prices
    lo = int(np.searchsorted(times, t0, side="left"))
    hi = int(np.searchsorted(times, t, side="right"))
    seg_t = times[lo:hi]
    seg_s = prices[lo:hi]
    # clip to the exact endpoints, interpolating the price if needed
    if seg_t.size == 0 or seg_t[0] > t0:
        seg_t = np.concatenate([[t0], seg_t])
        seg_s = np.concatenate([[np.interp(t0, times, prices)], seg_s])
    if seg_t[-1] < t:
        seg_t = np.concatenate([seg_t, [t]])
        seg_s = np.concatenate([seg_s, [np.interp(t, times, prices)]])
    states = regime_path.states_at(seg_t[:-1])
    g_left = g_rate(cfg, seg_t[:-1], seg_s[:-1], states)
    g_right = g_rate(cfg, seg_t[1:], seg_s[1:], states)
    dt = np.diff(seg_t)
    return float(np.sum(0.5 * (g_left + g_right) * dt))
