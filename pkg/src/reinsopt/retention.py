"""Optimal proportional-reinsurance retention.

For each (t, e_i) the optimal retention either sits at an endpoint or solves
the first-order condition

    db/dtheta(t, e_i, theta) = lambda(t, e_i) * int z e^{gamma(1-theta)z} F(dz).

Endpoint regions:

    D0 (theta = 0): lambda * E[Z e^{gamma Z}] <= db/dtheta(t, e_i, 0)
    D1 (theta = 1): db/dtheta(t, e_i, 1) <= lambda * E[Z]

Outside both, the residual of the first-order condition is strictly increasing
in theta (the concavity condition checked by ``validate_assumptions``), changes
sign on (0, 1), and the unique root is found by a bracketed secant/bisection
hybrid.  The same solution is the optimal retention of the classical
fixed-horizon exponential-utility problem, so there is a single code path for
both criteria.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .claims import claim_moment, intensity, tilted_moment
from .config import ModelConfig
from .premiums import reins_premium_b, reins_premium_db

FOC_TOL = 1e-10
MAX_ITER = 200


class BracketError(RuntimeError):
    """First-order condition failed to bracket a root on a validated config."""


class Region(str, Enum):
    D0 = "D0"
    D1 = "D1"
    INTERIOR = "interior"


@dataclass(frozen=True)
class RetentionSolution:
    """Retention at one (t, e_i) point with solver diagnostics."""

    theta_star: float
    region: Region
    residual: float
    iterations: int

    def __post_init__(self) -> None:
        assert 0.0 <= self.theta_star <= 1.0
        if self.region is Region.D0:
            assert self.theta_star == 0.0
        elif self.region is Region.D1:
            assert self.theta_star == 1.0
        else:
            assert abs(self.residual) < FOC_TOL


def foc_residual(cfg: ModelConfig, t, state, theta):
    """db/dtheta minus the tilted-claim side; negative below the root."""
    db, _ = reins_premium_db(cfg.premia, cfg.claims, t, state, theta)
    lam = intensity(cfg.claims, t, state)
    return db - lam * tilted_moment(cfg.claims, 1, cfg.gamma * (1.0 - np.asarray(theta)))


def _region_masks(cfg: ModelConfig, t, state):
    t = np.asarray(t, dtype=float)
    state = np.asarray(state)
    lam = intensity(cfg.claims, t, state)
    db0, _ = reins_premium_db(cfg.premia, cfg.claims, t, state, 0.0)
    db1, _ = reins_premium_db(cfg.premia, cfg.claims, t, state, 1.0)
    ez = tilted_moment(cfg.claims, 1, 0.0)
    ez_tilt = tilted_moment(cfg.claims, 1, cfg.gamma)
    in_d0 = lam * ez_tilt <= db0
    # degenerate overlap resolves to D0: the cheaper contract at equal utility
    in_d1 = (db1 <= lam * ez) & ~in_d0
    return in_d0, in_d1


def classify_region(cfg: ModelConfig, t: float, state: int) -> Region:
    """Endpoint/interior classification of a single (t, e_i) point."""
    in_d0, in_d1 = _region_masks(cfg, t, state)
    if in_d0:
        return Region.D0
    if in_d1:
        return Region.D1
    return Region.INTERIOR


def retention_on_grid(cfg: ModelConfig, t, state, tol: float = FOC_TOL):
    """Vectorized retention solve over arrays of times and 1-based states.

    Returns (theta, residual, iterations).  Endpoint regions get their exact
    endpoint and a residual of 0 by convention; interior points are solved by
    a bracketed secant step with bisection fallback until every residual is
    below ``tol``.
    """
    t = np.asarray(t, dtype=float)
    state = np.broadcast_to(np.asarray(state), t.shape) if t.shape else np.asarray(state)
    in_d0, in_d1 = _region_masks(cfg, t, state)
    interior = ~(in_d0 | in_d1)

    theta = np.where(in_d1, 1.0, 0.0)
    residual = np.zeros_like(theta, dtype=float)
    iterations = 0
    if not np.any(interior):
        return theta, residual, iterations

    ti = t[interior] if t.shape else t
    si = state[interior] if t.shape else state
    lo = np.zeros(ti.shape)
    hi = np.ones(ti.shape)
    f_lo = foc_residual(cfg, ti, si, lo)
    f_hi = foc_residual(cfg, ti, si, hi)
    if np.any(f_lo >= 0) or np.any(f_hi <= 0):
        raise BracketError(
            "first-order condition does not change sign on (0, 1); "
            "the concavity assumption is likely violated"
        )
    mid = 0.5 * (lo + hi)
    f_mid = foc_residual(cfg, ti, si, mid)
    # each element freezes the moment it converges, so the result never
    # depends on what else shares the batch (scalar and grid calls agree
    # bit for bit)
    done = np.abs(f_mid) < tol
    for iterations in range(1, MAX_ITER + 1):
        if np.all(done):
            break
        move = ~done & (f_mid < 0)
        lo, f_lo = np.where(move, mid, lo), np.where(move, f_mid, f_lo)
        move = ~done & (f_mid >= 0)
        hi, f_hi = np.where(move, mid, hi), np.where(move, f_mid, f_hi)
        if iterations % 2:
            # secant through the bracket (f_lo < 0 < f_hi, so the divisor is
            # positive), clipped away from stalling endpoints
            cand = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
            width = hi - lo
            cand = np.clip(cand, lo + 1e-3 * width, hi - 1e-3 * width)
        else:
            cand = 0.5 * (lo + hi)
        mid = np.where(done, mid, cand)
        f_mid = np.where(done, f_mid, foc_residual(cfg, ti, si, mid))
        done = np.abs(f_mid) < tol

    if t.shape:
        theta[interior] = mid
        residual[interior] = f_mid
    else:
        theta, residual = mid, f_mid
    return theta, residual, iterations


def solve_retention(cfg: ModelConfig, t: float, state: int) -> RetentionSolution:
    """Optimal retention at one (t, e_i) point."""
    region = classify_region(cfg, t, state)
    if region is Region.D0:
        return RetentionSolution(0.0, region, 0.0, 0)
    if region is Region.D1:
        return RetentionSolution(1.0, region, 0.0, 0)
    theta, residual, its = retention_on_grid(cfg, np.asarray([t]), np.asarray([state]))
    return RetentionSolution(float(theta[0]), region, float(residual[0]), its)


def retention_curve(cfg: ModelConfig, state: int, times) -> list[RetentionSolution]:
    """Retention sampled along an increasing time grid within [t0, T]."""
    times = np.asarray(times, dtype=float)
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if np.any(times < cfg.t0) or np.any(times > cfg.T):
        raise ValueError("time grid must lie within [t0, T]")
    return [solve_retention(cfg, float(t), state) for t in times]


def curve_to_csv(cfg: ModelConfig, times, path) -> None:
    """Retention curves for all states as CSV (t, state, theta_star, region)."""
    with open(path, "w", newline="") as fh:
        fh.write("t,state,theta_star,region\n")
        for j in range(1, cfg.regime.K + 1):
            for t, sol in zip(times, retention_curve(cfg, j, times)):
                fh.write(f"{float(t)!r},{j},{sol.theta_star!r},{sol.region.value}\n")


def _db_dt(cfg: ModelConfig, t, state, theta):
    """Analytic time derivative of db/dtheta for the selected principle."""
    lam = intensity(cfg.claims, t, state)
    lam_dot = cfg.claims.k1 * lam
    ez = tilted_moment(cfg.claims, 1, 0.0)
    ez2 = tilted_moment(cfg.claims, 2, 0.0)
    principle = cfg.premia.principle
    if principle == "intensity-adjusted-variance":
        Tc = cfg.premia.contract_horizon
        return lam_dot * ez + 4.0 * cfg.premia.deltaR * ez2 * theta * lam_dot * (
            1.0 + 2.0 * Tc * lam
        )
    if principle == "expected-value":
        return lam_dot * (1.0 + cfg.premia.deltaR) * ez
    return lam_dot * (ez + 2.0 * cfg.premia.deltaR * ez2 * theta)


def retention_time_derivative(cfg: ModelConfig, t, state, theta=None):
    """d theta_hat / dt by the implicit function theorem, at interior points.

    With G(t, theta) = db/dtheta - lambda * int z e^{gamma(1-theta)z} F(dz),
    the derivative is -G_t / G_theta; G_theta > 0 under the concavity
    assumption.  Under the intensity-adjusted variance principle with growing
    intensity this is strictly negative, which is why the retention decreases
    inside each regime.
    """
    t = np.asarray(t, dtype=float)
    if theta is None:
        theta, _, _ = retention_on_grid(cfg, t, state)
    theta = np.asarray(theta, dtype=float)
    lam = intensity(cfg.claims, t, state)
    lam_dot = cfg.claims.k1 * lam
    tilt = cfg.gamma * (1.0 - theta)
    g_t = _db_dt(cfg, t, state, theta) - lam_dot * tilted_moment(cfg.claims, 1, tilt)
    _, d2b = reins_premium_db(cfg.premia, cfg.claims, t, state, theta)
    g_theta = d2b + cfg.gamma * lam * tilted_moment(cfg.claims, 2, tilt)
    return -g_t / g_theta


def psi_theta(cfg: ModelConfig, t, state, theta):
    """Reinsurance part of the HJB maximand, common factor e^{-gamma x} dropped.

    Dropping the strictly positive factor leaves the maximizer unchanged and
    avoids overflow; the retention above is its argmax over [0, 1].
    """
    theta = np.asarray(theta, dtype=float)
    b = reins_premium_b(cfg.premia, cfg.claims, t, state, theta)
    lam = intensity(cfg.claims, t, state)
    return -cfg.gamma * b - lam * claim_moment(cfg.claims, 0, cfg.gamma * (1.0 - theta))
