"""Independent oracles used by the tests.

Everything here recomputes quantities from first principles (quadrature,
brute-force grids, finite differences) without touching the closed forms or
root finders under test, so a bug cannot cancel itself out.
"""

import numpy as np
from scipy.integrate import quad

from reinsopt import ClaimModel, ModelConfig, MarketParams, PremiumSpec, RegimeSpec
from reinsopt.config import validate_assumptions


def truncexp_density(model: ClaimModel):
    r, L = model.rate, model.zmax
    norm = 1.0 - np.exp(-r * L)
    return lambda z: r * np.exp(-r * z) / norm


def quad_moment(model: ClaimModel, p: int, c: float) -> float:
    """Adaptive quadrature of int z^p e^{cz} F(dz) (p=0 gives the -1 variant)."""
    f = truncexp_density(model)
    if p == 0:
        val, _ = quad(lambda z: (np.exp(c * z) - 1.0) * f(z), 0, model.zmax, limit=200)
    else:
        val, _ = quad(lambda z: z**p * np.exp(c * z) * f(z), 0, model.zmax, limit=200)
    return val


def riemann_moment(model: ClaimModel, p: int, c: float, n: int = 10**6) -> float:
    """Composite-midpoint brute force of the same integral."""
    f = truncexp_density(model)
    z = (np.arange(n) + 0.5) * (model.zmax / n)
    w = f(z) * (model.zmax / n)
    integrand = z**p * np.exp(c * z) if p else np.exp(c * z) - 1.0
    return float(np.sum(integrand * w))


def premium_b_raw(cfg: ModelConfig, t: float, state: int, theta):
    """Reinsurance premium recomputed from the principle formulas with
    quadrature moments (independent of the premium module's code path)."""
    theta = np.asarray(theta, dtype=float)
    lam = cfg.claims.lambda0 * np.exp(cfg.claims.k1 * t + state * cfg.claims.k2)
    ez = quad_moment(cfg.claims, 1, 0.0)
    ez2 = quad_moment(cfg.claims, 2, 0.0)
    dR, Tc = cfg.premia.deltaR, cfg.premia.contract_horizon
    if cfg.premia.principle == "intensity-adjusted-variance":
        return lam * ez * theta + 2 * dR * lam * ez2 * (1 + Tc * lam) * theta**2
    if cfg.premia.principle == "expected-value":
        return (1 + dR) * lam * ez * theta
    return lam * ez * theta + dR * lam * ez2 * theta**2


def grid_argmax_retention(cfg: ModelConfig, t: float, state: int, n_grid: int = 10**4):
    """Brute-force argmax over theta of the reinsurance HJB maximand.

    The maximand (with the positive e^{-gamma x} factor dropped) is
    -gamma b(theta) - lambda int (e^{gamma(1-theta)z} - 1) F(dz); the jump
    integral is evaluated by composite-midpoint quadrature over z for every
    grid theta at once.
    """
    thetas = np.linspace(0.0, 1.0, n_grid + 1)
    lam = cfg.claims.lambda0 * np.exp(cfg.claims.k1 * t + state * cfg.claims.k2)
    f = truncexp_density(cfg.claims)
    nz = 20001
    z = (np.arange(nz) + 0.5) * (cfg.claims.zmax / nz)
    w = f(z) * (cfg.claims.zmax / nz)
    psi = np.empty_like(thetas)
    chunk = 512
    for lo in range(0, thetas.size, chunk):
        th = thetas[lo : lo + chunk]
        expo = np.exp(cfg.gamma * (1.0 - th)[:, None] * z[None, :])
        jump = (expo - 1.0) @ w
        psi[lo : lo + chunk] = -cfg.gamma * premium_b_raw(cfg, t, state, th) - lam * jump
    k = int(np.argmax(psi))
    return float(thetas[k]), 1.0 / n_grid


def quadratic_vertex(f, x0: float = 0.0, h: float = 1.0) -> float:
    """Vertex of a quadratic from three samples, with one refinement pass.

    A Newton step with central differences is exact for quadratics; the second
    pass rescales the stencil to the answer's magnitude for conditioning.
    """
    x = x0
    for _ in range(2):
        fm, f0, fp = f(x - h), f(x), f(x + h)
        slope = (fp - fm) / (2.0 * h)
        curv = (fp - 2.0 * f0 + fm) / h**2
        x = x - slope / curv
        h = max(abs(x), 1.0) * 0.25
    return x


def psi_investment(cfg: ModelConfig, s: float, state: int, pi):
    """Investment part of the HJB maximand at x = 0 for u(x) = -e^{-gamma x}."""
    mu = cfg.market.mu[state - 1]
    sigma = cfg.market.sigma[state - 1]
    gamma = cfg.gamma
    # u_x = gamma, u_xx = -gamma^2, u_xs = 0 at x = 0
    return pi * mu * gamma - 0.5 * pi**2 * sigma**2 * s ** (2 * cfg.market.beta) * gamma**2


def random_validated_config(rng: np.random.Generator) -> ModelConfig:
    """Draw a random configuration that passes the assumption checks."""
    for _ in range(100):
        K = int(rng.integers(1, 4))
        if K == 1:
            Q = np.zeros((1, 1))
        else:
            Q = rng.uniform(0.2, 3.0, size=(K, K))
            np.fill_diagonal(Q, 0.0)
            np.fill_diagonal(Q, -Q.sum(axis=1))
        zmax = float(rng.uniform(4.0, 15.0))
        mean = float(rng.uniform(0.4, min(2.0, zmax / 2.5)))
        deltaI = float(rng.uniform(0.01, 0.15))
        deltaR = float(rng.uniform(deltaI * 1.2 + 0.01, 0.5))
        principle = str(rng.choice(["intensity-adjusted-variance", "variance", "expected-value"]))
        cfg = ModelConfig(
            regime=RegimeSpec(K=K, Q=Q, y0=1),
            market=MarketParams(
                mu=rng.uniform(0.01, 0.2, size=K),
                sigma=rng.uniform(0.05, 0.4, size=K),
                beta=float(rng.uniform(-0.9, 0.0)),
                s0=float(rng.uniform(0.5, 2.0)),
            ),
            claims=ClaimModel(
                lambda0=float(rng.uniform(0.3, 2.0)),
                k1=float(rng.uniform(0.0, 0.8)),
                k2=float(rng.uniform(0.1, 1.2)),
                zmax=zmax,
                mean=mean,
            ),
            premia=PremiumSpec(principle=principle, deltaI=deltaI, deltaR=deltaR),
            gamma=float(rng.uniform(0.1, 1.2)),
            T=1.0,
            t0=0.0,
            x0=1.0,
            seed=int(rng.integers(0, 2**31)),
        )
        if validate_assumptions(cfg, n_t=21, n_theta=41).passed:
            return cfg
    raise RuntimeError("failed to draw a validated configuration")
