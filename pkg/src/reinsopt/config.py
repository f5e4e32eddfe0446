"""Model configuration: ingestion, validation and serialization.

A configuration is a flat, whitespace-tolerant ``key = value`` text file with
dotted keys ('#' starts a comment, lists are comma-separated, Q is row-major).
Every key is optional; missing keys fall back to the two-regime default set
used by the numerical experiments.  See the README for the full key table.

``validate_assumptions`` checks the standing premium assumptions on a sampled
(t, state, theta) grid before any optimization runs:

    (i)   b(t, e_j, 0) = 0
    (ii)  db/dtheta >= 0 on [0, 1]
    (iii) b(t, e_j, 1) > a(t, e_j)
    (iv)  -d2b/dtheta2 < gamma * lambda(t, e_j) * int e^{gamma(1-theta)z} z^2 F(dz)

Rule (iv) is what makes the retention first-order condition strictly concave,
hence uniquely solvable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import numpy as np
from numpy.typing import NDArray

from .claims import ClaimModel, intensity, tilted_moment
from .premiums import PremiumSpec, gross_premium_a, reins_premium_b, reins_premium_db
from .regimes import RegimeSpec


class ConfigError(ValueError):
    """Configuration file could not be used."""


class ParseError(ConfigError):
    """Malformed configuration text."""


class DomainError(ConfigError):
    """Structurally valid file with out-of-domain values."""


@dataclass(frozen=True)
class MarketParams:
    """Per-regime CEV asset coefficients.

    dS = S * (mu(Y) dt + sigma(Y) S^beta dW) with elasticity beta in (-1, 0].
    """

    mu: NDArray[np.float64]
    sigma: NDArray[np.float64]
    beta: float = -0.5
    s0: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        if self.mu.ndim != 1 or self.mu.shape != self.sigma.shape:
            raise DomainError("mu and sigma must be 1-d arrays of equal length")
        if np.any(self.sigma <= 0):
            raise DomainError("volatilities must be > 0 in every regime")
        if not -1.0 < self.beta <= 0.0:
            raise DomainError(f"elasticity beta must lie in (-1, 0], got {self.beta}")
        if self.s0 <= 0:
            raise DomainError(f"initial price must be > 0, got {self.s0}")


@dataclass(frozen=True)
class ModelConfig:
    """Immutable bundle of all model primitives.

    Safe to share across concurrent workers; all operations on it are pure.
    """

    regime: RegimeSpec
    market: MarketParams
    claims: ClaimModel
    premia: PremiumSpec
    gamma: float = 0.5
    T: float = 1.0
    t0: float = 0.0
    x0: float = 1.0
    seed: int = 42

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise DomainError(f"risk aversion gamma must be > 0, got {self.gamma}")
        if not self.T > self.t0 >= 0:
            raise DomainError(f"need T > t0 >= 0, got t0={self.t0}, T={self.T}")
        if self.market.mu.size != self.regime.K:
            raise DomainError(
                f"market coefficients cover {self.market.mu.size} regimes, "
                f"chain has {self.regime.K}"
            )
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the standing-assumption checks.

    ``violations`` holds (rule id, message, witness) triples where the witness
    is the first offending (t, state, theta) found, or None for global rules.
    """

    passed: bool
    violations: list = field(default_factory=list)

    def __post_init__(self) -> None:
        assert self.passed == (len(self.violations) == 0)


# --- defaults (two-regime experiment set) -----------------------------------

_DEFAULTS = {
    "regime.K": 2,
    "regime.Q": [-2.0, 2.0, 1.0, -1.0],
    "regime.y0": 1,
    "market.mu": [0.1, 0.05],
    "market.sigma": [0.1, 0.2],
    "market.beta": -0.5,
    "market.s0": 1.0,
    "claims.lambda0": 1.0,
    "claims.k1": 0.5,
    "claims.k2": 1.0,
    "claims.zmax": 10.0,
    "claims.mean": 1.0,
    "premia.principle": "intensity-adjusted-variance",
    "premia.deltaI": 0.05,
    "premia.deltaR": 0.1,
    "premia.T": 1.0,
    "gamma": 0.5,
    "T": 1.0,
    "t0": 0.0,
    "x0": 1.0,
    "seed": 42,
}

_INT_KEYS = {"regime.K", "regime.y0", "seed"}
_LIST_KEYS = {"regime.Q", "market.mu", "market.sigma"}
_STR_KEYS = {"premia.principle"}


def default_config() -> ModelConfig:
    """The two-regime default configuration used by the experiments."""
    return _build(dict(_DEFAULTS))


def _build(kv: dict) -> ModelConfig:
    K = int(kv["regime.K"])
    q = np.asarray(kv["regime.Q"], dtype=float)
    if q.size != K * K:
        raise DomainError(f"regime.Q needs {K * K} entries for K={K}, got {q.size}")
    try:
        regime = RegimeSpec(K=K, Q=q.reshape(K, K), y0=int(kv["regime.y0"]))
        market = MarketParams(
            mu=np.atleast_1d(np.asarray(kv["market.mu"], dtype=float)),
            sigma=np.atleast_1d(np.asarray(kv["market.sigma"], dtype=float)),
            beta=float(kv["market.beta"]),
            s0=float(kv["market.s0"]),
        )
        claims = ClaimModel(
            lambda0=float(kv["claims.lambda0"]),
            k1=float(kv["claims.k1"]),
            k2=float(kv["claims.k2"]),
            zmax=float(kv["claims.zmax"]),
            mean=float(kv["claims.mean"]),
        )
        premia = PremiumSpec(
            principle=str(kv["premia.principle"]),
            deltaI=float(kv["premia.deltaI"]),
            deltaR=float(kv["premia.deltaR"]),
            contract_horizon=float(kv["premia.T"]),
        )
        return ModelConfig(
            regime=regime,
            market=market,
            claims=claims,
            premia=premia,
            gamma=float(kv["gamma"]),
            T=float(kv["T"]),
            t0=float(kv["t0"]),
            x0=float(kv["x0"]),
            seed=int(kv["seed"]),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise DomainError(str(exc)) from exc


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _STR_KEYS:
        return raw
    try:
        if key in _LIST_KEYS:
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ParseError(f"cannot parse value for {key!r}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """Parse key/value lines into a complete keyword map (defaults filled in)."""
    kv = dict(_DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _DEFAULTS:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        kv[key] = _parse_value(key, raw)
    return kv


def load_config(path) -> ModelConfig:
    """Load and fully validate a configuration file."""
    with open(path) as fh:
        text = fh.read()
    return _build(parse_config_text(text))


def save_config(cfg: ModelConfig, path) -> None:
    """Serialize a configuration so that ``load_config`` round-trips it."""
    lines = [
        f"regime.K = {cfg.regime.K}",
        "regime.Q = " + ",".join(repr(float(v)) for v in cfg.regime.Q.ravel()),
        f"regime.y0 = {cfg.regime.y0}",
        "market.mu = " + ",".join(repr(float(v)) for v in cfg.market.mu),
        "market.sigma = " + ",".join(repr(float(v)) for v in cfg.market.sigma),
        f"market.beta = {cfg.market.beta!r}",
        f"market.s0 = {cfg.market.s0!r}",
        f"claims.lambda0 = {cfg.claims.lambda0!r}",
        f"claims.k1 = {cfg.claims.k1!r}",
        f"claims.k2 = {cfg.claims.k2!r}",
        f"claims.zmax = {cfg.claims.zmax!r}",
        f"claims.mean = {cfg.claims.mean!r}",
        f"premia.principle = {cfg.premia.principle}",
        f"premia.deltaI = {cfg.premia.deltaI!r}",
        f"premia.deltaR = {cfg.premia.deltaR!r}",
        f"premia.T = {cfg.premia.contract_horizon!r}",
        f"gamma = {cfg.gamma!r}",
        f"T = {cfg.T!r}",
        f"t0 = {cfg.t0!r}",
        f"x0 = {cfg.x0!r}",
        f"seed = {cfg.seed}",
    ]
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def config_to_kv(cfg: ModelConfig) -> dict:
    """Flat key map of a configuration (inverse of ``_build``)."""
    return {
        "regime.K": cfg.regime.K,
        "regime.Q": list(cfg.regime.Q.ravel()),
        "regime.y0": cfg.regime.y0,
        "market.mu": list(cfg.market.mu),
        "market.sigma": list(cfg.market.sigma),
        "market.beta": cfg.market.beta,
        "market.s0": cfg.market.s0,
        "claims.lambda0": cfg.claims.lambda0,
        "claims.k1": cfg.claims.k1,
        "claims.k2": cfg.claims.k2,
        "claims.zmax": cfg.claims.zmax,
        "claims.mean": cfg.claims.mean,
        "premia.principle": cfg.premia.principle,
        "premia.deltaI": cfg.premia.deltaI,
        "premia.deltaR": cfg.premia.deltaR,
        "premia.T": cfg.premia.contract_horizon,
        "gamma": cfg.gamma,
        "T": cfg.T,
        "t0": cfg.t0,
        "x0": cfg.x0,
        "seed": cfg.seed,
    }


def apply_overrides(cfg: ModelConfig, overrides: dict) -> ModelConfig:
    """Rebuild a configuration with sparse ``{dotted key: value}`` overrides.

    String values are parsed exactly like file values, so CLI '--set key=value'
    pairs can be passed through unchanged.
    """
    kv = config_to_kv(cfg)
    for key, value in overrides.items():
        if key not in kv:
            raise ParseError(f"unknown key {key!r}")
        kv[key] = _parse_value(key, value) if isinstance(value, str) else value
    return _build(kv)


def with_seed(cfg: ModelConfig, seed: int) -> ModelConfig:
    return replace(cfg, seed=seed)


def validate_assumptions(
    cfg: ModelConfig,
    n_t: int = 101,
    n_theta: int = 101,
    tol: float = 1e-12,
) -> ValidationReport:
    """Check the premium assumptions on a (t, state, theta) sample grid.

    Deterministic and pure for a fixed grid resolution.  Violations are data,
    not errors; each violated rule reports its first witness.
    """
    ts = np.linspace(cfg.t0, cfg.T, n_t)
    thetas = np.linspace(0.0, 1.0, n_theta)
    violations = []

    def _witness(rule: str, msg: str, witness) -> None:
        violations.append((rule, msg, witness))

    for j in range(1, cfg.regime.K + 1):
        b0 = reins_premium_b(cfg.premia, cfg.claims, ts, j, 0.0)
        bad = np.abs(b0) > tol
        if np.any(bad):
            k = int(np.argmax(bad))
            _witness(
                "b-zero-at-zero",
                f"b(t, e_{j}, 0) = {b0[k]!r} != 0",
                (float(ts[k]), j, 0.0),
            )
            break

    for j in range(1, cfg.regime.K + 1):
        tt, th = np.meshgrid(ts, thetas, indexing="ij")
        db, d2b = reins_premium_db(cfg.premia, cfg.claims, tt, j, th)
        bad = db < -tol
        if np.any(bad):
            k = np.unravel_index(int(np.argmax(bad)), bad.shape)
            _witness(
                "b-nondecreasing",
                f"db/dtheta = {db[k]!r} < 0",
                (float(tt[k]), j, float(th[k])),
            )
            break

    for j in range(1, cfg.regime.K + 1):
        b1 = reins_premium_b(cfg.premia, cfg.claims, ts, j, 1.0)
        a = gross_premium_a(cfg.premia, cfg.claims, ts, j)
        bad = b1 <= a + tol
        if np.any(bad):
            k = int(np.argmax(bad))
            _witness(
                "no-free-protection",
                f"b(t, e_{j}, 1) = {b1[k]!r} <= a = {a[k]!r}",
                (float(ts[k]), j, 1.0),
            )
            break

    for j in range(1, cfg.regime.K + 1):
        tt, th = np.meshgrid(ts, thetas, indexing="ij")
        _, d2b = reins_premium_db(cfg.premia, cfg.claims, tt, j, th)
        lam = intensity(cfg.claims, tt, j)
        rhs = cfg.gamma * lam * tilted_moment(cfg.claims, 2, cfg.gamma * (1.0 - th))
        bad = -d2b >= rhs
        if np.any(bad):
            k = np.unravel_index(int(np.argmax(bad)), bad.shape)
            _witness(
                "foc-concavity",
                f"-d2b/dtheta2 = {-d2b[k]!r} >= {rhs[k]!r}",
                (float(tt[k]), j, float(th[k])),
            )
            break

    return ValidationReport(passed=not violations, violations=violations)
