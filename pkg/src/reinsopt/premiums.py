"""Insurance gross premium a(t, e_j) and reinsurance premium b(t, e_j, theta).

Three principles are selectable.  The intensity-adjusted variance principle
scales the variance loading by (1 + T*lambda) with T the contract horizon:

    a(t, e_j)        = lam*E[Z] + 2*deltaI*lam*E[Z^2]*(1 + T*lam)
    b(t, e_j, theta) = lam*E[Z]*theta + 2*deltaR*lam*E[Z^2]*(1 + T*lam)*theta^2

The expected-value principle is (1 + delta)*lam*E[Z] (times theta for b); the
variance principle uses lam*E[Z] + delta*lam*E[Z^2] with theta and theta^2
weights on the reinsurance side.  Analytic first and second theta-derivatives
are provided for the optimizer.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .claims import ClaimModel, intensity, tilted_moment

PRINCIPLES = ("intensity-adjusted-variance", "expected-value", "variance")


@dataclass(frozen=True)
class PremiumSpec:
    """Premium principle and safety loadings.

    ``contract_horizon`` is the maturity T entering the intensity adjustment
    (1 + T*lambda); it is fixed at 1 by default and decoupled from the
    optimization horizon.  deltaR > deltaI is recommended, otherwise full
    reinsurance typically becomes a free lunch and validation rule (iii) fails.
    """

    principle: str = "intensity-adjusted-variance"
    deltaI: float = 0.05
    deltaR: float = 0.1
    contract_horizon: float = 1.0

    def __post_init__(self) -> None:
        if self.principle not in PRINCIPLES:
            raise ValueError(
                f"unknown premium principle {self.principle!r}; "
                f"expected one of {PRINCIPLES}"
            )
        if self.deltaI < 0 or self.deltaR < 0:
            raise ValueError("safety loadings must be >= 0")
        if self.deltaR <= self.deltaI:
            warnings.warn(
                f"deltaR={self.deltaR} <= deltaI={self.deltaI}: the reinsurance "
                "premium may not dominate the gross premium at full protection",
                stacklevel=2,
            )


def gross_premium_a(spec: PremiumSpec, claims: ClaimModel, t, state):
    """Insurance gross premium rate a(t, e_j); vectorized in (t, state)."""
    lam = intensity(claims, t, state)
    ez = tilted_moment(claims, 1, 0.0)
    ez2 = tilted_moment(claims, 2, 0.0)
    if spec.principle == "intensity-adjusted-variance":
        return lam * ez + 2.0 * spec.deltaI * lam * ez2 * (1.0 + spec.contract_horizon * lam)
    if spec.principle == "expected-value":
        return (1.0 + spec.deltaI) * lam * ez
    return lam * ez + spec.deltaI * lam * ez2


def reins_premium_b(spec: PremiumSpec, claims: ClaimModel, t, state, theta):
    """Reinsurance premium rate b(t, e_j, theta) for retention theta in [0, 1]."""
    theta = np.asarray(theta, dtype=float)
    lam = intensity(claims, t, state)
    ez = tilted_moment(claims, 1, 0.0)
    ez2 = tilted_moment(claims, 2, 0.0)
    if spec.principle == "intensity-adjusted-variance":
        return lam * ez * theta + 2.0 * spec.deltaR * lam * ez2 * (
            1.0 + spec.contract_horizon * lam
        ) * theta**2
    if spec.principle == "expected-value":
        return (1.0 + spec.deltaR) * lam * ez * theta
    return lam * ez * theta + spec.deltaR * lam * ez2 * theta**2


def reins_premium_db(spec: PremiumSpec, claims: ClaimModel, t, state, theta):
    """Analytic (db/dtheta, d2b/dtheta2) of the selected principle.

    One-sided derivatives apply at the endpoints theta = 0, 1.
    """
    theta = np.asarray(theta, dtype=float)
    lam = intensity(claims, t, state)
    ez = tilted_moment(claims, 1, 0.0)
    ez2 = tilted_moment(claims, 2, 0.0)
    if spec.principle == "intensity-adjusted-variance":
        curv = 4.0 * spec.deltaR * lam * ez2 * (1.0 + spec.contract_horizon * lam)
        return lam * ez + curv * theta, curv * np.ones_like(theta)
    if spec.principle == "expected-value":
        db = (1.0 + spec.deltaR) * lam * ez * np.ones_like(theta)
        return db, np.zeros_like(theta)
    curv = 2.0 * spec.deltaR * lam * ez2
    return lam * ez + curv * theta, curv * np.ones_like(theta)
