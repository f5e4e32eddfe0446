"""Continuous-time finite-state Markov chain: exact simulation and static analysis.

States are indexed 1..K throughout the public interface, matching the unit
vectors e_1..e_K that the rest of the model is written against.  Paths follow
the cadlag convention: the state recorded at a jump time is the post-jump
state, and left limits are exposed separately for predictable integrands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


class ReducibleChainError(ValueError):
    """No unique stationary distribution exists for the given generator."""


@dataclass(frozen=True)
class RegimeSpec:
    """Generator specification of the chain.

    Attributes
    ----------
    K : number of states, >= 1.
    Q : (K, K) generator matrix in per-year rates; q_ij >= 0 off the diagonal
        and each row sums to zero.
    y0 : initial state, 1-based.
    """

    K: int
    Q: NDArray[np.float64]
    y0: int = 1

    def __post_init__(self) -> None:
        Q = np.asarray(self.Q, dtype=float)
        if Q.shape != (self.K, self.K):
            raise ValueError(f"Q must be {self.K}x{self.K}, got {Q.shape}")
        object.__setattr__(self, "Q", Q)
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0):
            raise ValueError("off-diagonal generator entries must be >= 0")
        if np.max(np.abs(Q.sum(axis=1))) > 1e-10 * max(1.0, np.max(np.abs(Q))):
            raise ValueError("generator rows must sum to zero")
        if not 1 <= self.y0 <= self.K:
            raise ValueError(f"initial state {self.y0} outside 1..{self.K}")


@dataclass(frozen=True)
class RegimePath:
    """One realized trajectory on [t_start, t_end].

    ``jump_times`` are strictly increasing and interior to the horizon;
    ``states`` holds one 1-based index per inter-jump interval, so
    ``len(states) == len(jump_times) + 1`` and consecutive entries differ.
    """

    jump_times: NDArray[np.float64]
    states: NDArray[np.int64]
    t_start: float
    t_end: float
    n_states: int

    def __post_init__(self) -> None:
        jt = np.asarray(self.jump_times, dtype=float)
        st = np.asarray(self.states, dtype=np.int64)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "states", st)
        if st.size != jt.size + 1:
            raise ValueError("states must have one entry per inter-jump interval")
        if jt.size and np.any(np.diff(jt) <= 0):
            raise ValueError("jump times must be strictly increasing")
        if np.any(st[1:] == st[:-1]):
            raise ValueError("consecutive interval states must differ")

    def _check_range(self, t) -> None:
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t_start) or np.any(t > self.t_end):
            raise ValueError(
                f"time outside the path horizon [{self.t_start}, {self.t_end}]"
            )

    def states_at(self, t):
        """Right-continuous state lookup Y_t (post-jump value at a jump time)."""
        self._check_range(t)
        idx = np.searchsorted(self.jump_times, np.asarray(t, dtype=float), side="right")
        return self.states[idx]

    def states_before(self, t):
        """Left-limit lookup Y_{t-}, for predictable integrands."""
        self._check_range(t)
        idx = np.searchsorted(self.jump_times, np.asarray(t, dtype=float), side="left")
        return self.states[idx]

    def to_csv(self, path) -> None:
        edges = np.concatenate([[self.t_start], self.jump_times, [self.t_end]])
        with open(path, "w", newline="") as fh:
            fh.write("interval_start,interval_end,state\n")
            for k, s in enumerate(self.states):
                fh.write(f"{float(edges[k])!r},{float(edges[k + 1])!r},{int(s)}\n")


def state_at(path: RegimePath, t):
    """Scalar convenience wrapper around ``RegimePath.states_at``."""
    return int(path.states_at(t)) if np.isscalar(t) else path.states_at(t)


def simulate_chain(spec: RegimeSpec, t0: float, T: float, rng) -> RegimePath:
    """Exact event-time simulation on [t0, T].

    Holding times in state i are exponential with rate -q_ii; the next state is
    drawn from the embedded jump chain q_ij / (-q_ii).  Absorbing states
    (q_ii = 0) hold forever.  No time discretization is involved, so switch
    times are exact.
    """
    if T <= t0:
        raise ValueError(f"need T > t0, got t0={t0}, T={T}")
    Q = spec.Q
    jump_times = []
    states = [spec.y0]
    t = t0
    cur = spec.y0 - 1
    while True:
        rate = -Q[cur, cur]
        if rate <= 0.0:
            break
        t = t + rng.exponential(1.0 / rate)
        if t >= T:
            break
        probs = Q[cur].copy()
        probs[cur] = 0.0
        probs /= rate
        cur = rng.choice(spec.K, p=probs)
        jump_times.append(t)
        states.append(cur + 1)
    return RegimePath(
        jump_times=np.array(jump_times, dtype=float),
        states=np.array(states, dtype=np.int64),
        t_start=t0,
        t_end=T,
        n_states=spec.K,
    )


def stationary_distribution(spec: RegimeSpec) -> NDArray[np.float64]:
    """Stationary probability vector p with pQ = 0 and sum(p) = 1.

    Computed from the null space of Q^T; raises ``ReducibleChainError`` when
    that null space is not one-dimensional (no unique stationary law).
    """
    if spec.K == 1:
        return np.array([1.0])
    _, s, vt = np.linalg.svd(spec.Q.T)
    scale = max(s[0], 1.0)
    null_dim = int(np.sum(s < 1e-12 * scale))
    if null_dim != 1:
        raise ReducibleChainError(
            f"generator admits {null_dim} stationary directions; need exactly 1"
        )
    p = vt[-1]
    p = p / p.sum()
    if np.any(p < -1e-12):
        raise ReducibleChainError("stationary solve produced negative mass")
    p = np.clip(p, 0.0, None)
    return p / p.sum()
