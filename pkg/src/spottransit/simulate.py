"""Continuous-time Monte Carlo check of the dynamic-pricing math.

Simulates the birth-death utilization chain under a fixed pricing
policy: sojourns are exponential with the state's total rate, revenue
accrues continuously at n * p_n, and the post-warmup horizon is split
into equal-time batches whose means give the standard errors.  The
estimates are compared against the product-form steady state and the
analytic average revenue; agreement within three standard errors (and
a small total-variation distance on occupancy) validates both codes
against each other since they share no computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import MdpSpec, Policy, average_revenue, policy_rates, steady_state

_BLOCK = 1 << 16  # RNG draws are taken in blocks; purely a speed knob


@dataclass(frozen=True)
class SimConfig:
    spec: MdpSpec
    policy: Policy
    horizon: float
    seed: int
    warmup: float = None  # type: ignore[assignment]  # default: 5% of horizon
    start_state: int = 0
    n_batches: int = 20

    def __post_init__(self):
        if self.warmup is None:
            object.__setattr__(self, "warmup", 0.05 * self.horizon)
        if not 0 <= self.warmup < self.horizon:
            raise ValueError(f"need horizon > warmup >= 0, got {self.horizon}, {self.warmup}")
        if not 0 <= self.start_state <= self.spec.capacity:
            raise ValueError(f"start state {self.start_state} outside 0..{self.spec.capacity}")
        if self.n_batches < 2:
            raise ValueError("batch-means stderr needs at least 2 batches")


@dataclass(frozen=True)
class SimResult:
    revenue_rate_estimate: float
    revenue_rate_stderr: float
    occupancy: np.ndarray
    occupancy_stderr: np.ndarray
    transitions: int
    stuck_state: int | None = None

    def to_dict(self) -> dict:
        return {
            "revenue_rate_estimate": self.revenue_rate_estimate,
            "revenue_rate_stderr": self.revenue_rate_stderr,
            "occupancy": [float(x) for x in self.occupancy],
            "occupancy_stderr": [float(x) for x in self.occupancy_stderr],
            "transitions": self.transitions,
            "stuck_state": self.stuck_state,
        }


class _Draws:
    """Blocked draws from a counter-based generator (Philox)."""

    def __init__(self, seed: int):
        self.rng = np.random.Generator(np.random.Philox(seed))
        self._exp = np.empty(0)
        self._uni = np.empty(0)
        self._i = 0

    def next_pair(self):
        if self._i >= len(self._exp):
            self._exp = self.rng.exponential(size=_BLOCK)
            self._uni = self.rng.random(size=_BLOCK)
            self._i = 0
        out = self._exp[self._i], self._uni[self._i]
        self._i += 1
        return out


def simulate_policy(cfg: SimConfig) -> SimResult:
    """Run one seeded replication; identical config and seed reproduce the result bit-for-bit."""
    spec, policy = cfg.spec, cfg.policy
    lam, dlt = policy_rates(spec, policy)
    total = lam + dlt
    p_up = np.divide(lam, total, out=np.zeros_like(total), where=total > 0)

    n_states = spec.capacity + 1
    batch_len = (cfg.horizon - cfg.warmup) / cfg.n_batches
    occ_time = np.zeros((cfg.n_batches, n_states))

    def accrue(state: int, t0: float, t1: float):
        t0 = max(t0, cfg.warmup)
        t1 = min(t1, cfg.horizon)
        if t1 <= t0:
            return
        b0 = min(int((t0 - cfg.warmup) / batch_len), cfg.n_batches - 1)
        b1 = min(int((t1 - cfg.warmup) / batch_len), cfg.n_batches - 1)
        if b0 == b1:
            occ_time[b0, state] += t1 - t0
            return
        for b in range(b0, b1 + 1):
            lo = cfg.warmup + b * batch_len
            hi = lo + batch_len
            occ_time[b, state] += min(t1, hi) - max(t0, lo)

    draws = _Draws(cfg.seed)
    t = 0.0
    state = cfg.start_state
    transitions = 0
    stuck = None
    while t < cfg.horizon:
        rate = total[state]
        if rate <= 0.0:
            stuck = state
            accrue(state, t, cfg.horizon)
            break
        e, uni = draws.next_pair()
        t_next = t + e / rate
        accrue(state, t, t_next)
        t = t_next
        if t >= cfg.horizon:
            break
        state = state + 1 if uni < p_up[state] else state - 1
        transitions += 1

    duration = cfg.horizon - cfg.warmup
    rev_rates = np.arange(n_states) * policy.prices
    batch_rev = occ_time @ rev_rates / batch_len
    batch_occ = occ_time / batch_len
    nb = cfg.n_batches
    return SimResult(
        revenue_rate_estimate=float(occ_time.sum(axis=0) @ rev_rates / duration),
        revenue_rate_stderr=float(batch_rev.std(ddof=1) / np.sqrt(nb)),
        occupancy=occ_time.sum(axis=0) / duration,
        occupancy_stderr=batch_occ.std(axis=0, ddof=1) / np.sqrt(nb),
        transitions=transitions,
        stuck_state=stuck,
    )


@dataclass(frozen=True)
class ComparisonReport:
    revenue_z: float
    occupancy_z: np.ndarray
    tv_distance: float
    analytic_revenue: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "revenue_z": self.revenue_z,
            "occupancy_z": [float(z) for z in self.occupancy_z],
            "tv_distance": self.tv_distance,
            "analytic_revenue": self.analytic_revenue,
            "passed": self.passed,
        }


def _z(diff: float, stderr: float) -> float:
    if stderr > 0:
        return diff / stderr
    return 0.0 if diff == 0 else np.inf


def compare_to_analytic(result: SimResult, spec: MdpSpec, policy: Policy) -> ComparisonReport:
    """Score the simulation against the product-form chain; pass needs
    |revenue z| <= 3 and occupancy TV distance <= 0.02."""
    pi = steady_state(spec, policy)
    j = average_revenue(spec, policy)
    rev_z = _z(result.revenue_rate_estimate - j, result.revenue_rate_stderr)
    occ_z = np.array(
        [_z(o - p, s) for o, p, s in zip(result.occupancy, pi, result.occupancy_stderr)]
    )
    tv = 0.5 * float(np.abs(result.occupancy - pi).sum())
    return ComparisonReport(
        revenue_z=float(rev_z),
        occupancy_z=occ_z,
        tv_distance=tv,
        analytic_revenue=j,
        passed=bool(abs(rev_z) <= 3.0 and tv <= 0.02),
    )
