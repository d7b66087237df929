"""Expected-profit maximization for spot transit under overflow risk.

The seller prices capacity C (Gbps) sold at p $/Mbps with unit cost r.
Billable demand is d(p) + eps; whenever it spills past C the overflow
is penalized at m $/Mbps, so the expected profit is

    E[R(p)] = (p - r) d(p) - m * E[(d(p) - C + eps)+]

which is quasiconcave in p for any decreasing convex demand curve.  Its
derivative has the closed form

    E'[R(p)] = d(p) + d'(p) (p - r - m Pr(eps > C - d(p)))

and the optimizer locates the unique stationary point by bracketing a
sign change of E' and bisecting.  If no sign change exists in the
bracket (degenerate parameters aside, this can only happen when the
profit is monotone), a golden-section pass over the same bracket is
used instead; quasiconcavity makes both routes exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .demand import DemandSpec, DomainError, IsoElasticDemand, LinearDemand
from .uncertainty import UncertaintyModel

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MarketParams:
    """Spot-market constants: cost r, overflow penalty m, capacity C.

    ``r_bar``/``p_bar`` (regular-transit cost and price) are optional
    and only needed for the price-advantage check and welfare baselines.
    """

    r: float
    m: float
    capacity: float
    r_bar: float = None  # type: ignore[assignment]
    p_bar: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"provision cost r must be positive, got {self.r}")
        # m = 0 is allowed so the risk-free benchmark price is computable
        if self.m < 0:
            raise ValueError(f"overflow penalty m must be non-negative, got {self.m}")
        if not self.capacity > 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")


@dataclass(frozen=True)
class StaticSolution:
    """Solved spot price and its profit decomposition."""

    p_star: float
    expected_profit: float
    risk_free_profit: float
    overflow_loss: float
    overflow_probability: float
    elasticity_at_opt: float

    def to_dict(self) -> dict:
        return {
            "p_star": self.p_star,
            "expected_profit": self.expected_profit,
            "risk_free_profit": self.risk_free_profit,
            "overflow_loss": self.overflow_loss,
            "overflow_probability": self.overflow_probability,
            "elasticity_at_opt": self.elasticity_at_opt,
        }


def validate_market(d: DemandSpec, u: UncertaintyModel, mp: MarketParams):
    """Check the cross-cutting model assumptions (noise support below capacity)."""
    if not u.b < mp.capacity:
        raise ValueError(
            f"noise support must sit below capacity (b={u.b} >= C={mp.capacity}); "
            "positive residual capacity is a model assumption"
        )


def expected_profit(d: DemandSpec, u: UncertaintyModel, mp: MarketParams, p):
    """(p - r) d(p) - m * E[(d(p) - C + eps)+].  Accepts scalar or array p."""
    dem = d.demand(p)
    return (np.asarray(p, dtype=float) - mp.r) * dem - mp.m * u.partial_overshoot(mp.capacity - dem)


def profit_derivative(d: DemandSpec, u: UncertaintyModel, mp: MarketParams, p):
    """d(p) + d'(p) (p - r - m Pr(eps > C - d(p))).  Accepts scalar or array p."""
    dem = d.demand(p)
    tail = u.tail_probability(mp.capacity - dem)
    return dem + d.slope(p) * (np.asarray(p, dtype=float) - mp.r - mp.m * tail)


def _upper_bracket(d: DemandSpec, mp: MarketParams) -> float:
    """Price above which the profit derivative cannot stay positive."""
    if isinstance(d, IsoElasticDemand):
        # stationary point even with a fully-saturated tail lies below this
        return d.alpha * (mp.r + mp.m) / (d.alpha - 1.0) * (1.0 + 1e-6)
    return d.choke_price


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    dd = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(dd)
    while b - a > tol:
        if fc >= fd:
            b, dd, fd = dd, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, dd, fd
            dd = a + _GOLDEN * (b - a)
            fd = f(dd)
    return 0.5 * (a + b)


def optimize_price(
    d: DemandSpec,
    u: UncertaintyModel,
    mp: MarketParams,
    price_tol: float = 1e-10,
) -> StaticSolution:
    """Solve for the unique profit-maximizing spot price.

    Raises ValueError when the market assumptions fail or when no
    interior maximum exists in (r, upper bracket) -- both signal
    degenerate parameters rather than solver failure.
    """
    validate_market(d, u, mp)
    lo = mp.r * (1.0 + 1e-6)
    hi = _upper_bracket(d, mp)
    if not lo < hi:
        raise ValueError(
            f"no price range above cost: r={mp.r} vs upper bracket {hi} (degenerate parameters)"
        )

    f = lambda p: profit_derivative(d, u, mp, p)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo <= 0:
        raise ValueError("profit is non-increasing at the cost floor; degenerate parameters")

    if f_hi < 0:
        # bisect the sign change of E'
        a, b = lo, hi
        while b - a > price_tol:
            mid = 0.5 * (a + b)
            if f(mid) > 0:
                a = mid
            else:
                b = mid
        p_star = 0.5 * (a + b)
    else:
        # no sign change: quasiconcavity says the maximum is interior or at an edge
        p_star = _golden_max(lambda p: expected_profit(d, u, mp, p), lo, hi, price_tol)
        if hi - p_star <= 2.0 * price_tol or p_star - lo <= 2.0 * price_tol:
            raise ValueError("no interior stationary point in the search bracket; degenerate parameters")

    dem = d.demand(p_star)
    phi = (p_star - mp.r) * dem
    lam = mp.m * u.partial_overshoot(mp.capacity - dem)
    return StaticSolution(
        p_star=p_star,
        expected_profit=phi - lam,
        risk_free_profit=phi,
        overflow_loss=lam,
        overflow_probability=u.tail_probability(mp.capacity - dem),
        elasticity_at_opt=d.elasticity(p_star),
    )


def regular_price(d_bar: DemandSpec, r_bar: float) -> float:
    """Profit-maximizing price of the regular (aggregate) market, (p - r̄) d̄(p).

    Closed forms: r̄/(1 - 1/ᾱ) for iso-elastic, (r̄ + v̄/ᾱ)/2 for linear.
    The solution always carries elasticity above one; if it does not,
    the inputs are inconsistent and a ValueError is raised.
    """
    if not r_bar > 0:
        raise ValueError(f"regular cost must be positive, got {r_bar}")
    if isinstance(d_bar, IsoElasticDemand):
        p_bar = r_bar / (1.0 - 1.0 / d_bar.alpha)
    else:
        if not r_bar < d_bar.choke_price:
            raise DomainError(
                f"regular cost {r_bar} at or above the choke price {d_bar.choke_price}"
            )
        p_bar = 0.5 * (r_bar + d_bar.choke_price)
    if not d_bar.elasticity(p_bar) > 1.0:
        raise ValueError("regular price solves to elasticity <= 1; inconsistent demand curve")
    return p_bar


@dataclass(frozen=True)
class PriceAdvantage:
    """Sufficient-condition check for the spot price undercutting the regular price."""

    condition_holds: bool
    discount_observed: bool
    bound_value: float  # cost ceiling: r̄ - m (1 - 1/σ(p*)) * tail bound

    def to_dict(self) -> dict:
        return {
            "condition_holds": self.condition_holds,
            "discount_observed": self.discount_observed,
            "bound_value": self.bound_value,
        }


def check_price_advantage(
    d: DemandSpec, u: UncertaintyModel, mp: MarketParams, sol: StaticSolution
) -> PriceAdvantage:
    """Evaluate r <= r̄ - m (1 - 1/σ(p*)) * theta^2/(theta^2 + (C - d(p*) - mu)^2).

    The last factor is the one-sided Chebyshev bound on the overflow
    probability; when the condition holds, the spot price is provably
    below the regular price.  Requires r̄ and p̄ on the market params.
    """
    if mp.r_bar is None or mp.p_bar is None:
        raise ValueError("price-advantage check needs both r_bar and p_bar")
    t = mp.capacity - d.demand(sol.p_star)
    # above-mean overflow threshold is the normal operating regime; if the
    # optimum sits below the mean, fall back on the trivial probability bound
    bound = u.cantelli_bound(t) if t > u.mu else 1.0
    sigma = d.elasticity(sol.p_star)
    ceiling = mp.r_bar - mp.m * (1.0 - 1.0 / sigma) * bound
    return PriceAdvantage(
        condition_holds=bool(mp.r <= ceiling),
        discount_observed=bool(sol.p_star < mp.p_bar),
        bound_value=float(ceiling),
    )
