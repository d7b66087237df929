"""Consumer surplus, baseline profit, and welfare accounting.

Consumer surplus is the willingness-to-pay left on the table at price p,

    S(p) = integral over x > p of (x - p) d(x) dx,

with closed forms for both demand families:

* iso-elastic (needs alpha > 2 to converge):  v p^(2-alpha) / ((alpha-1)(alpha-2))
* linear:                                     alpha (v/alpha - p)^3 / 6

Social welfare is surplus plus expected profit.  The report compares
the spot regime at its optimal price against the regular regime at
(p̄, r̄) and carries both relative and absolute gains.
"""

from __future__ import annotations

from dataclasses import dataclass

from .demand import DemandSpec, DomainError, IsoElasticDemand, LinearDemand
from .pricing import MarketParams, StaticSolution, expected_profit
from .uncertainty import UncertaintyModel


class DivergentSurplusError(ValueError):
    """Iso-elastic surplus integral diverges for alpha <= 2."""


def consumer_surplus(d: DemandSpec, p: float) -> float:
    if isinstance(d, IsoElasticDemand):
        if d.alpha <= 2.0:
            raise DivergentSurplusError(
                f"surplus undefined for iso-elastic alpha={d.alpha} <= 2 "
                "(willingness-to-pay integral diverges)"
            )
        if not p > 0:
            raise DomainError(f"need p > 0, got {p}")
        return d.v * p ** (2.0 - d.alpha) / ((d.alpha - 1.0) * (d.alpha - 2.0))
    assert isinstance(d, LinearDemand)
    if p < 0 or p > d.choke_price:
        raise DomainError(f"linear surplus defined on [0, {d.choke_price}], got {p}")
    return d.alpha * (d.choke_price - p) ** 3 / 6.0


def baseline_profit(d: DemandSpec, p_bar: float, r_bar: float) -> float:
    """Profit the same elastic demand would yield at the regular price: (p̄ - r̄) d(p̄)."""
    return (p_bar - r_bar) * d.demand(p_bar)


def social_welfare(d: DemandSpec, u: UncertaintyModel, mp: MarketParams, p: float) -> float:
    """Surplus plus expected profit at price p."""
    return consumer_surplus(d, p) + expected_profit(d, u, mp, p)


@dataclass(frozen=True)
class WelfareReport:
    surplus_spot: float
    surplus_regular: float
    profit_spot: float
    profit_regular: float
    welfare_spot: float
    welfare_regular: float
    profit_improvement_pct: float
    surplus_improvement_pct: float
    profit_gain_abs: float
    surplus_gain_abs: float

    FIELDS = (
        "surplus_spot",
        "surplus_regular",
        "profit_spot",
        "profit_regular",
        "welfare_spot",
        "welfare_regular",
        "profit_improvement_pct",
        "surplus_improvement_pct",
        "profit_gain_abs",
        "surplus_gain_abs",
    )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}

    def csv_row(self) -> list[float]:
        return [getattr(self, name) for name in self.FIELDS]


def welfare_report(
    d: DemandSpec, u: UncertaintyModel, mp: MarketParams, sol: StaticSolution
) -> WelfareReport:
    """Compare the solved spot regime against the regular regime at (p̄, r̄).

    When the spot price undercuts the regular price, both the surplus
    and the profit comparison must come out strictly positive; a
    violation means the market assumptions were broken upstream and is
    reported as an error rather than silently returned.
    """
    if mp.r_bar is None or mp.p_bar is None:
        raise ValueError("welfare report needs both r_bar and p_bar")
    s_spot = consumer_surplus(d, sol.p_star)
    s_reg = consumer_surplus(d, mp.p_bar)
    pi_spot = sol.expected_profit
    pi_reg = baseline_profit(d, mp.p_bar, mp.r_bar)
    if sol.p_star < mp.p_bar and not (s_spot > s_reg and pi_spot > pi_reg):
        raise RuntimeError(
            "spot price is below the regular price but surplus/profit did not both "
            "improve; market assumptions (noise support below capacity, penalty "
            "above the capacity price) are likely violated"
        )
    return WelfareReport(
        surplus_spot=s_spot,
        surplus_regular=s_reg,
        profit_spot=pi_spot,
        profit_regular=pi_reg,
        welfare_spot=s_spot + pi_spot,
        welfare_regular=s_reg + pi_reg,
        profit_improvement_pct=100.0 * (pi_spot - pi_reg) / pi_reg,
        surplus_improvement_pct=100.0 * (s_spot - s_reg) / s_reg,
        profit_gain_abs=pi_spot - pi_reg,
        surplus_gain_abs=s_spot - s_reg,
    )
