"""Price-dependent demand curves for elastic transit traffic.

Two canonical families are provided, both with prices in $/Mbps and
demand in Gbps:

* iso-elastic:  d(p) = v * p**-alpha   (constant elasticity alpha > 1)
* linear:       d(p) = v - alpha * p   on p in [0, v/alpha]

Every curve exposes the same four-method contract -- ``demand``,
``slope``, ``elasticity``, ``inverse`` -- and downstream code consumes
only that contract, so further families can be added without touching
the pricing or welfare machinery.  Curves are continuous, strictly
decreasing, and convex on their domain; evaluation outside the domain
raises ``DomainError`` instead of clamping (a silently clamped linear
curve would corrupt the surplus integral).

``demand``, ``slope`` and ``elasticity`` accept scalars or numpy
arrays; scalars in, scalars out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


class DomainError(ValueError):
    """Price or quantity outside the demand curve's domain."""


def _ret(out):
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class IsoElasticDemand:
    """d(p) = v * p**-alpha with v > 0, alpha > 1."""

    v: float
    alpha: float

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"base demand v must be positive, got {self.v}")
        if not self.alpha > 1:
            raise ValueError(f"elasticity alpha must exceed 1, got {self.alpha}")

    @property
    def kind(self) -> str:
        return "iso"

    def _check_price(self, p):
        if np.any(np.asarray(p) <= 0):
            raise DomainError(f"iso-elastic demand needs p > 0, got {p}")

    def demand(self, p):
        self._check_price(p)
        return _ret(self.v * np.asarray(p, dtype=float) ** -self.alpha)

    def slope(self, p):
        """d'(p) = -alpha * v * p**-(alpha+1), strictly negative."""
        self._check_price(p)
        return _ret(-self.alpha * self.v * np.asarray(p, dtype=float) ** -(self.alpha + 1.0))

    def elasticity(self, p):
        """-p d'(p)/d(p); constant by construction."""
        self._check_price(p)
        return _ret(np.full_like(np.asarray(p, dtype=float), self.alpha))

    def inverse(self, q: float) -> float:
        """Price at which demand equals q."""
        if not q > 0:
            raise DomainError(f"iso-elastic demand is positive everywhere; q must be > 0, got {q}")
        return (self.v / q) ** (1.0 / self.alpha)

    def to_dict(self) -> dict:
        return {"kind": "iso", "v": self.v, "alpha": self.alpha}


@dataclass(frozen=True)
class LinearDemand:
    """d(p) = v - alpha * p on [0, v/alpha], with v > 0, alpha > 0."""

    v: float
    alpha: float

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"base demand v must be positive, got {self.v}")
        if not self.alpha > 0:
            raise ValueError(f"sensitivity alpha must be positive, got {self.alpha}")

    @property
    def kind(self) -> str:
        return "linear"

    @property
    def choke_price(self) -> float:
        """Price v/alpha at which demand reaches zero."""
        return self.v / self.alpha

    def _check_price(self, p):
        p = np.asarray(p)
        if np.any(p < 0) or np.any(p > self.choke_price):
            raise DomainError(
                f"linear demand defined on [0, {self.choke_price!r}], got p={p}"
            )

    def demand(self, p):
        self._check_price(p)
        return _ret(self.v - self.alpha * np.asarray(p, dtype=float))

    def slope(self, p):
        self._check_price(p)
        return _ret(np.full_like(np.asarray(p, dtype=float), -self.alpha))

    def elasticity(self, p):
        """alpha*p / (v - alpha*p); increases with p, diverges at the choke price."""
        self._check_price(p)
        d = self.v - self.alpha * np.asarray(p, dtype=float)
        if np.any(d <= 0):
            raise DomainError("elasticity undefined at zero demand (choke price)")
        return _ret(self.alpha * np.asarray(p, dtype=float) / d)

    def inverse(self, q: float) -> float:
        if not 0 < q <= self.v:
            raise DomainError(f"linear demand only reaches quantities in (0, {self.v}], got {q}")
        return (self.v - q) / self.alpha

    def to_dict(self) -> dict:
        return {"kind": "linear", "v": self.v, "alpha": self.alpha}


DemandSpec = Union[IsoElasticDemand, LinearDemand]


def demand_from_dict(obj: dict) -> DemandSpec:
    """Build a demand curve from {"kind": "iso"|"linear", "v": ..., "alpha": ...}."""
    kind = obj.get("kind")
    if kind == "iso":
        return IsoElasticDemand(float(obj["v"]), float(obj["alpha"]))
    if kind == "linear":
        return LinearDemand(float(obj["v"]), float(obj["alpha"]))
    raise ValueError(f"unknown demand kind {kind!r} (expected 'iso' or 'linear')")


def price_domain(d: DemandSpec) -> tuple[float, float]:
    """(low, high) price interval on which d is defined; high may be inf."""
    if isinstance(d, LinearDemand):
        return 0.0, d.choke_price
    return 0.0, math.inf
