import warnings

import numpy as np
import pytest

from spottransit.calibration import (
    CalibrationError,
    CalibrationInput,
    IXP_STATS,
    REGION_PRICES,
    calibrate,
    derive_capacity_and_noise,
    derive_linear_alpha_bar,
    derive_regular_cost,
    derive_regular_demand,
    derive_spot_demand,
    ixp_input,
    with_beta,
)
from spottransit.demand import IsoElasticDemand, LinearDemand
from spottransit.pricing import regular_price

LONDON = CalibrationInput(p_bar=7.5, d_bar=800.0, beta=0.5, gamma=1.25, mu=-15.9278, theta=174.8157)


def test_input_validation():
    with pytest.raises(ValueError):
        CalibrationInput(p_bar=0.0, d_bar=800.0)
    with pytest.raises(ValueError):
        CalibrationInput(p_bar=7.5, d_bar=800.0, beta=0.0)
    with pytest.raises(ValueError):
        CalibrationInput(p_bar=7.5, d_bar=800.0, beta=1.0)
    with pytest.raises(ValueError):
        CalibrationInput(p_bar=7.5, d_bar=800.0, gamma=1.0)
    with pytest.raises(ValueError):
        CalibrationInput(p_bar=7.5, d_bar=800.0, alpha_bar=1.0)


def test_regular_cost():
    assert derive_regular_cost(LONDON) == pytest.approx(3.75)
    hk = CalibrationInput(p_bar=22.0, d_bar=162.0)
    assert derive_regular_cost(hk) == pytest.approx(11.0)
    # perfectly elastic limit: cost approaches the price
    near = CalibrationInput(p_bar=7.5, d_bar=800.0, alpha_bar=1e12)
    assert derive_regular_cost(near) == pytest.approx(7.5, rel=1e-9)


def test_regular_cost_invariant_across_kinds():
    # bit-identical for the iso and linear branches
    assert derive_regular_cost(LONDON, "iso") == derive_regular_cost(LONDON, "linear")


def test_linear_alpha_bar():
    assert derive_linear_alpha_bar(LONDON) == pytest.approx(800.0 / 3.75)
    other = CalibrationInput(p_bar=7.0, d_bar=160.0)
    assert derive_linear_alpha_bar(other) == pytest.approx(160.0 / 3.5)


def test_spot_demand_iso():
    d = derive_spot_demand(LONDON, "iso")
    assert isinstance(d, IsoElasticDemand)
    assert d.alpha == pytest.approx(2.5)
    assert d.v == pytest.approx(400.0 * 7.5**2.5, rel=1e-12)
    assert d.demand(7.5) == pytest.approx(400.0, rel=1e-9)


def test_spot_demand_iso_low_elasticity_warns():
    inp = CalibrationInput(p_bar=7.5, d_bar=800.0, gamma=1.2, alpha_bar=1.5)  # alpha = 1.8
    with pytest.warns(UserWarning, match="surplus"):
        derive_spot_demand(inp, "iso")


def test_spot_demand_linear():
    d = derive_spot_demand(LONDON, "linear")
    assert isinstance(d, LinearDemand)
    alpha_lin = 800.0 / 3.75
    assert d.alpha == pytest.approx(0.5 * 1.25 * alpha_lin)
    assert d.v == pytest.approx(400.0 + d.alpha * 7.5, rel=1e-12)
    assert d.demand(7.5) == pytest.approx(400.0, rel=1e-9)


def test_spot_demand_degenerate_share():
    # gamma -> 1, beta -> 1: spot curve coincides with the aggregate at p_bar
    inp = CalibrationInput(p_bar=7.5, d_bar=800.0, beta=1.0 - 1e-12, gamma=1.0 + 1e-12)
    d = derive_spot_demand(inp, "iso")
    agg = derive_regular_demand(inp, "iso")
    assert d.demand(7.5) == pytest.approx(agg.demand(7.5), rel=1e-9)


def test_capacity_and_noise():
    c, noise = derive_capacity_and_noise(with_beta(LONDON, 0.2))
    assert c == pytest.approx(0.6 * 800.0)
    c7, _ = derive_capacity_and_noise(with_beta(LONDON, 0.7))
    assert c7 == pytest.approx(1.1 * 800.0)
    _, n5 = derive_capacity_and_noise(LONDON)
    assert n5.mu == pytest.approx(-7.9639)
    assert n5.theta == pytest.approx(87.40785)
    assert n5.a == pytest.approx(n5.mu - 3 * n5.theta)


def test_capacity_rejects_wide_noise():
    bad = CalibrationInput(p_bar=7.5, d_bar=100.0, beta=0.5, theta=200.0)
    with pytest.raises(CalibrationError, match="capacity"):
        derive_capacity_and_noise(bad)


def test_roundtrip_invariants():
    for kind in ("iso", "linear"):
        scen = calibrate(LONDON, kind=kind)
        beta_d = LONDON.beta * LONDON.d_bar
        assert scen.demand.demand(LONDON.p_bar) == pytest.approx(beta_d, rel=1e-9)
        r_bar = scen.market.r_bar
        assert regular_price(scen.regular_demand, r_bar) == pytest.approx(LONDON.p_bar, rel=1e-9)
        assert scen.uncertainty.b < scen.market.capacity
        assert scen.market.r == pytest.approx(0.5 * r_bar)   # typical setting defaults
        assert scen.market.m == pytest.approx(LONDON.p_bar)
        if scen.penalty_assumption_ok and not (
            isinstance(scen.demand, LinearDemand) and scen.market.capacity >= scen.demand.v
        ):
            assert scen.market.m > scen.demand.inverse(scen.market.capacity)


def test_penalty_assumption_flag():
    # a low penalty ratio voids the below-capacity guarantee and is flagged
    with pytest.warns(UserWarning, match="penalty"):
        scen = calibrate(with_beta(LONDON, 0.2), kind="iso", m_ratio=0.5)
    assert not scen.penalty_assumption_ok
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ok = calibrate(with_beta(LONDON, 0.2), kind="iso", m_ratio=1.0)
    assert ok.penalty_assumption_ok


def test_region_presets():
    assert REGION_PRICES == {"london": 7.5, "newyork": 7.0, "hongkong": 22.0}
    linx = ixp_input("linx")
    assert linx.p_bar == 7.5
    assert linx.d_bar == pytest.approx(0.9 * 1200.0)
    assert linx.demand_source == "0.9*peak proxy"
    assert ixp_input("hkix").p_bar == 22.0
    assert ixp_input("nyiix").p_bar == 7.0
    explicit = ixp_input("nix", d_bar=200.0)
    assert explicit.d_bar == 200.0 and explicit.demand_source == "explicit"
    assert set(IXP_STATS) == {"linx", "mskix", "nix", "nyiix", "espanix", "hkix"}


def test_calibrate_rejects_bad_ratios():
    with pytest.raises(ValueError):
        calibrate(LONDON, r_ratio=0.0)
    with pytest.raises(ValueError):
        calibrate(LONDON, m_ratio=-1.0)
    with pytest.raises(ValueError):
        derive_spot_demand(LONDON, "loglog")
