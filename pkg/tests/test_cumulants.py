"""Expansion cumulants, reducibility of the quadratic kernel, side conditions."""

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import symstat as ss
from symstat.errors import InvalidArgumentError

from conftest import random_finite

IDENT = ss.SymmetricKernel(1, lambda x: np.asarray(x, float), True, "x")


# ---------------------------------------------------------------------------
# cumulants


def test_linear_rademacher_cumulants_exact(rademacher):
    # g = x on {-1, +1}: kappa3 is exactly 0, kappa4 = E g^4 - 3 = -2
    dec = ss.linear_components(IDENT, rademacher, 16)
    cs = ss.cumulants(dec, rademacher)
    assert cs.kappa3 == 0.0
    assert cs.kappa4 == pytest.approx(-2.0, abs=1e-13)
    assert cs.sigma2 == pytest.approx(1.0, abs=1e-15)
    assert cs.beta3 == pytest.approx(1.0, abs=1e-13)


@given(seed=st.integers(0, 2**31 - 1))
def test_linear_cumulants_are_law_cumulants(seed):
    # for T = N^{-1/2} sum g1(X_i) the expansion cumulants collapse to the
    # skewness and excess kurtosis of g1(X)
    rng = np.random.default_rng(seed)
    dist = random_finite(rng)
    dec = ss.linear_components(IDENT, dist, 10)
    cs = ss.cumulants(dec, dist)
    pts, pr = dist.support()
    mu = float(pts @ pr)
    cen = pts - mu
    m2 = float((cen**2) @ pr)
    m3 = float((cen**3) @ pr)
    m4 = float((cen**4) @ pr)
    assert cs.kappa3 == pytest.approx(m3 / m2**1.5, rel=1e-10, abs=1e-12)
    assert cs.kappa4 == pytest.approx(m4 / m2**2 - 3.0, rel=1e-10, abs=1e-12)


def test_gini_normal_cumulant_pins(normal):
    # frozen deterministic-quadrature values, validated against MC estimates
    dec = ss.u_stat_components(ss.kernel_gini(), normal, 20)
    cs = ss.cumulants(dec, normal)
    assert cs.sigma2 == pytest.approx(0.16275157944175456, rel=1e-10)
    assert cs.kappa3 == pytest.approx(0.68604805687041626, rel=1e-9)
    assert cs.kappa4 == pytest.approx(-0.033319363214516631, rel=1e-8)
    assert cs.gamma[2.0] == pytest.approx(
        dec.meta["c"] ** 2 * dec.meta["ht2_var"], rel=1e-10
    )
    dec50 = ss.u_stat_components(ss.kernel_gini(), normal, 50)
    cs50 = ss.cumulants(dec50, normal)
    assert cs50.kappa3 == pytest.approx(0.72417051546606337, rel=1e-9)
    assert cs50.kappa4 == pytest.approx(0.03570655139475748, rel=1e-8)


def test_cumulants_mc_tracks_exact(three_point):
    dec = ss.u_stat_components(ss.kernel_gini(), three_point, 6)
    exact = ss.cumulants(dec, three_point)
    mc = ss.cumulants(dec, three_point, mode="mc", reps=120_000, seed=17)
    assert mc.stderr["kappa3"] > 0
    assert abs(mc.kappa3 - exact.kappa3) < 5 * mc.stderr["kappa3"], (
        f"kappa3 mc {mc.kappa3} exact {exact.kappa3} se {mc.stderr['kappa3']}"
    )
    assert abs(mc.kappa4 - exact.kappa4) < 5 * mc.stderr["kappa4"]


def test_cumulants_mode_guard(three_point):
    dec = ss.linear_components(IDENT, three_point, 4)
    with pytest.raises(InvalidArgumentError):
        ss.cumulants(dec, three_point, mode="bogus")


def test_cumulant_set_serializes(three_point):
    dec = ss.u_stat_components(ss.kernel_gini(), three_point, 6)
    out = ss.cumulants(dec, three_point).to_json()
    json.dumps(out)  # must be plain JSON types
    for key in ("N", "sigma2", "kappa3", "kappa4", "beta3", "gamma", "zeta", "inputs"):
        assert key in out
    assert "2.0" in out["gamma"]


# ---------------------------------------------------------------------------
# reducibility


def test_product_kernel_is_reducible(three_point):
    # psi = c (x - mu)(y - mu) and g = mu (x - mu): the projection recovers
    # psi exactly whenever mu != 0
    assert three_point.mean() != 0.0
    dec = ss.u_stat_components(ss.kernel_product(), three_point, 8)
    red = ss.reducibility(dec, three_point)
    assert red.reducible, f"delta3_sq = {red.delta3_sq}"
    assert red.delta3_sq <= 1e-10 * red.sigma_T2
    cons = red.consistency
    scale = 1.0 + abs(cons["direct"])
    assert abs(cons["direct"] - cons["expanded"]) < 1e-9 * scale
    assert abs(cons["direct"] - cons["projection"]) < 1e-9 * scale


def test_interaction_kernel_reducible_on_rademacher(rademacher):
    # h = xy + x + y: g(x) = x and psi = c xy = (c/2)(g(x) y + g(y) x)
    h = ss.kernel_poly([[0.0, 1.0], [1.0, 1.0]])
    dec = ss.u_stat_components(h, rademacher, 8)
    red = ss.reducibility(dec, rademacher)
    assert red.reducible
    assert red.delta3_sq <= 1e-10


def test_gini_normal_not_reducible(normal):
    dec = ss.u_stat_components(ss.kernel_gini(), normal, 20)
    red = ss.reducibility(dec, normal)
    assert not red.reducible
    assert red.delta3_sq == pytest.approx(0.409687, rel=1e-4)
    # the normal-equation identity must hold even when the residual is large
    cons = red.consistency
    assert abs(cons["expanded"] - cons["projection"]) < 1e-8 * (1 + abs(cons["expanded"]))


def test_reducibility_mc_mode(three_point):
    dec = ss.u_stat_components(ss.kernel_gini(), three_point, 6)
    exact = ss.reducibility(dec, three_point)
    mc = ss.reducibility(dec, three_point, mode="mc", reps=60_000, seed=5)
    assert mc.stderr > 0
    assert abs(mc.delta3_sq - exact.delta3_sq) < 5 * mc.stderr
    assert mc.reducible == exact.reducible


def test_reducibility_b_grid_shape(three_point):
    dec = ss.u_stat_components(ss.kernel_gini(), three_point, 6)
    xs, bv = ss.reducibility(dec, three_point).b_grid
    assert xs.shape == bv.shape
    assert np.all(np.isfinite(bv))


# ---------------------------------------------------------------------------
# side conditions


def test_conditions_gini_normal_all_pass(normal):
    dec = ss.u_stat_components(ss.kernel_gini(), normal, 20)
    rep = ss.check_conditions(dec, normal)
    assert rep.all_pass, rep.rows
    assert set(rep.constants) == {
        "sigma2", "beta3", "gamma_r", "zeta_s", "delta4_sq", "rho", "delta3_sq"
    }
    # degree-2 U-statistic: no order-4 component, so Delta_4^2 vanishes
    assert rep.constants["delta4_sq"] == 0.0
    assert rep.constants["zeta_s"] == 0.0
    assert rep.constants["beta3"] == pytest.approx(2.28407, rel=1e-4)
    assert rep.constants["gamma_r"] == pytest.approx(1.260031, rel=1e-4)
    assert rep.constants["rho"] == pytest.approx(0.085336, rel=1e-3)
    assert rep.nu == pytest.approx(0.25 / 600.0, rel=1e-12)
    json.dumps(rep.to_json())


def test_conditions_flag_reducible_statistic(three_point):
    # a reducible statistic must fail the quadratic-residual floor
    dec = ss.u_stat_components(ss.kernel_product(), three_point, 8)
    rep = ss.check_conditions(dec, three_point)
    assert not rep.rows["quadratic_residual"]["pass"]
    assert not rep.all_pass


def test_conditions_parameter_guards(normal):
    dec = ss.u_stat_components(ss.kernel_gini(), normal, 20)
    with pytest.raises(InvalidArgumentError):
        ss.check_conditions(dec, normal, r=3.5)
    with pytest.raises(InvalidArgumentError):
        ss.check_conditions(dec, normal, s=1.5)
    with pytest.raises(InvalidArgumentError):
        ss.check_conditions(dec, normal, nu1=0.75)
