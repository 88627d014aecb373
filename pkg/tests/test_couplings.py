"""Coupling fabric: factor forms, habituation, the weekly coupling snapshot,
symmetrisation, and the asymmetry audit."""

import math

import numpy as np
import pytest

from cosim.couplings import (DEMAND_SHARE, EMBEDDED_FACTORS,
                             FOUR_NARRATIVE_FACTORS, THREE_NARRATIVE_FACTORS,
                             FactorSpec, HabituationParams,
                             UnboundedDomainError, ZeroFactorError,
                             asymmetry_profile, asymmetry_ratio,
                             build_factor_registry, demand_elasticity,
                             eval_couplings, funding_scale, labour_supply,
                             mandate_multiplier, protection_shield,
                             supply_elasticity, symmetrise)
from cosim.fiscal import TAU_SCALE, FiscalParams
from cosim.vaccine import VaccineParams

HAB = HabituationParams()


def spec(fn, domain, fid="test"):
    return FactorSpec(id=fid, source="a", target="b", kind="hard",
                      evaluator=fn, inputs=("a.x",) * len(domain),
                      outputs=("b.y",), domain=tuple(domain))


# --- elasticities and direct factor forms ---------------------------------

def test_demand_elasticity_schedule():
    assert demand_elasticity(0.0, HAB) == pytest.approx(0.10, abs=1e-15)
    assert demand_elasticity(1e9, HAB) == pytest.approx(0.02, abs=1e-12)
    mid = demand_elasticity(35.0, HAB)
    assert 0.02 < mid < 0.10
    # monotone decay towards the floor
    ts = np.linspace(0, 300, 40)
    vals = [demand_elasticity(t, HAB) for t in ts]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_supply_elasticity_schedule():
    assert supply_elasticity(0.0, HAB) == pytest.approx(0.05, abs=1e-15)
    assert supply_elasticity(1e9, HAB) == pytest.approx(0.01, abs=1e-12)


def test_demand_drag_contribution_examples():
    reg0 = build_factor_registry(HAB, t=0.0)
    assert reg0["f1"]([[0.10]])[0] == pytest.approx(-0.010, abs=1e-15)
    reg_late = build_factor_registry(HAB, t=1e9)
    assert reg_late["f1"]([[0.10]])[0] == pytest.approx(-0.002, abs=1e-12)


def test_protection_shield_examples():
    assert protection_shield(0.5, 0.8, 0.6, 0.25) == pytest.approx(0.14, abs=1e-15)
    assert protection_shield(0.1, 1.0, 1.0, 0.0) == 0.0
    assert protection_shield(0.3, 0.0, 0.0, 0.0) == 0.3


def test_mandate_multiplier_examples():
    assert mandate_multiplier(-0.10) == pytest.approx(1.5, abs=1e-15)
    assert mandate_multiplier(0.05) == 1.0


def test_funding_scale_neutral_at_zero_rate():
    assert funding_scale(0.0) == 1.0
    assert funding_scale(2.0) == 0.5  # floor
    assert funding_scale(0.5) == pytest.approx(0.8, abs=1e-15)


def test_labour_supply():
    assert labour_supply(0.01, 0.1, HAB) == pytest.approx(0.96, abs=1e-15)
    assert labour_supply(0.0, 0.0, HAB) == 1.0


# --- factor registry -------------------------------------------------------

def test_registry_contents_three_narratives():
    reg = build_factor_registry(HAB)
    assert set(reg) == {"f1", "f2", "f4", "f5", "f6"}
    assert "f3" in EMBEDDED_FACTORS and "f3" not in reg
    assert set(THREE_NARRATIVE_FACTORS) == {"f1", "f2", "f3", "f4", "f5", "f6"}


def test_registry_contents_four_narratives():
    reg = build_factor_registry(HAB, fiscal_params=FiscalParams(), narratives=4)
    assert set(reg) == {"f1", "f2", "f4", "f5", "f6",
                        "f7", "f8", "f9", "f10", "f11"}
    assert set(FOUR_NARRATIVE_FACTORS) - set(THREE_NARRATIVE_FACTORS) == {
        "f7", "f8", "f9", "f10", "f11"}


def test_registry_requires_fiscal_params_for_four():
    with pytest.raises(ValueError):
        build_factor_registry(HAB, narratives=4)


def test_registry_qualified_labels_are_pairwise():
    reg = build_factor_registry(HAB, fiscal_params=FiscalParams(), narratives=4)
    for fid, f in reg.items():
        touched = {lab.split(".", 1)[0] for lab in f.inputs + f.outputs}
        assert len(touched) <= 2, fid
        assert len(f.domain) == len(f.inputs)


# --- weekly coupling snapshot ----------------------------------------------

VAX = VaccineParams()


def snapshot(enabled, fiscal_params=None, symmetrised=False, **kw):
    base = dict(week=0, hab=HAB, enabled=frozenset(enabled),
                y=np.array([-0.05]), i_rate=np.array([0.01]),
                I=np.array([0.04]), S=np.array([0.8]), v=np.array([0.5]),
                u=np.array([0.4]), rho=np.array([0.2]), vaccine_params=VAX,
                fiscal_params=fiscal_params, symmetrised=symmetrised)
    base.update(kw)
    return eval_couplings(**base)


def test_masked_factors_contribute_neutral_elements():
    out = snapshot(enabled=())
    assert out.delta_r_n[0] == 0.0
    assert out.delta_eps_s[0] == 0.0
    assert out.s_eff[0] == 0.8          # raw susceptibles
    assert out.mandate_multiplier[0] == 1.0
    assert out.lambda_v_eff[0] == VAX.innovation_rate
    assert out.vaccine_I[0] == 0.0      # severed outbreak-demand channel


def test_enabled_three_narrative_factors():
    out = snapshot(enabled=THREE_NARRATIVE_FACTORS)
    assert out.delta_r_n[0] == pytest.approx(-0.10 * 0.04, abs=1e-15)
    assert out.delta_eps_s[0] == pytest.approx(0.05 * 0.04, abs=1e-15)
    assert out.s_eff[0] == pytest.approx(0.8 - 0.5 * 0.4 * 0.8, abs=1e-15)
    assert out.mandate_multiplier[0] == pytest.approx(1.25, abs=1e-15)
    assert out.lambda_v_eff[0] == pytest.approx(VAX.innovation_rate * (1 - 0.4 * 0.01),
                                                abs=1e-15)
    assert out.vaccine_I[0] == 0.04


def test_fiscal_demand_feed_uses_the_flow_not_the_stock():
    fp = FiscalParams()
    # a big standing programme, no recession, no infection: no new money,
    # so no demand feed regardless of the stock
    out = snapshot(enabled=FOUR_NARRATIVE_FACTORS, fiscal_params=fp,
                   y=np.array([0.0]), I=np.array([0.0]),
                   g=np.array([0.2]), phi=np.array([1.0]))
    assert out.delta_r_n[0] == 0.0


def test_fiscal_demand_feed_composition():
    fp = FiscalParams()
    out = snapshot(enabled=FOUR_NARRATIVE_FACTORS, fiscal_params=fp,
                   g=np.array([0.0]), phi=np.array([0.5]))
    m = 1.0                                    # y = -0.05 < -tau/3
    a_eff = fp.alpha_g * (1.0 - fp.kappa_rho * 0.2)
    emergency = fp.alpha_I * 0.04 * 0.5
    flow = a_eff * 0.5 * m + emergency
    expected = -0.10 * 0.04 + fp.eta_g * DEMAND_SHARE * flow
    assert out.fiscal_m[0] == m
    assert out.alpha_g_eff[0] == pytest.approx(a_eff, abs=1e-15)
    assert out.emergency[0] == pytest.approx(emergency, abs=1e-15)
    assert out.delta_r_n[0] == pytest.approx(expected, abs=1e-15)


def test_severed_recession_gate_blocks_discretionary_flow():
    fp = FiscalParams()
    enabled = tuple(f for f in FOUR_NARRATIVE_FACTORS if f != "f7")
    out = snapshot(enabled=enabled, fiscal_params=fp,
                   g=np.array([0.0]), phi=np.array([0.5]))
    assert out.fiscal_y[0] == 0.0   # fiscal block sees a severed gap
    assert out.fiscal_m[0] == 0.0
    emergency = fp.alpha_I * 0.04 * 0.5
    assert out.delta_r_n[0] == pytest.approx(
        -0.10 * 0.04 + fp.eta_g * DEMAND_SHARE * emergency, abs=1e-15)


def test_severed_emergency_channel():
    fp = FiscalParams()
    enabled = tuple(f for f in FOUR_NARRATIVE_FACTORS if f != "f11")
    out = snapshot(enabled=enabled, fiscal_params=fp,
                   g=np.array([0.0]), phi=np.array([0.5]))
    assert out.fiscal_I[0] == 0.0
    assert out.emergency[0] == 0.0


def test_severed_rejection_block_frees_spending():
    fp = FiscalParams()
    enabled = tuple(f for f in FOUR_NARRATIVE_FACTORS if f != "f10")
    out = snapshot(enabled=enabled, fiscal_params=fp,
                   g=np.array([0.0]), phi=np.array([0.5]))
    assert out.fiscal_rho[0] == 0.0
    assert out.alpha_g_eff[0] == pytest.approx(fp.alpha_g, abs=1e-15)


def test_procurement_scales_innovation_rate():
    fp = FiscalParams()
    out = snapshot(enabled=("f9",), fiscal_params=fp,
                   g=np.array([0.1]), phi=np.array([0.5]))
    assert out.lambda_v_eff[0] == pytest.approx(
        VAX.innovation_rate * (1.0 + fp.zeta * 0.1), abs=1e-15)


# --- symmetrisation ---------------------------------------------------------

def test_symmetrise_odd_function_vanishes():
    f = spec(lambda x: x[:, 0], [(-1.0, 1.0)])
    f_sym = symmetrise(f)
    xs = np.linspace(-1, 1, 21)[:, None]
    np.testing.assert_allclose(f_sym(xs), np.zeros(21), atol=1e-15)
    assert f_sym.id == "test_sym"


def test_symmetrise_relu_gives_half_abs():
    f = spec(lambda x: np.maximum(x[:, 0], 0.0), [(-1.0, 1.0)])
    f_sym = symmetrise(f)
    xs = np.linspace(-1, 1, 21)[:, None]
    np.testing.assert_allclose(f_sym(xs), np.abs(xs[:, 0]) / 2.0, atol=1e-15)


def test_symmetrise_demand_drag_is_constant():
    reg = build_factor_registry(HAB, t=0.0)
    f_sym = symmetrise(reg["f1"])
    xs = np.linspace(0, 1, 11)[:, None]
    eta_d = demand_elasticity(0.0, HAB)
    np.testing.assert_allclose(f_sym(xs), np.full(11, -eta_d / 2.0), atol=1e-15)


def test_symmetrise_idempotent():
    f = spec(lambda x: np.maximum(x[:, 0], 0.0) + 0.3 * x[:, 0] ** 2,
             [(-1.0, 1.0)])
    once = symmetrise(f)
    twice = symmetrise(once)
    xs = np.linspace(-1, 1, 33)[:, None]
    np.testing.assert_allclose(once(xs), twice(xs), atol=1e-15)
    assert twice.id == "test_sym"  # suffix does not stack


def test_symmetrise_rejects_unbounded_domain():
    with pytest.raises(UnboundedDomainError):
        symmetrise(spec(lambda x: x[:, 0], [(0.0, math.inf)]))
    with pytest.raises(UnboundedDomainError):
        symmetrise(spec(lambda x: x[:, 0], [(None, 1.0)]))


# --- asymmetry audit --------------------------------------------------------

def test_ratio_linear_odd_is_exactly_half():
    ratio = asymmetry_ratio(spec(lambda x: x[:, 0], [(-1.0, 1.0)]))
    assert ratio == pytest.approx(0.5, abs=1e-12)


def test_ratio_sign_definite_factors():
    reg = build_factor_registry(HAB, fiscal_params=FiscalParams(), narratives=4)
    assert asymmetry_ratio(reg["f1"]) == 0.0
    assert asymmetry_ratio(reg["f8"]) == 1.0
    assert asymmetry_ratio(reg["f4"]) == 1.0
    assert asymmetry_ratio(reg["f5"]) == 1.0


def test_ratio_of_symmetrised_mixed_sign_factors():
    # factors whose even part balances sign: audit must report 0.5
    mixed = [
        spec(lambda x: x[:, 0] * x[:, 1] + x[:, 0],
             [(-1.0, 1.0), (-1.0, 1.0)]),
        spec(lambda x: np.sin(3 * x[:, 0]) * x[:, 1] + 0.7 * x[:, 1],
             [(-2.0, 2.0), (-1.0, 1.0)]),
        # even part cos(pi*x): positive and negative lobes mirror exactly
        spec(lambda x: np.cos(np.pi * x[:, 0]) + 0.3 * x[:, 0], [(-1.0, 1.0)]),
    ]
    for f in mixed:
        r = asymmetry_ratio(symmetrise(f))
        assert abs(r - 0.5) <= 0.02, f.id


def test_ratio_grid_pairs_points_with_reflections():
    # a factor odd about an off-centre midpoint still lands on one half
    f = spec(lambda x: x[:, 0] - 0.35, [(0.2, 0.5)])
    assert asymmetry_ratio(f) == pytest.approx(0.5, abs=1e-12)


def test_zero_factor_raises():
    with pytest.raises(ZeroFactorError):
        asymmetry_ratio(spec(lambda x: 0.0 * x[:, 0], [(-1.0, 1.0)]))


def test_ratio_rejects_unbounded_domain_and_bad_samples():
    f_unbounded = spec(lambda x: x[:, 0], [(0.0, math.inf)])
    with pytest.raises(UnboundedDomainError):
        asymmetry_ratio(f_unbounded)
    f = spec(lambda x: x[:, 0], [(-1.0, 1.0)])
    with pytest.raises(ValueError):
        asymmetry_ratio(f, samples=0)


def test_asymmetry_profile_flags():
    reg = build_factor_registry(HAB)
    prof1 = asymmetry_profile(reg["f1"])
    assert prof1["outcome"] == "ratio"
    assert prof1["ratio"] == 0.0 and prof1["sign_definite"]
    prof4 = asymmetry_profile(reg["f4"])
    assert prof4["ratio"] == 1.0 and prof4["sign_definite"]
    zero = asymmetry_profile(spec(lambda x: 0.0 * x[:, 0], [(-1.0, 1.0)]))
    assert zero["outcome"] == "zero-factor"


def test_symmetrised_snapshot_uses_even_parts():
    out = snapshot(enabled=("f1",), symmetrised=True)
    eta_d = demand_elasticity(0.0, HAB)
    assert out.delta_r_n[0] == pytest.approx(-eta_d / 2.0, abs=1e-15)
    out5 = snapshot(enabled=("f5",), symmetrised=True)
    # even part of 1 + 5*max(0,-y) is 1 + 2.5*|y|
    assert out5.mandate_multiplier[0] == pytest.approx(1.0 + 2.5 * 0.05,
                                                       abs=1e-15)


def test_recession_threshold_scaling_in_registry():
    fp = FiscalParams()
    reg = build_factor_registry(HAB, fiscal_params=fp, narratives=4)
    tau_eff = fp.tau * TAU_SCALE
    assert reg["f7"]([[-tau_eff - 1e-9]])[0] == 1.0
    assert reg["f7"]([[-tau_eff + 1e-9]])[0] == 0.0


def test_habituation_validation():
    with pytest.raises(ValueError):
        HabituationParams(h=-0.1).validate()
    HAB.validate()
