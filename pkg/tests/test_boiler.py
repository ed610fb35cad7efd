"""Boiler dynamics against a hand-evaluated energy balance.

The frozen numbers were computed by walking the capacity and balance
expressions term by term in strict SI from the saturation record at
57 bar (independent of boiler.py's own arithmetic, which works from
the same property fits but is exercised as a black box here).
"""

import pytest

from steamfleet.boiler import (BoilerInputs, BoilerState, ModelValidityError,
                               balance_gas, derivatives, phi, simulate, step)
from steamfleet.config import default_fleet
from steamfleet.properties import saturation

B1 = default_fleet()[0]
MID = BoilerState(p=57.0, V_w=0.5 * B1.V_T)

PHI_B1_57 = 63.995651555293286        # J/Pa
DPDT_ORACLE = 0.02208517928448084     # bar/s at (q_g=.4, q_f=.55, q_s=.6)
DVWDT_ORACLE = -2.4766786873546708e-05
BALANCE_GAS_06 = 0.37261340672232207  # kg/s holding 57 bar at q_s=0.6


def test_capacity_matches_frozen_hand_evaluation():
    assert phi(B1, MID) == pytest.approx(PHI_B1_57, rel=1e-12)


def test_capacity_matches_independent_recomputation():
    # Same walk as the frozen oracle, written out against the raw
    # saturation record so a property regression cannot hide.
    s = saturation(MID.p)
    V_w = MID.V_w
    V_s = B1.V_T - V_w
    to_si = 1e3 / 1e5
    vapor = V_s * (s.h_s * 1e3 * s.drho_s_dp / 1e5 + s.rho_s * s.dh_s_dp * to_si)
    liquid = V_w * (s.h_w * 1e3 * s.drho_w_dp / 1e5 + s.rho_w * s.dh_w_dp * to_si)
    metal = B1.m_T * B1.c_p * 1e3 * s.dT_s_dp / 1e5
    slope = (s.drho_w_dp * V_w + s.drho_s_dp * V_s) / 1e5
    mix = slope * (s.rho_w * s.h_w - s.rho_s * s.h_s) * 1e3 / (s.rho_w - s.rho_s)
    expected = vapor + liquid + B1.V_T + metal - mix
    assert phi(B1, MID) == pytest.approx(expected, rel=1e-12)


def test_capacity_positive_across_fleet_and_pressure():
    for b in default_fleet():
        for p in (20.0, 40.0, 57.0, 75.0, 90.0):
            for frac in (0.1, 0.5, 0.9):
                assert phi(b, BoilerState(p, frac * b.V_T)) > 0.0


def test_capacity_drops_when_vapor_space_vanishes():
    # With V_w -> V_T the vapor storage term disappears.
    near_full = BoilerState(57.0, 0.999 * B1.V_T)
    assert phi(B1, near_full) != pytest.approx(phi(B1, MID), rel=1e-3)


def test_derivatives_match_frozen_oracle():
    dp, dvw = derivatives(B1, MID, BoilerInputs(q_g=0.4, q_f=0.55, q_s=0.6))
    assert dp == pytest.approx(DPDT_ORACLE, rel=1e-12)
    assert dvw == pytest.approx(DVWDT_ORACLE, rel=1e-12)


def test_balanced_flows_hold_pressure():
    q_s = 0.6
    q_g = balance_gas(B1, 57.0, q_s)
    assert q_g == pytest.approx(BALANCE_GAS_06, rel=1e-12)
    dp, dvw = derivatives(B1, MID, BoilerInputs(q_g=q_g, q_f=q_s, q_s=q_s))
    assert dp == pytest.approx(0.0, abs=1e-15)
    assert dvw == pytest.approx(0.0, abs=1e-15)
    end = simulate(B1, MID, BoilerInputs(q_g, q_s, q_s), 300.0, 1.0)
    assert end.p == pytest.approx(57.0, abs=1e-12)
    assert end.V_w == pytest.approx(MID.V_w, abs=1e-12)


def test_excess_heat_raises_pressure_and_shrinks_liquid():
    q_g = balance_gas(B1, 57.0, 0.6) + 0.05
    nxt = simulate(B1, MID, BoilerInputs(q_g, 0.6, 0.6), 60.0, 1.0)
    assert nxt.p > 57.0
    assert nxt.V_w < MID.V_w


def test_rk4_step_converges_on_refinement():
    inputs = BoilerInputs(q_g=0.5, q_f=0.55, q_s=0.6)
    coarse = simulate(B1, MID, inputs, 10.0, 1.0)
    fine = simulate(B1, MID, inputs, 10.0, 0.5)
    finer = simulate(B1, MID, inputs, 10.0, 0.25)
    assert coarse.p == pytest.approx(fine.p, abs=1e-9)
    assert fine.p == pytest.approx(finer.p, abs=1e-10)
    assert coarse.V_w == pytest.approx(fine.V_w, abs=1e-10)


def test_duration_must_be_multiple_of_dt():
    with pytest.raises(ValueError):
        simulate(B1, MID, BoilerInputs(0.4, 0.6, 0.6), 10.5, 1.0)


@pytest.mark.parametrize("v_w", [0.0, -0.1, 1.21, 1.3])
def test_liquid_volume_bounds_guarded(v_w):
    with pytest.raises(ModelValidityError):
        phi(B1, BoilerState(57.0, v_w))


def test_step_rejects_escape_from_validity_region():
    # Absurd feed flow drives V_w past V_T within one step.
    tight = BoilerState(57.0, 0.999 * B1.V_T)
    with pytest.raises(ModelValidityError):
        for _ in range(600):
            tight = step(B1, tight, BoilerInputs(q_g=0.0, q_f=0.0, q_s=1.2), 1.0)


def test_static_gain_chain():
    # Steady gas per unit steady steam equals the enthalpy lift over
    # the released heat; feed at command makes the chain exact.
    for b in default_fleet():
        g = balance_gas(b, b.p_sp, 1.0)
        s = saturation(b.p_sp)
        assert g == pytest.approx(
            (s.h_s - b.h_f) / (b.eta * b.lambda_lhv), rel=1e-12)
