"""Saturated steam and water properties on the boiler operating range.

All thermodynamic data used by the boiler model comes from degree-5
polynomial fits to the IAPWS-IF97 saturation line over 10..100 bar, with
extra fitting weight around the 57 bar operating point.  The coefficients
are frozen constants produced by ``scripts/fit_saturation_polynomials.py``;
derivatives are the exact analytic derivatives of the fitted polynomials,
so every property curve is smooth and self-consistent by construction.

Units: pressure in bar, temperature in K, density in kg/m3, specific
enthalpy in kJ/kg.  Derivatives are per bar.
"""

from dataclasses import dataclass

P_MIN = 10.0
P_MAX = 100.0

# normalization u = (p - _P_CENTER) / _P_HALFSPAN maps [10, 100] to [-1, 1]
_P_CENTER = 55.0
_P_HALFSPAN = 45.0

# Coefficients in ascending powers of u.  Max relative fit error over the
# range is 2.1e-3 (saturation temperature at the 10 bar edge); at 57 bar
# every curve is within 1.1e-4 of IF97.
_TSAT_C = (
    543.0743375477697,
    52.4758789493219,
    -14.887009262355672,
    5.659305884664589,
    -8.91141310934196,
    7.169688694404892,
)
_RHO_W_C = (
    767.5434535440907,
    -87.11794733087066,
    12.175747214482081,
    -6.608809841625173,
    7.488225395880299,
    -5.327086077839236,
)
_RHO_S_C = (
    28.056475690482934,
    24.600011461436974,
    2.2551270412866504,
    0.454318549615506,
    -0.006768302066656727,
    0.10247591775333374,
)
_H_W_C = (
    1184.7379769040974,
    267.17388929568114,
    -59.04352071589747,
    22.203139285453485,
    -37.57333530453867,
    32.59114396440551,
)
_H_S_C = (
    2789.6538108656728,
    -43.415642382504565,
    -23.884390468373805,
    6.742270662177217,
    -13.386035263390525,
    10.3292054999487,
)

# Feed water enthalpy for liquid at 105 C (IF97 saturated liquid), kJ/kg.
H_FEED_105C = 440.2131268412942


class PressureRangeError(ValueError):
    """Pressure outside the fitted saturation range."""

    def __init__(self, p):
        self.p = p
        super().__init__(
            f"pressure {p!r} bar outside fitted range [{P_MIN}, {P_MAX}] bar"
        )


def _dcoef(c):
    return tuple((k + 1) * c[k + 1] for k in range(len(c) - 1))


_D_TSAT_C = _dcoef(_TSAT_C)
_D_RHO_W_C = _dcoef(_RHO_W_C)
_D_RHO_S_C = _dcoef(_RHO_S_C)
_D_H_W_C = _dcoef(_H_W_C)
_D_H_S_C = _dcoef(_H_S_C)


def _horner(c, u):
    acc = 0.0
    for ck in reversed(c):
        acc = acc * u + ck
    return acc


@dataclass(frozen=True)
class SaturationPoint:
    """Saturation state and pressure slopes at one pressure.

    Attributes
    ----------
    p : float
        Pressure, bar.
    T_s : float
        Saturation temperature, K.
    rho_w, rho_s : float
        Saturated liquid / vapor density, kg/m3.
    h_w, h_s : float
        Saturated liquid / vapor enthalpy, kJ/kg.
    dT_s_dp, drho_w_dp, drho_s_dp, dh_w_dp, dh_s_dp : float
        Derivatives of the above with respect to pressure, per bar.
    """

    p: float
    T_s: float
    rho_w: float
    rho_s: float
    h_w: float
    h_s: float
    dT_s_dp: float
    drho_w_dp: float
    drho_s_dp: float
    dh_w_dp: float
    dh_s_dp: float


def saturation(p):
    """Saturation properties at pressure ``p`` in bar.

    Raises :class:`PressureRangeError` outside [10, 100] bar.
    """
    if not (P_MIN <= p <= P_MAX):
        raise PressureRangeError(p)
    u = (p - _P_CENTER) / _P_HALFSPAN
    s = 1.0 / _P_HALFSPAN
    return SaturationPoint(
        p=p,
        T_s=_horner(_TSAT_C, u),
        rho_w=_horner(_RHO_W_C, u),
        rho_s=_horner(_RHO_S_C, u),
        h_w=_horner(_H_W_C, u),
        h_s=_horner(_H_S_C, u),
        dT_s_dp=_horner(_D_TSAT_C, u) * s,
        drho_w_dp=_horner(_D_RHO_W_C, u) * s,
        drho_s_dp=_horner(_D_RHO_S_C, u) * s,
        dh_w_dp=_horner(_D_H_W_C, u) * s,
        dh_s_dp=_horner(_D_H_S_C, u) * s,
    )
