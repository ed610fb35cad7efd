"""Generate the checked-in saturation property polynomials.

Evaluates the IAPWS-IF97 saturation line (regions 1, 2 and 4) on a dense
pressure grid over [10, 100] bar, fits degree-5 polynomials in a normalized
pressure variable, and prints the coefficient block that is frozen into
``steamfleet.properties`` together with the 57 bar oracle record used by the
tests.

The IF97 subset below is self-validating: it asserts the verification values
published with the formulation release before producing any output.

Run:  python scripts/fit_saturation_polynomials.py
"""

import math

import numpy as np

R = 0.461526  # kJ/(kg K), specific gas constant of water

# Region 1 (liquid) Gibbs coefficients.
R1_I = [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3, 3,
        4, 4, 4, 5, 8, 8, 21, 23, 29, 30, 31, 32]
R1_J = [-2, -1, 0, 1, 2, 3, 4, 5, -9, -7, -1, 0, 1, 3, -3, 0, 1, 3, 17,
        -4, 0, 6, -5, -2, 10, -8, -11, -6, -29, -31, -38, -39, -40, -41]
R1_N = [0.14632971213167, -0.84548187169114, -0.37563603672040e1,
        0.33855169168385e1, -0.95791963387872, 0.15772038513228,
        -0.16616417199501e-1, 0.81214629983568e-3, 0.28319080123804e-3,
        -0.60706301565874e-3, -0.18990068218419e-1, -0.32529748770505e-1,
        -0.21841717175414e-1, -0.52838357969930e-4, -0.47184321073267e-3,
        -0.30001780793026e-3, 0.47661393906987e-4, -0.44141845330846e-5,
        -0.72694996297594e-15, -0.31679644845054e-4, -0.28270797985312e-5,
        -0.85205128120103e-9, -0.22425281908000e-5, -0.65171222895601e-6,
        -0.14341729937924e-12, -0.40516996860117e-6, -0.12734301741641e-8,
        -0.17424871230634e-9, -0.68762131295531e-18, 0.14478307828521e-19,
        0.26335781662795e-22, -0.11947622640071e-22, 0.18228094581404e-23,
        -0.93537087292458e-25]

# Region 2 (vapor) ideal-gas part.
R2_J0 = [0, 1, -5, -4, -3, -2, -1, 2, 3]
R2_N0 = [-0.96927686500217e1, 0.10086655968018e2, -0.56087911283020e-2,
         0.71452738081455e-1, -0.40710498223928, 0.14240819171444e1,
         -0.43839511319450e1, -0.28408632460772, 0.21268463753307e-1]

# Region 2 residual part.
R2_I = [1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3, 4, 4, 4, 5, 6, 6, 6,
        7, 7, 7, 8, 8, 9, 10, 10, 10, 16, 16, 18, 20, 20, 20, 21, 22, 23,
        24, 24, 24]
R2_JR = [0, 1, 2, 3, 6, 1, 2, 4, 7, 36, 0, 1, 3, 6, 35, 1, 2, 3, 7, 3, 16,
         35, 0, 11, 25, 8, 36, 13, 4, 10, 14, 29, 50, 57, 20, 35, 48, 21,
         53, 39, 26, 40, 58]
R2_NR = [-0.17731742473213e-2, -0.17834862292358e-1, -0.45996013696365e-1,
         -0.57581259083432e-1, -0.50325278727930e-1, -0.33032641670203e-4,
         -0.18948987516315e-3, -0.39392777243355e-2, -0.43797295650573e-1,
         -0.26674547914087e-4, 0.20481737692309e-7, 0.43870667284435e-6,
         -0.32277677238570e-4, -0.15033924542148e-2, -0.40668253562649e-1,
         -0.78847309559367e-9, 0.12790717852285e-7, 0.48225372718507e-6,
         0.22922076337661e-5, -0.16714766451061e-10, -0.21171472321355e-2,
         -0.23895741934104e2, -0.59059564324270e-17, -0.12621808899101e-5,
         -0.38946842435739e-1, 0.11256211360459e-10, -0.82311340897998e1,
         0.19809712802088e-7, 0.10406965210174e-18, -0.10234747095929e-12,
         -0.10018179379511e-8, -0.80882908646985e-10, 0.10693031879409,
         -0.33662250574171, 0.89185845355421e-24, 0.30629316876232e-12,
         -0.42002467698208e-5, -0.59056029685639e-25, 0.37826947613457e-5,
         -0.12768608934681e-14, 0.73087610595061e-28, 0.55414715350778e-16,
         -0.94369707241210e-6]

# Region 4 saturation-line coefficients.
R4_N = [0.11670521452767e4, -0.72421316703206e6, -0.17073846940092e2,
        0.12020824702470e5, -0.32325550322333e7, 0.14915108613530e2,
        -0.48232657361591e4, 0.40511340542057e6, -0.23855557567849,
        0.65017534844798e3]


def tsat(p_mpa):
    """Saturation temperature [K] from pressure [MPa] (region 4 backward)."""
    beta = p_mpa ** 0.25
    e = beta * beta + R4_N[2] * beta + R4_N[5]
    f = R4_N[0] * beta * beta + R4_N[3] * beta + R4_N[6]
    g = R4_N[1] * beta * beta + R4_N[4] * beta + R4_N[7]
    d = 2.0 * g / (-f - math.sqrt(f * f - 4.0 * e * g))
    x = R4_N[9] + d
    return 0.5 * (x - math.sqrt(x * x - 4.0 * (R4_N[8] + R4_N[9] * d)))


def psat(t_k):
    """Saturation pressure [MPa] from temperature [K] (region 4 forward)."""
    ups = t_k + R4_N[8] / (t_k - R4_N[9])
    a = ups * ups + R4_N[0] * ups + R4_N[1]
    b = R4_N[2] * ups * ups + R4_N[3] * ups + R4_N[4]
    c = R4_N[5] * ups * ups + R4_N[6] * ups + R4_N[7]
    return (2.0 * c / (-b + math.sqrt(b * b - 4.0 * a * c))) ** 4


def region1_vh(t_k, p_mpa):
    """Liquid specific volume [m3/kg] and enthalpy [kJ/kg]."""
    pi = p_mpa / 16.53
    tau = 1386.0 / t_k
    gp = 0.0
    gt = 0.0
    for i, j, n in zip(R1_I, R1_J, R1_N):
        a = 7.1 - pi
        b = tau - 1.222
        gp -= n * i * a ** (i - 1) * b ** j
        gt += n * a ** i * j * b ** (j - 1)
    v = R * t_k * pi * gp / (p_mpa * 1000.0)
    h = R * t_k * tau * gt
    return v, h


def region2_vh(t_k, p_mpa):
    """Vapor specific volume [m3/kg] and enthalpy [kJ/kg]."""
    pi = p_mpa
    tau = 540.0 / t_k
    gp0 = 1.0 / pi
    gt0 = 0.0
    for j, n in zip(R2_J0, R2_N0):
        gt0 += n * j * tau ** (j - 1)
    gpr = 0.0
    gtr = 0.0
    for i, j, n in zip(R2_I, R2_JR, R2_NR):
        gpr += n * i * pi ** (i - 1) * (tau - 0.5) ** j
        gtr += n * pi ** i * j * (tau - 0.5) ** (j - 1)
    v = R * t_k * pi * (gp0 + gpr) / (p_mpa * 1000.0)
    h = R * t_k * tau * (gt0 + gtr)
    return v, h


def selfcheck():
    """Assert the verification values from the IF97 release tables."""
    assert abs(tsat(0.1) - 0.372755919e3) < 1e-6
    assert abs(tsat(1.0) - 0.453035632e3) < 1e-6
    assert abs(tsat(10.0) - 0.584149488e3) < 1e-6
    assert abs(psat(300.0) - 0.353658941e-2) < 1e-11
    assert abs(psat(500.0) - 0.263889776e1) < 1e-8
    assert abs(psat(600.0) - 0.123443146e2) < 1e-7
    v, h = region1_vh(300.0, 3.0)
    assert abs(v - 0.100215168e-2) < 1e-11
    assert abs(h - 0.115331273e3) < 1e-6
    v, h = region1_vh(300.0, 80.0)
    assert abs(v - 0.971180894e-3) < 1e-11
    v, h = region1_vh(500.0, 3.0)
    assert abs(h - 0.975542239e3) < 1e-6
    v, h = region2_vh(300.0, 0.0035)
    assert abs(v - 0.394913866e2) < 1e-7
    assert abs(h - 0.254991145e4) < 1e-5
    v, h = region2_vh(700.0, 30.0)
    assert abs(v - 0.542946619e-2) < 1e-11
    assert abs(h - 0.263149474e4) < 1e-5


def sat_record(p_bar):
    p_mpa = p_bar / 10.0
    t = tsat(p_mpa)
    vw, hw = region1_vh(t, p_mpa)
    vs, hs = region2_vh(t, p_mpa)
    return t, 1.0 / vw, 1.0 / vs, hw, hs


P_CENTER = 55.0
P_HALFSPAN = 45.0


def main():
    selfcheck()
    p = np.linspace(10.0, 100.0, 721)
    recs = np.array([sat_record(pb) for pb in p])
    names = ["TSAT", "RHO_W", "RHO_S", "H_W", "H_S"]
    u = (p - P_CENTER) / P_HALFSPAN
    print("# degree-5 fits in u = (p_bar - %.1f) / %.1f" % (P_CENTER, P_HALFSPAN))
    print("# relative-error weighting with extra weight near 57 bar")
    for k, name in enumerate(names):
        w = (1.0 / np.abs(recs[:, k])) * (1.0 + 3.0 * np.exp(-((p - 57.0) / 18.0) ** 2))
        c = np.polynomial.polynomial.polyfit(u, recs[:, k], 5, w=w)
        fit = np.polynomial.polynomial.polyval(u, c)
        rel = np.abs(fit - recs[:, k]) / np.abs(recs[:, k])
        print("_%s_C = (" % name)
        for cc in c:
            print("    %r," % float(cc))
        print(")  # max rel err %.3e (at %.2f bar)" % (rel.max(), p[rel.argmax()]))
    print()
    t57, rw57, rs57, hw57, hs57 = sat_record(57.0)
    print("# IF97 oracle at 57.0 bar")
    print("T_s   = %r" % t57)
    print("rho_w = %r" % rw57)
    print("rho_s = %r" % rs57)
    print("h_w   = %r" % hw57)
    print("h_s   = %r" % hs57)
    # finite-difference property slopes at 57 bar, for the boiler oracle
    eps = 1e-3
    lo = sat_record(57.0 - eps)
    hi = sat_record(57.0 + eps)
    for k, name in enumerate(["dT_s", "drho_w", "drho_s", "dh_w", "dh_s"]):
        print("%s/dp = %r" % (name, (hi[k] - lo[k]) / (2 * eps)))
    # feed water: saturated liquid at 105 C
    t_f = 105.0 + 273.15
    _, h_f = region1_vh(t_f, psat(t_f))
    print("h_f(105 C sat liquid) = %r" % h_f)


if __name__ == "__main__":
    main()
