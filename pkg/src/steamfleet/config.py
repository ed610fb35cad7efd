"""Configuration records for the three-layer plant controller.

Everything a run needs is collected in :class:`ScenarioConfig`, which
serializes to a versioned JSON document so experiments can be replayed
from a file.  ``default_config`` builds the five-generator fleet used
throughout; individual layers read only their own sub-record.
"""

import dataclasses
import json
from dataclasses import dataclass, field

from .boiler import BoilerParams
from .lowlevel import PIConfig

CONFIG_VERSION = 1

# Shipped fleet: five generators of similar construction but unequal
# tube volume, metal mass, burner efficiency and fuel contract price.
_V_T = (1.21, 1.15, 1.28, 1.14, 1.32)
_M_T = (5499.0, 5220.0, 5830.0, 5060.0, 5995.0)
_ETA = (0.90, 0.92, 0.89, 0.95, 0.99)
_Q_S = ((0.1, 1.264), (0.092, 1.16), (0.089, 1.125), (0.095, 1.20), (0.099, 1.25))
_Q_G = ((0.1251, 0.8588), (0.1273, 0.8435), (0.1295, 0.8458),
        (0.1253, 0.8414), (0.1227, 0.8389))
_LAMBDA = (100.0, 130.0, 120.0, 70.0, 80.0)

# Feed water drawn from the 105 degC condensate return header.
H_FEED = 440.2131268412942

# Pressure-loop gains were tuned on the nonlinear model for a uniform
# 120 s two-percent recovery with no overshoot across the whole fleet
# (scripts/calibrate_pressure_loop.py).  The feed filter gains give a
# one-period command tracker with a modest proportional kick.
R_GAINS = (0.1212, 3.5e-3)
C_GAINS = (0.31, 0.1)


class ConfigError(ValueError):
    """Configuration file or record failed validation."""


@dataclass(frozen=True)
class TimingConfig:
    dt: float = 1.0          # integration step, s
    tau: float = 10.0        # fast control period, s
    nu: int = 3              # slow period = nu * tau
    duration: float = 3600.0


@dataclass(frozen=True)
class GlobalSets:
    """Plant-wide command and production intervals plus the rate cap."""
    u_min: float = 0.089
    u_max: float = 6.0
    y_min: float = 0.1227
    y_max: float = 4.220
    delta_u: float = 0.5     # per slow period, kg/s


@dataclass(frozen=True)
class IdentConfig:
    n_f: int = 3
    n_b: int = 2
    n_k: int = 1
    n_levels: int = 12
    hold_s: float = 600.0
    ramp_step: float = 0.1   # per-period command ramp between held levels
    val_frac: float = 0.2
    fit_min: float = 95.0    # free-run fit percent gate
    seed: int = 2214


@dataclass(frozen=True)
class ShareConfig:
    """Load-share optimizer settings."""
    lambda_bar: float | None = None   # None: 1e3 * max fleet cost weight
    trigger_threshold: float = 3e-2   # demand move that forces a re-solve
    period_slow_steps: int = 5        # forced re-solve cadence
    reg: float = 1e-9                 # curvature floor on share variables
    tie_tol: float = 1e-9
    # a split is usable only if the per-station boxes, mapped through
    # the fixed shares, leave the tracking layer this much total-command
    # room; narrower patterns are treated as infeasible
    min_headroom: float = 0.5


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 10
    q_y: float = 1.0
    r_du: float = 0.1
    rho: float = 1e4          # artificial reference attraction
    lqr_q_dx: float = 1e-6    # state-increment weight in the tube gain design
    tube_eps: float = 0.01    # spectral tail cutoff for the tube sum
    w_safety: float = 1.25
    w_horizon: int = 200      # mismatch accumulation window, slow steps
    margin_frac_max: float = 0.5   # reject tightenings past half the width


@dataclass(frozen=True)
class ScenarioConfig:
    boilers: tuple[BoilerParams, ...]
    pi_r: tuple[PIConfig, ...]
    pi_c: tuple[PIConfig, ...]
    timing: TimingConfig = field(default_factory=TimingConfig)
    sets: GlobalSets = field(default_factory=GlobalSets)
    ident: IdentConfig = field(default_factory=IdentConfig)
    share: ShareConfig = field(default_factory=ShareConfig)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    demand: tuple[tuple[float, float], ...] = (
        (0.0, 2.0), (600.0, 2.2), (1200.0, 2.3),
        (1800.0, 3.2), (2450.0, 4.0), (3000.0, 3.3),
    )
    vw_frac: float = 0.5
    seed: int = 7


def default_fleet(lambda_lhv=4200.0, c_p=0.5, p_sp=57.0):
    boilers = []
    for i in range(5):
        boilers.append(BoilerParams(
            V_T=_V_T[i], m_T=_M_T[i], c_p=c_p, eta=_ETA[i],
            lambda_lhv=lambda_lhv, h_f=H_FEED,
            q_s_min=_Q_S[i][0], q_s_max=_Q_S[i][1],
            q_g_min=_Q_G[i][0], q_g_max=_Q_G[i][1],
            lambda_cost=_LAMBDA[i], p_sp=p_sp))
    return tuple(boilers)


def default_config():
    boilers = default_fleet()
    pi_r = tuple(PIConfig(R_GAINS[0], R_GAINS[1], 0.0, b.q_g_max)
                 for b in boilers)
    pi_c = tuple(PIConfig(C_GAINS[0], C_GAINS[1], 0.0, 1.5 * b.q_s_max)
                 for b in boilers)
    return ScenarioConfig(boilers=boilers, pi_r=pi_r, pi_c=pi_c)


def validate_config(cfg):
    """Return a list of problems; empty means the record is usable."""
    issues = []
    n = len(cfg.boilers)
    if n == 0:
        issues.append("no boilers")
    if len(cfg.pi_r) != n or len(cfg.pi_c) != n:
        issues.append("loop config count does not match boiler count")
    for i, b in enumerate(cfg.boilers):
        if b.V_T <= 0 or b.m_T <= 0 or b.c_p <= 0:
            issues.append(f"boiler {i}: non-positive physical parameter")
        if not (0 < b.eta <= 1):
            issues.append(f"boiler {i}: efficiency outside (0, 1]")
        if b.lambda_lhv <= 0:
            issues.append(f"boiler {i}: non-positive heating value")
        if not (0 <= b.q_s_min < b.q_s_max):
            issues.append(f"boiler {i}: bad steam interval")
        if not (0 <= b.q_g_min < b.q_g_max):
            issues.append(f"boiler {i}: bad gas interval")
        if not (10.0 < b.p_sp < 100.0):
            issues.append(f"boiler {i}: set-point outside the property fits")
    t = cfg.timing
    if t.dt <= 0 or t.tau <= 0 or t.nu < 1:
        issues.append("non-positive timing entry")
    elif abs(round(t.tau / t.dt) * t.dt - t.tau) > 1e-9:
        issues.append("tau must be a multiple of dt")
    s = cfg.sets
    if not (s.u_min < s.u_max and s.y_min < s.y_max):
        issues.append("empty global interval")
    if s.delta_u <= 0:
        issues.append("rate cap must be positive")
    if cfg.ident.val_frac <= 0 or cfg.ident.val_frac >= 1:
        issues.append("validation fraction outside (0, 1)")
    if cfg.mpc.horizon < 2:
        issues.append("horizon must be at least 2")
    if not (0 < cfg.mpc.tube_eps < 1):
        issues.append("tube cutoff outside (0, 1)")
    if not cfg.demand:
        issues.append("empty demand schedule")
    last = None
    for t_d, level in cfg.demand:
        if last is not None and t_d <= last:
            issues.append("demand schedule times must increase")
            break
        last = t_d
    return issues


def _as_dict(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _as_dict(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_as_dict(v) for v in obj]
    return obj


def to_json(cfg, indent=2):
    doc = {"version": CONFIG_VERSION, "scenario": _as_dict(cfg)}
    return json.dumps(doc, indent=indent)


def _tuple_of(cls, items):
    return tuple(cls(**d) for d in items)


def from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != CONFIG_VERSION:
        raise ConfigError(f"expected a version {CONFIG_VERSION} document")
    raw = doc.get("scenario")
    if not isinstance(raw, dict):
        raise ConfigError("missing scenario section")
    try:
        cfg = ScenarioConfig(
            boilers=_tuple_of(BoilerParams, raw["boilers"]),
            pi_r=_tuple_of(PIConfig, raw["pi_r"]),
            pi_c=_tuple_of(PIConfig, raw["pi_c"]),
            timing=TimingConfig(**raw["timing"]),
            sets=GlobalSets(**raw["sets"]),
            ident=IdentConfig(**raw["ident"]),
            share=ShareConfig(**raw["share"]),
            mpc=MpcConfig(**raw["mpc"]),
            demand=tuple((float(t), float(v)) for t, v in raw["demand"]),
            vw_frac=float(raw["vw_frac"]),
            seed=int(raw["seed"]),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed scenario section: {exc}") from exc
    issues = validate_config(cfg)
    if issues:
        raise ConfigError("; ".join(issues))
    return cfg
