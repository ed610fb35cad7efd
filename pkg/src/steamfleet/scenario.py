"""End-to-end orchestration: identification, then the three-layer loop.

Timing contract per slow period T = nu * tau: the fast PI loops step
every tau against the nonlinear plants; at every slow boundary the
measured per-station gas (known before the steam split is chosen,
because the pressure loop does not see the incoming command) feeds the
tracking controller; the share optimizer re-runs on demand moves or on
its fixed cycle and triggers an ensemble/controller rebuild plus a
rate-budgeted hand-off move.

The observed one-step ensemble mismatch is audited against the
certified bound, and every measured flow is checked against its box at
each slow step; violations are recorded, never silently clipped.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .boiler import balance_gas
from .config import ConfigError, validate_config
from .ensemble import (aggregate, estimate_disturbance_bound, make_reference,
                       resample)
from .highlevel import should_resolve, solve_shares, station_data
from .lowlevel import apply_period, gas_update, init_station, station_step
from .mpc import (build_controller, ensemble_state, first_move_cap,
                  measured_state)
from .sysid import (ArxOrders, IdentifiabilityError, ModelQualityError,
                    excitation_levels, fit_arx, realize, split_validation,
                    validate_model)


class ScenarioError(RuntimeError):
    """A layer failed mid-run; carries the simulated time."""

    def __init__(self, t, message):
        super().__init__(f"t={t:.0f}s: {message}")
        self.t = t


@dataclass(frozen=True)
class IdentifiedStation:
    model: object
    fit: float
    spectral_radius: float


@dataclass(frozen=True)
class Frame:
    """One fast-period record; state values are at the period start."""
    t: float
    demand: float
    r: float
    r_hat: float
    u_bar: float
    y_bar: float
    u_ss: float
    alpha: tuple
    delta: tuple
    qs: tuple
    qg: tuple
    qf: tuple
    p: tuple
    vw: tuple


@dataclass
class RunReport:
    frames: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    max_w_obs: float = 0.0
    w_certified: float = 0.0
    hl_solves: int = 0
    total_gas: float = 0.0
    total_steam: float = 0.0
    wall_ms: float = 0.0
    idents: list = field(default_factory=list)

    @property
    def n_boilers(self):
        return len(self.frames[0].qs) if self.frames else 0


def demand_at(profile, t):
    value = profile[0][1]
    for ts, v in profile:
        if t >= ts:
            value = v
        else:
            break
    return value


def identification_experiment(params, cfg_r, cfg_c, ident, tau, dt,
                              vw_frac=0.5):
    """Closed-loop excitation record for one station.

    Shuffled levels spanning the steam range the gas box admits, each
    held ``hold_s``, with transitions ramped at ``ramp_step`` per fast
    period: full-span jumps would rail the pressure loop and poison the
    linear fit, and operation is rate-limited anyway.  Samples are
    (commanded steam, gas in force) per fast period.
    """
    g_phys = balance_gas(params, params.p_sp, 1.0)
    lo = max(params.q_s_min, params.q_g_min / g_phys)
    levels = excitation_levels(lo, params.q_s_max, ident.n_levels, ident.seed)
    if not levels:
        raise IdentifiabilityError("empty excitation profile")
    hold = round(ident.hold_s / tau)
    cmds = []
    cur = levels[0]
    for lvl in levels:
        while abs(lvl - cur) > ident.ramp_step + 1e-12:
            cur += ident.ramp_step * (1.0 if lvl > cur else -1.0)
            cmds.append(cur)
        cur = lvl
        cmds.extend([lvl] * hold)
    state = init_station(params, levels[0], vw_frac)
    us, ys = [], []
    for cmd in cmds:
        state, q_g, _ = station_step(params, cfg_r, cfg_c, state,
                                     cmd, tau, dt)
        us.append(cmd)
        ys.append(q_g)
    return np.array(us), np.array(ys)


def run_identification(cfg):
    """Fit and gate one model per configured boiler."""
    out = []
    orders = ArxOrders(cfg.ident.n_f, cfg.ident.n_b, cfg.ident.n_k)
    for i, params in enumerate(cfg.boilers):
        try:
            u, y = identification_experiment(params, cfg.pi_r[i], cfg.pi_c[i],
                                             cfg.ident, cfg.timing.tau,
                                             cfg.timing.dt, cfg.vw_frac)
            val_sl, train_sl = split_validation(len(u), cfg.ident.val_frac)
            model = fit_arx(u[train_sl], y[train_sl], orders, cfg.timing.tau)
            fit, rho = validate_model(model, u[val_sl], y[val_sl],
                                      cfg.ident.fit_min)
            if abs(model.gain) < 1e-9:
                raise ModelQualityError(f"static gain {model.gain!r} is zero")
        except (IdentifiabilityError, ModelQualityError) as exc:
            raise type(exc)(f"boiler {i + 1}: {exc}") from exc
        out.append(IdentifiedStation(model=model, fit=fit,
                                     spectral_radius=rho))
    return out


def select_template(models, delta_u, nu, safety):
    """Index of the model whose dynamics, shared across the fleet, give
    the smallest certified mismatch bound.

    The template fixes the common denominator of every reference model,
    so the relevant figure of merit is the disturbance bound the slow
    controller will have to absorb, not any property of the template in
    isolation.  Ties break to the lower index.
    """
    actuals = [realize(m) for m in models]
    best, best_w = 0, math.inf
    for t, cand in enumerate(models):
        refs = [make_reference(m, cand) for m in models]
        w = estimate_disturbance_bound(refs, actuals, delta_u, nu,
                                       safety=safety).w_inf
        if w < best_w:
            best, best_w = t, w
    return best


def _distribute(u_bar, delta, alpha):
    """Per-station commands with exact conservation of the total."""
    active = [i for i, d in enumerate(delta) if d]
    u = [0.0] * len(delta)
    acc = 0.0
    for i in active[:-1]:
        u[i] = alpha[i] * u_bar
        acc += u[i]
    u[active[-1]] = u_bar - acc
    return u


def _audit(t, u_bar, du, u_cmds, y_meas, delta, meas_delta, boilers, sets,
           tol=1e-9):
    """Constraint check at one slow boundary.

    Steam commands are judged under the configuration issuing them;
    measured gas is judged only for stations that were already active
    when the sample was taken, so a light-off or shut-down transient is
    not counted against the operating box it is still entering/leaving.
    """
    bad = []
    y_bar = sum(y for y, d in zip(y_meas, delta) if d)
    u_tot = sum(u_cmds)
    if not (sets.y_min - tol <= y_bar <= sets.y_max + tol):
        bad.append(f"t={t:.0f}s total gas {y_bar:.6f} outside global set")
    if not (sets.u_min - tol <= u_tot <= sets.u_max + tol):
        bad.append(f"t={t:.0f}s total steam {u_tot:.6f} outside global set")
    if abs(du) > sets.delta_u + tol:
        bad.append(f"t={t:.0f}s command step {du:.6f} beyond rate cap")
    for i, (b, d, md) in enumerate(zip(boilers, delta, meas_delta)):
        if d and not (b.q_s_min - tol <= u_cmds[i] <= b.q_s_max + tol):
            bad.append(f"t={t:.0f}s boiler {i + 1} steam {u_cmds[i]:.6f} "
                       "outside box")
        if d and md and not (b.q_g_min - tol <= y_meas[i] <= b.q_g_max + tol):
            bad.append(f"t={t:.0f}s boiler {i + 1} gas {y_meas[i]:.6f} "
                       "outside box")
    return bad


def run_scenario(cfg, idents=None):
    """Simulate the full stack; returns a :class:`RunReport`.

    ``idents`` may carry pre-fitted models to skip the identification
    experiments.  Any layer failure raises :class:`ScenarioError` with
    the simulated time attached.
    """
    t_start = time.perf_counter()
    issues = validate_config(cfg)
    if issues:
        raise ConfigError("; ".join(issues))
    if idents is None:
        idents = run_identification(cfg)
    models = [s.model for s in idents]
    template = models[select_template(models, cfg.sets.delta_u,
                                      cfg.timing.nu, cfg.mpc.w_safety)]
    refs = [make_reference(m, template) for m in models]
    actuals = [realize(m) for m in models]
    bound = estimate_disturbance_bound(refs, actuals, cfg.sets.delta_u,
                                       cfg.timing.nu,
                                       safety=cfg.mpc.w_safety)
    w_inf = bound.w_inf

    nu, tau, dt = cfg.timing.nu, cfg.timing.tau, cfg.timing.dt
    n_slow = int(round(cfg.timing.duration / (nu * tau)))
    n_b = len(cfg.boilers)
    hl_stations = [station_data(p, m) for p, m in zip(cfg.boilers, models)]

    report = RunReport(w_certified=w_inf, idents=list(idents))

    def reconfigure(t, shares):
        slow = resample(aggregate(refs, shares.delta, shares.alpha), nu)
        try:
            ctrl = build_controller(slow, hl_stations, shares.alpha,
                                    cfg.sets, w_inf, cfg.mpc)
        except Exception as exc:
            raise ScenarioError(t, f"controller rebuild failed: {exc}") from exc
        return slow, ctrl

    demand0 = demand_at(cfg.demand, 0.0)
    try:
        shares = solve_shares(hl_stations, demand0, cfg.sets, cfg.share)
    except Exception as exc:
        raise ScenarioError(0.0, f"initial dispatch failed: {exc}") from exc
    report.hl_solves = 1
    last_solve_step = 0
    slow, ctrl = reconfigure(0.0, shares)
    r = slow.gain * shares.u_ss

    states = [init_station(p, q, cfg.vw_frac)
              for p, q in zip(cfg.boilers, shares.flows)]
    u_cmds = _distribute(shares.u_ss, shares.delta, shares.alpha)
    u_bar = shares.u_ss
    r_hat = r

    # histories live on the station (fast) grid; the canonical-state
    # lags are fast lags, so seed enough equilibrium samples to cover
    # both the current state and the one nu periods back
    n_f_t, n_be_t = refs[0].n_f, refs[0].n_b_eff
    y_hists = [[states[i].loop_r.output] * (n_f_t + 1 + nu)
               for i in range(n_b)]
    u_hists = [[u_cmds[i]] * (max(1, n_be_t) + nu) for i in range(n_b)]

    x_pred = None
    pred_delta = None

    for m in range(n_slow):
        t = m * nu * tau
        # R loops tick first; their outputs are this instant's measurement
        pend = [gas_update(cfg.boilers[i], cfg.pi_r[i], states[i], tau)
                for i in range(n_b)]
        y_meas = [g for g, _ in pend]
        for i in range(n_b):
            y_hists[i].append(y_meas[i])

        if x_pred is not None:
            x_now_old = ensemble_state(refs, pred_delta, y_hists, u_hists)
            w_obs = float(np.max(np.abs(x_now_old - x_pred)))
            report.max_w_obs = max(report.max_w_obs, w_obs)

        demand = demand_at(cfg.demand, t)
        meas_delta = shares.delta
        first_move = None
        if m > 0 and should_resolve(demand, shares, m - last_solve_step,
                                    cfg.share):
            try:
                new_shares = solve_shares(hl_stations, demand, cfg.sets,
                                          cfg.share, previous=shares)
            except Exception as exc:
                raise ScenarioError(t, f"dispatch failed: {exc}") from exc
            report.hl_solves += 1
            last_solve_step = m
            changed = (new_shares.delta != shares.delta
                       or any(abs(a - b) > 1e-12
                              for a, b in zip(new_shares.alpha, shares.alpha)))
            if changed:
                first_move = first_move_cap(shares.alpha, shares.delta,
                                            new_shares.alpha,
                                            new_shares.delta,
                                            cfg.sets.delta_u)
                shares = new_shares
                # input memory follows the surviving ensemble: a removed
                # station takes its flow with it (diverted, not counted)
                u_bar = sum(u for u, d in zip(u_cmds, shares.delta) if d)
                slow, ctrl = reconfigure(t, shares)
            else:
                shares = new_shares
            r = slow.gain * shares.u_ss

        xi0 = measured_state(refs, shares.delta, y_hists, u_hists,
                             stride=nu)
        try:
            sol = ctrl.solve(xi0, u_bar, r, first_move=first_move)
        except Exception as exc:
            raise ScenarioError(t, f"tracking solve failed: {exc}") from exc
        du = sol.u_cmd - u_bar
        u_bar = sol.u_cmd
        r_hat = sol.r_hat
        # state at this instant needs u histories ending at u(k-1), so
        # take it before the new commands land on the history grid
        x_now = ensemble_state(refs, shares.delta, y_hists, u_hists)
        x_pred = slow.A @ x_now + slow.B.reshape(-1) * u_bar
        pred_delta = shares.delta
        u_cmds = _distribute(u_bar, shares.delta, shares.alpha)

        report.violations.extend(
            _audit(t, u_bar, du, u_cmds, y_meas, shares.delta, meas_delta,
                   cfg.boilers, cfg.sets))

        for j in range(nu):
            tf = t + j * tau
            qg_row, qf_row, p_row, vw_row = [], [], [], []
            for i in range(n_b):
                p_row.append(states[i].boiler.p)
                vw_row.append(states[i].boiler.V_w)
                if j == 0:
                    q_g, loop_r = pend[i]
                    states[i], q_f = apply_period(
                        cfg.boilers[i], cfg.pi_c[i], states[i], loop_r,
                        q_g, u_cmds[i], tau, dt)
                else:
                    states[i], q_g, q_f = station_step(
                        cfg.boilers[i], cfg.pi_r[i], cfg.pi_c[i], states[i],
                        u_cmds[i], tau, dt)
                    y_hists[i].append(q_g)
                u_hists[i].append(u_cmds[i])
                qg_row.append(q_g)
                qf_row.append(q_f)
            y_bar_acc = sum(g for g, d in zip(qg_row, shares.delta) if d)
            report.frames.append(Frame(
                t=tf, demand=demand_at(cfg.demand, tf), r=r, r_hat=r_hat,
                u_bar=u_bar, y_bar=y_bar_acc, u_ss=shares.u_ss,
                alpha=tuple(shares.alpha), delta=tuple(shares.delta),
                qs=tuple(u_cmds), qg=tuple(qg_row), qf=tuple(qf_row),
                p=tuple(p_row), vw=tuple(vw_row)))
            report.total_gas += sum(qg_row) * tau
            report.total_steam += sum(u_cmds) * tau

    report.wall_ms = (time.perf_counter() - t_start) * 1e3
    return report
