"""Economic load sharing across the fleet.

Chooses which stations burn and how the total steam command splits
among them.  Activation patterns are enumerated (the fleet is small);
for each pattern the continuous split solves a convex QP in the active
per-station flows v_i and the total u_ss:

    min  sum_i cost_i * (gain_i v_i + level_i) + lambda_bar (u_ss - demand)^2
    s.t. sum v = u_ss, station and plant boxes, rate coupling

The demand weight lambda_bar is large, so u_ss tracks demand unless a
bound binds; dividing the objective through by it keeps the QP kernel
numerics flat.  Rate coupling |v_i - alpha_i^prev u_ss^prev| <=
alpha_i^prev delta_u binds only stations active in both the previous
and the candidate pattern: an entrant has no previous share to move
from, and a leaver's flow is simply switched off.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .qp import solve_qp


@dataclass(frozen=True)
class StationData:
    gain: float      # steady gas per unit steam command
    level: float     # affine gas offset of the identified loop
    u_min: float
    u_max: float
    y_min: float
    y_max: float
    cost: float


def station_data(params, model):
    """Pack one station's optimizer view from its parameters and fit."""
    return StationData(gain=model.gain, level=model.gamma,
                       u_min=params.q_s_min, u_max=params.q_s_max,
                       y_min=params.q_g_min, y_max=params.q_g_max,
                       cost=params.lambda_cost)


@dataclass(frozen=True)
class ShareSolution:
    delta: tuple
    alpha: tuple
    u_ss: float
    flows: tuple       # per-station steam commands v_i
    cost: float        # true objective value
    demand: float
    degenerate: bool = False


class InfeasibleShareError(RuntimeError):
    def __init__(self, demand, diagnostics):
        self.demand = demand
        self.diagnostics = diagnostics
        lines = ", ".join(f"{d}: {why}" for d, why in diagnostics.items())
        super().__init__(f"no feasible activation for demand {demand}: {lines}")


def _pattern_qp(stations, active, demand, sets, cfg, lam_bar, previous):
    m = len(active)
    n = m + 1
    H = np.zeros((n, n))
    for j in range(m):
        H[j, j] = 2.0 * cfg.reg
    H[m, m] = 2.0
    f = np.zeros(n)
    for j, i in enumerate(active):
        f[j] = stations[i].cost * stations[i].gain / lam_bar
    f[m] = -2.0 * demand
    A = np.zeros((1, n))
    A[0, :m] = 1.0
    A[0, m] = -1.0
    b = np.zeros(1)
    rows, rhs = [], []

    def add(coefs, bound):
        rows.append(coefs)
        rhs.append(bound)

    e_u = np.zeros(n)
    e_u[m] = 1.0
    add(e_u, sets.u_max)
    add(-e_u, -sets.u_min)
    lev = sum(stations[i].level for i in active)
    g_row = np.zeros(n)
    for j, i in enumerate(active):
        g_row[j] = stations[i].gain
    add(g_row, sets.y_max - lev)
    add(-g_row, -(sets.y_min - lev))
    for j, i in enumerate(active):
        e = np.zeros(n)
        e[j] = 1.0
        st = stations[i]
        add(e, st.u_max)
        add(-e, -st.u_min)
        add(st.gain * e, st.y_max - st.level)
        add(-st.gain * e, -(st.y_min - st.level))
        add(e - e_u, 0.0)    # share stays within [0, 1]
        if previous is not None and previous.delta[i]:
            centre = previous.alpha[i] * previous.u_ss
            room = previous.alpha[i] * sets.delta_u
            add(e, centre + room)
            add(-e, -(centre - room))
    return H, f, np.array(rows), np.array(rhs), A, b


def _command_headroom(stations, active, flows, u_ss, sets):
    """Width of the total-command interval the split leaves open.

    At fixed shares every station box maps to an interval on the total
    command; a split that pins one station at a floor and another at a
    ceiling collapses the intersection to a point, leaving the tracking
    layer nowhere to move.
    """
    lo, hi = sets.u_min, sets.u_max
    for i, v in zip(active, flows):
        a = float(v) / u_ss
        if a <= 1e-12:
            continue
        st = stations[i]
        lo = max(lo, st.u_min / a, (st.y_min - st.level) / (st.gain * a))
        hi = min(hi, st.u_max / a, (st.y_max - st.level) / (st.gain * a))
    return hi - lo


def _true_cost(stations, active, flows, u_ss, demand, lam_bar):
    gas_cost = sum(stations[i].cost * (stations[i].gain * v + stations[i].level)
                   for i, v in zip(active, flows))
    return gas_cost + lam_bar * (u_ss - demand) ** 2


def solve_shares(stations, demand, sets, cfg, previous=None):
    """Best activation pattern and split for the demanded total steam.

    Ties within ``cfg.tie_tol`` resolve toward fewer active stations,
    then the lexicographically smallest pattern.  Raises
    :class:`InfeasibleShareError` when no pattern admits a feasible
    split, with per-pattern reasons attached.
    """
    n = len(stations)
    lam_bar = cfg.lambda_bar
    if lam_bar is None:
        lam_bar = 1e3 * max(st.cost for st in stations)
    candidates = []
    diagnostics = {}
    for delta in product((0, 1), repeat=n):
        if not any(delta):
            continue
        active = [i for i in range(n) if delta[i]]
        H, f, G, h, A, b = _pattern_qp(stations, active, demand, sets, cfg,
                                       lam_bar, previous)
        res = solve_qp(H, f, G, h, A, b)
        if res.status != "optimal":
            diagnostics[delta] = res.status
            continue
        m = len(active)
        flows = res.x[:m]
        u_ss = float(res.x[m])
        worst = max(float(np.max(G @ res.x - h)), 0.0)
        if worst > 1e-7:
            diagnostics[delta] = f"violated by {worst:.2e}"
            continue
        # a nonpositive floor disables the guard (width is roundoff-noisy
        # at vertex optima, where it is exactly zero)
        if cfg.min_headroom > 0.0 and u_ss > 1e-9:
            width = _command_headroom(stations, active, flows, u_ss, sets)
            if width < cfg.min_headroom:
                diagnostics[delta] = (f"command headroom {width:.4f} below "
                                      f"floor {cfg.min_headroom}")
                continue
        degenerate = abs(u_ss) < 1e-9
        if degenerate:
            alpha = [1.0 / m if delta[i] else 0.0 for i in range(n)]
        else:
            alpha = [0.0] * n
            for j, i in enumerate(active):
                alpha[i] = float(flows[j]) / u_ss
        full_flows = [0.0] * n
        for j, i in enumerate(active):
            full_flows[i] = float(flows[j])
        cost = _true_cost(stations, active, flows, u_ss, demand, lam_bar)
        candidates.append(ShareSolution(
            delta=delta, alpha=tuple(alpha), u_ss=u_ss,
            flows=tuple(full_flows), cost=float(cost), demand=demand,
            degenerate=degenerate))
    if not candidates:
        raise InfeasibleShareError(demand, diagnostics)
    best_cost = min(c.cost for c in candidates)
    window = cfg.tie_tol * max(1.0, abs(best_cost))
    near = [c for c in candidates if c.cost <= best_cost + window]
    near.sort(key=lambda c: (sum(c.delta), c.delta))
    return near[0]


def should_resolve(demand, previous, slow_steps_since, cfg):
    """Re-optimize on a demand move past the threshold or periodically."""
    if previous is None:
        return True
    if abs(demand - previous.demand) >= cfg.trigger_threshold - 1e-12:
        return True
    return slow_steps_since >= cfg.period_slow_steps
