"""ARX identification of the closed station loops.

Each station is identified from steam command to gas flow while its
local loops run, so the fitted model absorbs the regulation dynamics.
The structure is an affine ARX

    y(k) = -sum_j f_j y(k-j) + sum_j b_j u(k-n_k-j+1) + c + e(k)

whose constant term captures the operating level; the affine level
gamma = c / (1 + sum f) and the static gain g = sum b / (1 + sum f)
are what the upper layers consume.  ``realize`` turns the polynomial
form into an observable canonical state space whose states hold the
level-corrected outputs, so y = C x + gamma holds exactly along any
trajectory of the difference equation.
"""

from dataclasses import dataclass

import numpy as np


class IdentifiabilityError(RuntimeError):
    """Regressor matrix is rank deficient; data not informative."""


class ModelQualityError(RuntimeError):
    """Fitted model failed the free-run fit or stability gate."""


@dataclass(frozen=True)
class ArxOrders:
    n_f: int = 3
    n_b: int = 2
    n_k: int = 1

    def __post_init__(self):
        if self.n_f < 1 or self.n_b < 1 or self.n_k < 1:
            raise ValueError("orders must be positive")

    @property
    def max_lag(self):
        return max(self.n_f, self.n_b + self.n_k - 1)


@dataclass(frozen=True)
class ArxModel:
    f: tuple
    b: tuple
    n_k: int
    c: float
    tau: float

    @property
    def orders(self):
        return ArxOrders(len(self.f), len(self.b), self.n_k)

    @property
    def denominator(self):
        return 1.0 + sum(self.f)

    @property
    def gamma(self):
        return self.c / self.denominator

    @property
    def gain(self):
        return sum(self.b) / self.denominator


@dataclass(frozen=True, eq=False)
class LinearModel:
    """State space x+ = A x + B u, y = C x + gamma."""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    gamma: float
    tau: float

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def gain(self):
        return (self.C @ np.linalg.solve(np.eye(self.n) - self.A, self.B)).item()

    def spectral_radius(self):
        return float(max(abs(np.linalg.eigvals(self.A))))


def _regressor_row(u, y, k, orders):
    row = [-y[k - j] for j in range(1, orders.n_f + 1)]
    row += [u[k - orders.n_k - j + 1] for j in range(1, orders.n_b + 1)]
    row.append(1.0)
    return row


def fit_arx(u, y, orders, tau):
    """Least-squares fit; raises IdentifiabilityError on rank loss."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    lag = orders.max_lag
    if len(u) != len(y):
        raise ValueError("u and y must have equal length")
    rows = len(y) - lag
    n_par = orders.n_f + orders.n_b + 1
    if rows < 2 * n_par:
        raise IdentifiabilityError(f"only {rows} usable samples for {n_par} parameters")
    phi = np.array([_regressor_row(u, y, k, orders) for k in range(lag, len(y))])
    target = y[lag:]
    theta, _, rank, sv = np.linalg.lstsq(phi, target, rcond=None)
    if rank < n_par or sv[-1] < 1e-10 * sv[0]:
        raise IdentifiabilityError(
            f"regressor rank {rank} < {n_par} (least singular value {sv[-1]:.3e})")
    f = tuple(float(v) for v in theta[:orders.n_f])
    b = tuple(float(v) for v in theta[orders.n_f:orders.n_f + orders.n_b])
    return ArxModel(f=f, b=b, n_k=orders.n_k, c=float(theta[-1]), tau=tau)


def free_run(model, u, y_seed):
    """Simulate the difference equation from measured initial lags.

    ``y_seed`` supplies at least ``max_lag`` past outputs; the model
    never sees measured outputs beyond that prefix.
    """
    orders = model.orders
    lag = orders.max_lag
    if len(y_seed) < lag:
        raise ValueError(f"need {lag} seed outputs, got {len(y_seed)}")
    u = np.asarray(u, dtype=float)
    yhat = np.empty(len(u))
    yhat[:lag] = np.asarray(y_seed, dtype=float)[:lag]
    for k in range(lag, len(u)):
        acc = model.c
        for j, fj in enumerate(model.f, start=1):
            acc -= fj * yhat[k - j]
        for j, bj in enumerate(model.b, start=1):
            acc += bj * u[k - model.n_k - j + 1]
        yhat[k] = acc
    return yhat


def fit_percent(model, u, y):
    """Free-run fit, 100 * (1 - |y - yhat| / |y - mean(y)|), over the
    samples past the seed prefix."""
    y = np.asarray(y, dtype=float)
    lag = model.orders.max_lag
    yhat = free_run(model, u, y[:lag])
    err = np.linalg.norm(y[lag:] - yhat[lag:])
    spread = np.linalg.norm(y[lag:] - np.mean(y[lag:]))
    if spread == 0.0:
        return 100.0 if err == 0.0 else -float("inf")
    return float(100.0 * (1.0 - err / spread))


def realize(model):
    """Observable canonical realization with level-corrected states.

    State is [yt(k) ... yt(k-n_f+1), u(k-1) ... u(k-nb_eff+1)] where
    yt = y - gamma; a transport delay n_k > 1 is folded into leading
    zero input coefficients.
    """
    f = model.f
    b_eff = (0.0,) * (model.n_k - 1) + model.b
    n_f, n_b = len(f), len(b_eff)
    n = n_f + n_b - 1
    A = np.zeros((n, n))
    B = np.zeros((n, 1))
    for j, fj in enumerate(f):
        A[0, j] = -fj
    for j in range(1, n_b):           # b_2 .. b_nb act through stored inputs
        A[0, n_f + j - 1] = b_eff[j]
    for i in range(1, n_f):           # output shift chain
        A[i, i - 1] = 1.0
    for i in range(n_f + 1, n):       # input shift chain
        A[i, i - 1] = 1.0
    B[0, 0] = b_eff[0]
    if n_b > 1:
        B[n_f, 0] = 1.0
    C = np.zeros((1, n))
    C[0, 0] = 1.0
    return LinearModel(A=A, B=B, C=C, gamma=model.gamma, tau=model.tau)


def canonical_state(n_f, n_b_eff, gamma, y_hist, u_hist):
    """State consistent with measured lags, for the realized form.

    ``y_hist[-1]`` is the current output y(k) and ``u_hist[-1]`` the
    last applied input u(k-1); earlier entries are older.  Raises
    ValueError when the histories are shorter than the model needs.
    """
    if len(y_hist) < n_f or len(u_hist) < n_b_eff - 1:
        raise ValueError("history shorter than the model order")
    n = n_f + n_b_eff - 1
    x = np.zeros((n, 1))
    for i in range(n_f):
        x[i, 0] = y_hist[-1 - i] - gamma
    for j in range(1, n_b_eff):
        x[n_f + j - 1, 0] = u_hist[-j]
    return x


def validate_model(model, u_val, y_val, fit_min):
    """Free-run fit and stability gate; returns (fit, spectral radius)."""
    fit = fit_percent(model, u_val, y_val)
    rho = realize(model).spectral_radius()
    if fit < fit_min:
        raise ModelQualityError(f"free-run fit {fit:.2f}% below {fit_min}%")
    if rho >= 1.0:
        raise ModelQualityError(f"unstable fit, spectral radius {rho:.4f}")
    return fit, rho


def excitation_levels(lo, hi, n_levels, seed):
    """Step levels spanning [lo, hi] in a shuffled order.

    A deterministic permutation of an even grid keeps every fit
    reproducible while exercising large and small moves.
    """
    rng = np.random.default_rng(seed)
    levels = np.linspace(lo, hi, n_levels)
    return tuple(float(v) for v in rng.permutation(levels))


def split_validation(n_samples, val_frac):
    """(validation, training) index split: the leading fraction is
    held out and never seen by the fit."""
    n_val = int(round(val_frac * n_samples))
    n_val = max(1, min(n_samples - 1, n_val))
    return slice(0, n_val), slice(n_val, n_samples)
