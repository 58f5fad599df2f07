"""Weighted N-CTF+NMF engine.

Keeps an explicit clean-spectrogram estimate S and minimizes
rho * [KL(S | WX) + lambda sum X] + (1 - rho) * [KL(Y | h * S) + lambda sum S].
The S step has a closed form in terms of the principal branch of the
Lambert W function.
"""
from dataclasses import dataclass
from typing import Optional, Tuple, Union
import logging

import numpy as np

from .exceptions import DimensionMismatchError, InvalidWeightError, NegativeArgumentError
from .fit_report import FitReport
from .integrated import warm_start
from .nctf import (
    RirModel,
    baseline_update_h,
    clamp_decay,
    direct_gain,
    guard_first_column,
    init_rir,
    kl_divergence,
    normalize_scale,
    ratio_gain,
    resolve_lambda,
    rowwise_convolve,
    rowwise_correlate,
    tail_sums,
)
from ..config.engine_config import EngineConfig, Method

logger = logging.getLogger(__name__)

HALLEY_MAX_ITER = 50
NEWTON_MAX_ITER = 50
# Above this the Halley products w e^w and (w + 2) f approach float overflow
LOG_ARG_LIMIT = 500.0


def lambert_w0(z: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Principal branch W0 on z >= 0, by Halley iteration from log(1 + z)"""
    z_arr = np.asarray(z, dtype=np.float64)
    if np.any(np.isnan(z_arr)):
        raise ValueError("lambert_w0 got NaN")
    if np.any(z_arr < 0):
        raise NegativeArgumentError("lambert_w0 is only defined here for z >= 0")

    w = np.log1p(z_arr)
    for _ in range(HALLEY_MAX_ITER):
        ew = np.exp(w)
        f = w * ew - z_arr
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w = w - step
        if np.all(np.isfinite(step) & (np.abs(step) <= 1e-15 * (1.0 + np.abs(w)))):
            break
    if np.ndim(z) == 0:
        return float(w)
    return w


def _lambert_w0_log_newton(log_z: np.ndarray) -> np.ndarray:
    """Solve w + log w = log_z for large log_z"""
    w = log_z - np.log(log_z)
    for _ in range(NEWTON_MAX_ITER):
        step = (w + np.log(w) - log_z) / (1.0 + 1.0 / w)
        w = w - step
        if np.all(np.isfinite(step) & (np.abs(step) <= 1e-15 * np.abs(w))):
            break
    return w


def lambert_w0_exp(log_z: np.ndarray) -> np.ndarray:
    """W0(exp(log_z)) element-wise; -inf maps to 0"""
    log_z = np.asarray(log_z, dtype=np.float64)
    out = np.empty_like(log_z)
    big = log_z > LOG_ARG_LIMIT
    out[~big] = lambert_w0(np.exp(log_z[~big]))
    if np.any(big):
        out[big] = _lambert_w0_log_newton(log_z[big])
    return out


@dataclass
class WeightedState:
    s: np.ndarray
    h: np.ndarray
    w: np.ndarray
    x: np.ndarray
    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise InvalidWeightError(f"rho must lie strictly between 0 and 1, got {self.rho}")
        self.s = np.asarray(self.s, dtype=np.float64)
        self.h = np.asarray(self.h, dtype=np.float64)
        self.w = np.asarray(self.w, dtype=np.float64)
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.s.shape != (self.w.shape[0], self.x.shape[1]) or self.w.shape[1] != self.x.shape[0]:
            raise DimensionMismatchError(
                f"S {self.s.shape}, W {self.w.shape} and X {self.x.shape} are inconsistent"
            )
        if self.h.shape[0] != self.s.shape[0]:
            raise DimensionMismatchError(f"H has {self.h.shape[0]} rows, S has {self.s.shape[0]}")
        if not np.all(np.isfinite(self.s)) or np.any(self.s < 0):
            raise ValueError("S entries must be finite and non-negative")

    @property
    def s_tilde(self) -> np.ndarray:
        return self.w @ self.x

    @property
    def rir(self) -> RirModel:
        return RirModel(self.h)


def s_update_terms(state: WeightedState, y: np.ndarray, lam: float, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """Coefficients c and b of the per-entry stationarity equation c/s + rho log s + b = 0"""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != state.s.shape:
        raise DimensionMismatchError(f"Spectrogram {y.shape} does not match S {state.s.shape}")
    rho = state.rho
    ratio = y / (rowwise_convolve(state.s, state.h) + eps)
    c = -(1.0 - rho) * state.s * rowwise_correlate(ratio, state.h)
    b = (1.0 - rho) * (tail_sums(state.h, y.shape[1]) + lam) - rho * np.log(state.s_tilde + eps)
    return c, b


def solve_stationary_s(c: np.ndarray, b: np.ndarray, rho: float, cap: Optional[float] = None) -> np.ndarray:
    """s = -c / (rho W0(-(c/rho) e^(b/rho))), evaluated in log space.

    Entries with c = 0 take the limit exp(-b/rho), capped at ``cap``.
    """
    c = np.asarray(c, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    with np.errstate(divide="ignore"):
        log_arg = np.log(-c / rho) + b / rho
    s = np.exp(lambert_w0_exp(log_arg) - b / rho)
    if cap is not None:
        s = np.where(c == 0, np.minimum(s, cap), s)
    return s


def weighted_update_s(state: WeightedState, y, lam: float, eps: float) -> np.ndarray:
    y = np.asarray(getattr(y, "values", y), dtype=np.float64)
    c, b = s_update_terms(state, y, lam, eps)
    return solve_stationary_s(c, b, state.rho, cap=float(np.max(state.s_tilde)))


def weighted_update_h(h: np.ndarray, s: np.ndarray, y: np.ndarray, eps: float) -> np.ndarray:
    return baseline_update_h(h, s, y, eps)


def weighted_update_w(w: np.ndarray, s: np.ndarray, x: np.ndarray, eps: float) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (w.shape[0], x.shape[1]):
        raise DimensionMismatchError(f"S {s.shape} does not match W {w.shape} and X {x.shape}")
    ratio = s / (w @ x + eps)
    return w * (ratio @ x.T) / (x.sum(axis=1)[None, :] + eps)


def weighted_update_x(x: np.ndarray, s: np.ndarray, w: np.ndarray, lam: float, eps: float) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (w.shape[0], x.shape[1]):
        raise DimensionMismatchError(f"S {s.shape} does not match W {w.shape} and X {x.shape}")
    ratio = s / (w @ x + eps)
    return x * (w.T @ ratio) / (w.sum(axis=0)[:, None] + lam + eps)


def weighted_gain(s: np.ndarray, h: np.ndarray, eps: float) -> np.ndarray:
    return ratio_gain(np.asarray(s, dtype=np.float64), h, eps)


def weighted_cost(y: np.ndarray, state: WeightedState, lam: float) -> Tuple[float, float, float]:
    """(L2, P, Q) with P the NMF fit of S and Q the N-CTF fit of Y"""
    p_term = kl_divergence(state.s, state.s_tilde) + lam * float(np.sum(state.x))
    q_term = kl_divergence(y, rowwise_convolve(state.s, state.h)) + lam * float(np.sum(state.s))
    return state.rho * p_term + (1.0 - state.rho) * q_term, p_term, q_term


def run_weighted(y_spec, config: EngineConfig, fixed_basis: Optional[np.ndarray] = None):
    """Run the weighted method.

    Returns (gain, FitReport, WeightedState). S starts from Y; each sweep
    updates H, S, then W (online basis only) and X.
    """
    rho = config.resolved_rho()
    if not 0.0 < rho < 1.0:
        raise InvalidWeightError(f"rho must lie strictly between 0 and 1, got {rho}")
    y = np.asarray(y_spec.values, dtype=np.float64)
    eps = config.eps
    lam = resolve_lambda(y, config)
    iterations = config.resolved_iterations(Method.WEIGHTED)
    update_basis = not config.fixed_basis

    model = warm_start(y, config, fixed_basis)
    state = WeightedState(s=y.copy(), h=init_rir(y.shape[0], config.lh), w=model.w, x=model.x, rho=rho)

    report = FitReport("L2", ("P_term", "Q_term"))
    report.record(*weighted_cost(y, state, lam))
    logger.info(
        f"Weighted N-CTF+NMF: {y.shape[0]}x{y.shape[1]} spectrogram, rank {model.rank}, "
        f"basis {config.basis_mode.value}, rho={rho}, {iterations} sweeps, lambda={lam:.4g}"
    )

    for _ in range(iterations):
        state.h = weighted_update_h(state.h, state.s, y, eps)
        state.s = weighted_update_s(state, y, lam, eps)
        if update_basis:
            state.w = weighted_update_w(state.w, state.s, state.x, eps)
        state.x = weighted_update_x(state.x, state.s, state.w, lam, eps)
        if not config.pure_mode:
            norm = normalize_scale(
                guard_first_column(state.h, eps),
                state.w if update_basis else None,
                state.x,
                fold_into_basis=False,
            )
            state.h = clamp_decay(norm.h)
            state.s = (state.s * norm.row_scale[:, None]) ** config.phi_x
            if update_basis:
                state.w = norm.w
            state.x = norm.x ** config.phi_x
        report.record(*weighted_cost(y, state, lam))

    report.iterations_run = iterations
    report.final_kl = kl_divergence(y, rowwise_convolve(state.s, state.h))
    if config.direct_synthesis:
        gain = direct_gain(state.s, y, eps)
    else:
        gain = weighted_gain(state.s, state.h, eps)
    return gain, report, state
