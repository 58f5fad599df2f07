"""Non-negative convolutive transfer function (N-CTF) acoustic model.

The reverberant spectrogram is modelled row by row as a causal
convolution of the clean spectrogram with non-negative sub-band RIR
magnitudes: y(k,t) ~ sum_tau h(k,tau) s(k,t-tau). Frames before the
first one are zero, and the output keeps the T columns of the input.
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple
import logging

import numpy as np
import scipy.special

from .exceptions import DegenerateFirstColumnError, DimensionMismatchError
from .fit_report import FitReport
from ..config.engine_config import EngineConfig, Method

logger = logging.getLogger(__name__)


@dataclass
class RirModel:
    """K x L_h matrix of sub-band RIR magnitudes"""

    h: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=np.float64)
        if self.h.ndim != 2 or self.h.shape[1] < 1:
            raise DimensionMismatchError(f"RIR model must be K x L_h, got shape {self.h.shape}")
        if not np.all(np.isfinite(self.h)) or np.any(self.h < 0):
            raise ValueError("RIR model entries must be finite and non-negative")

    @property
    def n_bins(self) -> int:
        return self.h.shape[0]

    @property
    def length(self) -> int:
        return self.h.shape[1]


@dataclass
class SparsityConfig:
    lambda_value: float = 0.0
    auto_scale: bool = False

    def __post_init__(self):
        if self.lambda_value < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lambda_value}")

    @classmethod
    def from_engine_config(cls, config: EngineConfig) -> "SparsityConfig":
        """An unset lambda means the auto rule"""
        if config.lambda_value is None:
            return cls(auto_scale=True)
        return cls(lambda_value=float(config.lambda_value))

    def resolve(self, y: np.ndarray) -> float:
        return auto_lambda(y) if self.auto_scale else self.lambda_value


class ScaleNormalization(NamedTuple):
    h: np.ndarray
    w: Optional[np.ndarray]
    x: Optional[np.ndarray]
    row_scale: np.ndarray


def _check_rows(a: np.ndarray, h: np.ndarray) -> None:
    if a.ndim != 2 or h.ndim != 2:
        raise DimensionMismatchError(f"Expected 2-D matrices, got {a.shape} and {h.shape}")
    if a.shape[0] != h.shape[0]:
        raise DimensionMismatchError(
            f"Row counts differ: spectrogram has {a.shape[0]}, RIR model has {h.shape[0]}"
        )
    if h.shape[1] < 1:
        raise DimensionMismatchError("RIR model needs at least one tap")


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Shapes differ: {a.shape} vs {b.shape}")


def rowwise_convolve(s: np.ndarray, h: np.ndarray) -> np.ndarray:
    """y(k,t) = sum_tau h(k,tau) s(k,t-tau), truncated to T columns"""
    s = np.asarray(s, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    _check_rows(s, h)
    n_frames = s.shape[1]
    out = np.zeros_like(s)
    for tau in range(min(h.shape[1], n_frames)):
        out[:, tau:] += h[:, tau:tau + 1] * s[:, :n_frames - tau]
    return out


def rowwise_correlate(a: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Adjoint of rowwise_convolve: sum_tau h(k,tau) a(k,t+tau) over t+tau < T"""
    a = np.asarray(a, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    _check_rows(a, h)
    n_frames = a.shape[1]
    out = np.zeros_like(a)
    for tau in range(min(h.shape[1], n_frames)):
        out[:, :n_frames - tau] += h[:, tau:tau + 1] * a[:, tau:]
    return out


def tail_sums(h: np.ndarray, n_frames: int) -> np.ndarray:
    """sum_{tau: t+tau < T} h(k,tau) for every frame t"""
    return rowwise_correlate(np.ones((h.shape[0], n_frames)), h)


def lagged_products(ratio: np.ndarray, s: np.ndarray, lh: int) -> np.ndarray:
    """K x L_h matrix of sum_t ratio(k,t) s(k,t-tau)"""
    n_frames = s.shape[1]
    out = np.zeros((s.shape[0], lh))
    for tau in range(min(lh, n_frames)):
        out[:, tau] = np.sum(ratio[:, tau:] * s[:, :n_frames - tau], axis=1)
    return out


def lagged_sums(s: np.ndarray, lh: int) -> np.ndarray:
    """K x L_h matrix of sum_t s(k,t-tau) over the frames kept by the truncation"""
    n_frames = s.shape[1]
    cumulative = np.cumsum(s, axis=1)
    out = np.zeros((s.shape[0], lh))
    for tau in range(min(lh, n_frames)):
        out[:, tau] = cumulative[:, n_frames - 1 - tau]
    return out


def kl_divergence(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Generalized KL divergence sum y log(y/y_hat) + y_hat - y.

    0 log(0/a) counts as 0; y > 0 against y_hat = 0 gives +inf.
    """
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    _check_same_shape(y, y_hat)
    return float(np.sum(scipy.special.kl_div(y, y_hat)))


def auto_lambda(y: np.ndarray) -> float:
    y = np.asarray(y, dtype=np.float64)
    return 0.1 * float(np.sum(y)) / y.size


def resolve_lambda(y: np.ndarray, config: EngineConfig) -> float:
    return SparsityConfig.from_engine_config(config).resolve(y)


def baseline_cost(y: np.ndarray, h: np.ndarray, s: np.ndarray, lam: float) -> Tuple[float, float, float]:
    kl = kl_divergence(y, rowwise_convolve(s, h))
    sparsity = lam * float(np.sum(s))
    return kl + sparsity, kl, sparsity


def baseline_update_h(h: np.ndarray, s: np.ndarray, y: np.ndarray, eps: float) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_shape(s, y)
    _check_rows(s, h)
    ratio = y / (rowwise_convolve(s, h) + eps)
    lh = h.shape[1]
    return h * lagged_products(ratio, s, lh) / (lagged_sums(s, lh) + eps)


def baseline_update_s(s: np.ndarray, h: np.ndarray, y: np.ndarray, lam: float, eps: float) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_shape(s, y)
    _check_rows(s, h)
    ratio = y / (rowwise_convolve(s, h) + eps)
    numerator = rowwise_correlate(ratio, h)
    denominator = tail_sums(h, s.shape[1]) + lam
    return s * numerator / (denominator + eps)


def guard_first_column(h: np.ndarray, eps: float) -> np.ndarray:
    guarded = np.array(h, dtype=np.float64)
    guarded[:, 0] = np.maximum(guarded[:, 0], eps)
    return guarded


def normalize_scale(
    h: np.ndarray,
    w: Optional[np.ndarray] = None,
    x: Optional[np.ndarray] = None,
    fold_into_basis: bool = True,
) -> ScaleNormalization:
    """Give H an all-ones first column and W unit-sum columns.

    The row scale of H is moved into the rows of W when ``fold_into_basis``
    is set (a stacked W takes it once per block), and the column scale of W
    into the rows of X, so the modelled spectrogram does not change.
    ``row_scale`` is returned for callers that fold it elsewhere.
    """
    h = np.asarray(h, dtype=np.float64)
    row_scale = h[:, 0].copy()
    if np.any(row_scale <= 0):
        bad = np.flatnonzero(row_scale <= 0)
        raise DegenerateFirstColumnError(f"Rows {bad.tolist()} of H have a non-positive first tap")
    h_norm = h / row_scale[:, None]

    if w is None:
        return ScaleNormalization(h_norm, None, x, row_scale)

    w = np.asarray(w, dtype=np.float64)
    if fold_into_basis:
        if w.shape[0] % h.shape[0]:
            raise DimensionMismatchError(
                f"Basis rows ({w.shape[0]}) are not a multiple of H rows ({h.shape[0]})"
            )
        w = w * np.tile(row_scale, w.shape[0] // h.shape[0])[:, None]
    col_scale = w.sum(axis=0)
    col_scale = np.where(col_scale > 0, col_scale, 1.0)
    w_norm = w / col_scale[None, :]
    if x is not None:
        x = np.asarray(x, dtype=np.float64) * col_scale[:, None]
    return ScaleNormalization(h_norm, w_norm, x, row_scale)


def normalize_columns(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    col_sum = w.sum(axis=0)
    return w / np.where(col_sum > 0, col_sum, 1.0)[None, :]


def clamp_decay(h: np.ndarray) -> np.ndarray:
    """Make every row non-increasing: h(k,tau) <- min(h(k,tau), h(k,tau-1))"""
    return np.minimum.accumulate(np.asarray(h, dtype=np.float64), axis=1)


def init_rir(n_bins: int, lh: int) -> np.ndarray:
    """Linearly decaying envelope [1, (L-1)/L, ..., 1/L] on every row"""
    if n_bins < 1 or lh < 1:
        raise ValueError(f"init_rir needs K >= 1 and L_h >= 1, got {n_bins}, {lh}")
    envelope = (lh - np.arange(lh)) / lh
    return np.tile(envelope, (n_bins, 1))


def ratio_gain(numerator: np.ndarray, h: np.ndarray, eps: float) -> np.ndarray:
    """G = s / (h * s + eps), the gain shared by the baseline and weighted engines"""
    return numerator / (rowwise_convolve(numerator, h) + eps)


def direct_gain(s_hat: np.ndarray, y: np.ndarray, eps: float) -> np.ndarray:
    """Gain that makes the synthesis stage output the estimate s_hat itself"""
    return s_hat / (y + eps)


def run_baseline(y_spec, config: EngineConfig):
    """Blind N-CTF without a spectral model.

    Returns (gain, FitReport, RirModel, s).
    """
    y = np.asarray(y_spec.values, dtype=np.float64)
    n_bins, _ = y.shape
    eps = config.eps
    lam = resolve_lambda(y, config)
    iterations = config.resolved_iterations(Method.NCTF)

    h = init_rir(n_bins, config.lh)
    s = y.copy()
    report = FitReport("Q_cost", ("kl_term", "sparsity_term"))
    report.record(*baseline_cost(y, h, s, lam))
    logger.info(f"Baseline N-CTF: {y.shape[0]}x{y.shape[1]} spectrogram, {iterations} sweeps, lambda={lam:.4g}")

    for _ in range(iterations):
        h = baseline_update_h(h, s, y, eps)
        s = baseline_update_s(s, h, y, lam, eps)
        if not config.pure_mode:
            norm = normalize_scale(guard_first_column(h, eps))
            s = s * norm.row_scale[:, None]
            h = clamp_decay(norm.h)
        report.record(*baseline_cost(y, h, s, lam))

    report.iterations_run = iterations
    report.final_kl = kl_divergence(y, rowwise_convolve(s, h))
    gain = direct_gain(s, y, eps) if config.direct_synthesis else ratio_gain(s, h, eps)
    return gain, report, RirModel(h), s
