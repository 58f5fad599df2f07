"""Temporal modelling for the integrated engine by frame stacking.

Column t of a stacked spectrogram concatenates base frames t..t+T_st-1,
so each NMF basis vector spans T_st consecutive frames. Every block
shares the same K-row RIR model.
"""
from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np

from .exceptions import DimensionMismatchError, InvalidWindowError
from .fit_report import FitReport
from .integrated import apply_sweep_heuristics, integrated_update_w, integrated_update_x, warm_start
from .nctf import (
    RirModel,
    direct_gain,
    init_rir,
    kl_divergence,
    lagged_products,
    lagged_sums,
    resolve_lambda,
    rowwise_convolve,
)
from .nmf import NmfModel
from ..config.engine_config import EngineConfig, Method

logger = logging.getLogger(__name__)


@dataclass
class StackedSpectrogram:
    values: np.ndarray
    t_st: int
    base_k: int

    def __post_init__(self):
        if self.values.shape[0] != self.t_st * self.base_k:
            raise DimensionMismatchError(
                f"Stacked matrix has {self.values.shape[0]} rows, expected {self.t_st} x {self.base_k}"
            )

    def block(self, index: int) -> np.ndarray:
        """Rows holding base frame t + index at stacked column t"""
        return self.values[index * self.base_k:(index + 1) * self.base_k]

    def unstack(self) -> np.ndarray:
        return self.block(0).copy()


def stack(spec, t_st: int) -> StackedSpectrogram:
    """Stack T_st consecutive frames per column; windows past the end are zero-padded"""
    if t_st < 1:
        raise InvalidWindowError(f"Stacking window must be >= 1 frame, got {t_st}")
    y = np.asarray(getattr(spec, "values", spec), dtype=np.float64)
    if y.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-D spectrogram, got shape {y.shape}")
    n_bins, n_frames = y.shape
    out = np.zeros((n_bins * t_st, n_frames))
    for index in range(min(t_st, n_frames)):
        out[index * n_bins:(index + 1) * n_bins, :n_frames - index] = y[:, index:]
    return StackedSpectrogram(out, t_st, n_bins)


def replicate_rir(h: np.ndarray, t_st: int) -> np.ndarray:
    return np.tile(np.asarray(h, dtype=np.float64), (t_st, 1))


def _block_count(h: np.ndarray, w_st: np.ndarray) -> int:
    n_bins = h.shape[0]
    if w_st.shape[0] % n_bins:
        raise DimensionMismatchError(
            f"Stacked basis has {w_st.shape[0]} rows, not a multiple of {n_bins} bins"
        )
    return w_st.shape[0] // n_bins


def stacked_update_h(h: np.ndarray, w_st: np.ndarray, x: np.ndarray, y_st: np.ndarray, eps: float) -> np.ndarray:
    """H update with the statistics of all blocks pooled through one K-row H"""
    h = np.asarray(h, dtype=np.float64)
    w_st = np.asarray(w_st, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y_st = np.asarray(getattr(y_st, "values", y_st), dtype=np.float64)
    if w_st.shape[1] != x.shape[0] or y_st.shape != (w_st.shape[0], x.shape[1]):
        raise DimensionMismatchError(
            f"Stacked basis {w_st.shape}, activations {x.shape} and spectrogram {y_st.shape} are inconsistent"
        )
    n_bins, lh = h.shape
    s_st = w_st @ x

    numerator = denominator = None
    for index in range(_block_count(h, w_st)):
        rows = slice(index * n_bins, (index + 1) * n_bins)
        s_block = s_st[rows]
        ratio = y_st[rows] / (rowwise_convolve(s_block, h) + eps)
        num_block = lagged_products(ratio, s_block, lh)
        den_block = lagged_sums(s_block, lh)
        if numerator is None:
            numerator, denominator = num_block, den_block
        else:
            numerator = numerator + num_block
            denominator = denominator + den_block
    return h * numerator / (denominator + eps)


def stacked_gain(h: np.ndarray, w_st: np.ndarray, x: np.ndarray, t_st: int, eps: float) -> np.ndarray:
    """Gain for base frames, summing every stacked window that covers a frame.

    Block l of stacked column t models base frame t + l, so numerator and
    denominator are accumulated at that shifted position.
    """
    h = np.asarray(h, dtype=np.float64)
    w_st = np.asarray(w_st, dtype=np.float64)
    if _block_count(h, w_st) != t_st:
        raise DimensionMismatchError(f"Stacked basis has {w_st.shape[0]} rows, expected {t_st} blocks")
    n_bins = h.shape[0]
    s_st = w_st @ np.asarray(x, dtype=np.float64)
    n_frames = s_st.shape[1]

    numerator = np.zeros((n_bins, n_frames))
    denominator = np.zeros((n_bins, n_frames))
    for index in range(min(t_st, n_frames)):
        s_block = s_st[index * n_bins:(index + 1) * n_bins]
        y_block = rowwise_convolve(s_block, h)
        numerator[:, index:] += s_block[:, :n_frames - index]
        denominator[:, index:] += y_block[:, :n_frames - index]
    return numerator / (denominator + eps)


def stacked_cost(
    y_st: np.ndarray, h: np.ndarray, w_st: np.ndarray, x: np.ndarray, lam: float
) -> Tuple[float, float, float]:
    t_st = _block_count(h, w_st)
    kl = kl_divergence(y_st, rowwise_convolve(w_st @ x, replicate_rir(h, t_st)))
    sparsity = lam * float(np.sum(x))
    return kl + sparsity, kl, sparsity


def run_stacked(y_spec, config: EngineConfig, fixed_basis: Optional[np.ndarray] = None):
    """Integrated method on a stacked spectrogram.

    Returns (gain, FitReport, NmfModel, RirModel) like ``run_integrated``;
    the basis has K * T_st rows.
    """
    y = np.asarray(y_spec.values, dtype=np.float64)
    t_st = config.t_st
    y_st = stack(y, t_st).values
    eps = config.eps
    lam = resolve_lambda(y, config)
    iterations = config.resolved_iterations(Method.INTEGRATED)
    update_basis = not config.fixed_basis

    model = warm_start(y_st, config, fixed_basis)
    w, x = model.w, model.x
    h = init_rir(y.shape[0], config.lh)

    report = FitReport("L1_st_cost", ("kl_term", "sparsity_term"))
    report.record(*stacked_cost(y_st, h, w, x, lam))
    logger.info(
        f"Stacked N-CTF+NMF: T_st={t_st}, {y_st.shape[0]}x{y_st.shape[1]} stacked spectrogram, "
        f"rank {w.shape[1]}, {iterations} sweeps"
    )

    for _ in range(iterations):
        h = stacked_update_h(h, w, x, y_st, eps)
        h_st = replicate_rir(h, t_st)
        if update_basis:
            w = integrated_update_w(w, h_st, x, y_st, eps)
        x = integrated_update_x(x, h_st, w, y_st, lam, eps)
        if not config.pure_mode:
            h, w, x = apply_sweep_heuristics(h, w, x, config, update_basis)
        report.record(*stacked_cost(y_st, h, w, x, lam))

    report.iterations_run = iterations
    report.final_kl = report.term_traces["kl_term"][-1]
    model = NmfModel(w, x)
    if config.direct_synthesis:
        gain = direct_gain(model.direct_estimate(y.shape[0]), y, eps)
    else:
        gain = stacked_gain(h, w, x, t_st, eps)
    return gain, report, model, RirModel(h)
