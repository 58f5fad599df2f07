"""Integrated N-CTF+NMF engine.

The clean spectrogram inside the N-CTF model is replaced by its NMF
approximation W X, and H, W and X are estimated jointly by multiplicative
updates that minimize KL(y | h * WX) + lambda * sum(X).
"""
from typing import Optional, Tuple
import logging

import numpy as np

from .exceptions import DimensionMismatchError
from .fit_report import FitReport
from .nctf import (
    RirModel,
    baseline_update_h,
    clamp_decay,
    direct_gain,
    guard_first_column,
    init_rir,
    kl_divergence,
    normalize_scale,
    resolve_lambda,
    rowwise_convolve,
    rowwise_correlate,
    tail_sums,
)
from .nmf import NmfModel, nmf_factorize
from ..config.engine_config import EngineConfig, Method

logger = logging.getLogger(__name__)


def _check_factors(w: np.ndarray, x: np.ndarray, y: np.ndarray) -> None:
    if w.shape[1] != x.shape[0]:
        raise DimensionMismatchError(f"Basis {w.shape} and activations {x.shape} do not share a rank")
    if (w.shape[0], x.shape[1]) != y.shape:
        raise DimensionMismatchError(
            f"W X would be {(w.shape[0], x.shape[1])}, spectrogram is {y.shape}"
        )


def integrated_update_h(h: np.ndarray, w: np.ndarray, x: np.ndarray, y: np.ndarray, eps: float) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _check_factors(w, x, y)
    return baseline_update_h(h, w @ x, y, eps)


def integrated_update_w(w: np.ndarray, h: np.ndarray, x: np.ndarray, y: np.ndarray, eps: float) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_factors(w, x, y)
    ratio = y / (rowwise_convolve(w @ x, h) + eps)
    numerator = rowwise_correlate(ratio, h) @ x.T
    denominator = tail_sums(h, y.shape[1]) @ x.T
    return w * numerator / (denominator + eps)


def integrated_update_x(
    x: np.ndarray, h: np.ndarray, w: np.ndarray, y: np.ndarray, lam: float, eps: float
) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_factors(w, x, y)
    ratio = y / (rowwise_convolve(w @ x, h) + eps)
    numerator = w.T @ rowwise_correlate(ratio, h)
    denominator = w.T @ tail_sums(h, y.shape[1]) + lam
    return x * numerator / (denominator + eps)


def integrated_gain(h: np.ndarray, w: np.ndarray, x: np.ndarray, eps: float) -> np.ndarray:
    """G = WX / (h * WX + eps)"""
    s_tilde = np.asarray(w, dtype=np.float64) @ np.asarray(x, dtype=np.float64)
    return s_tilde / (rowwise_convolve(s_tilde, h) + eps)


def integrated_cost(
    y: np.ndarray, h: np.ndarray, w: np.ndarray, x: np.ndarray, lam: float
) -> Tuple[float, float, float]:
    kl = kl_divergence(y, rowwise_convolve(w @ x, h))
    sparsity = lam * float(np.sum(x))
    return kl + sparsity, kl, sparsity


def apply_sweep_heuristics(
    h: np.ndarray,
    w: np.ndarray,
    x: np.ndarray,
    config: EngineConfig,
    update_basis: bool,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale normalization, decay clamping and activation sharpening after a sweep.

    A fixed basis is never rescaled; then only H is normalized.
    """
    guarded = guard_first_column(h, config.eps)
    if update_basis:
        norm = normalize_scale(guarded, w, x, fold_into_basis=True)
        w, x = norm.w, norm.x
    else:
        norm = normalize_scale(guarded)
    h = clamp_decay(norm.h)
    x = x ** config.phi_x
    return h, w, x


def warm_start(
    y: np.ndarray, config: EngineConfig, fixed_basis: Optional[np.ndarray]
) -> NmfModel:
    """Seeded NMF initialization refined on the reverberant spectrogram"""
    if config.fixed_basis and fixed_basis is None:
        raise ValueError(f"basis mode '{config.basis_mode.value}' needs a trained basis")
    if not config.fixed_basis and fixed_basis is not None:
        raise ValueError("A fixed basis was given but the basis mode is 'online'")
    if fixed_basis is not None:
        fixed_basis = np.asarray(fixed_basis, dtype=np.float64)
        if fixed_basis.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"Basis has {fixed_basis.shape[0]} rows, spectrogram has {y.shape[0]}"
            )
        rank = fixed_basis.shape[1]
    else:
        rank = config.resolved_rank()
    return nmf_factorize(y, rank, config.warmup_iterations, config.seed, fixed_basis=fixed_basis, eps=config.eps)


def run_integrated(y_spec, config: EngineConfig, fixed_basis: Optional[np.ndarray] = None):
    """Run the integrated method.

    Returns (gain, FitReport, NmfModel, RirModel). Each sweep updates H,
    then W (online basis only), then X.
    """
    y = np.asarray(y_spec.values, dtype=np.float64)
    eps = config.eps
    lam = resolve_lambda(y, config)
    iterations = config.resolved_iterations(Method.INTEGRATED)
    update_basis = not config.fixed_basis

    model = warm_start(y, config, fixed_basis)
    w, x = model.w, model.x
    h = init_rir(y.shape[0], config.lh)

    report = FitReport("L1_cost", ("kl_term", "sparsity_term"))
    report.record(*integrated_cost(y, h, w, x, lam))
    logger.info(
        f"Integrated N-CTF+NMF: {y.shape[0]}x{y.shape[1]} spectrogram, rank {w.shape[1]}, "
        f"basis {config.basis_mode.value}, {iterations} sweeps, lambda={lam:.4g}"
    )

    for _ in range(iterations):
        h = integrated_update_h(h, w, x, y, eps)
        if update_basis:
            w = integrated_update_w(w, h, x, y, eps)
        x = integrated_update_x(x, h, w, y, lam, eps)
        if not config.pure_mode:
            h, w, x = apply_sweep_heuristics(h, w, x, config, update_basis)
        report.record(*integrated_cost(y, h, w, x, lam))

    report.iterations_run = iterations
    report.final_kl = report.term_traces["kl_term"][-1]
    model = NmfModel(w, x)
    if config.direct_synthesis:
        gain = direct_gain(model.direct_estimate(), y, eps)
    else:
        gain = integrated_gain(h, w, x, eps)
    return gain, report, model, RirModel(h)
