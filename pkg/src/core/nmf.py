"""KL-divergence NMF and basis construction."""
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Union
import logging

import numpy as np

from .exceptions import (
    BasisFormatError,
    DimensionMismatchError,
    EmptyTrainingSetError,
    InsufficientFramesError,
    InvalidRankError,
)
from .nctf import normalize_columns

logger = logging.getLogger(__name__)

BASIS_MAGIC = b"NCTFW1"
_HEADER_LEN = len(BASIS_MAGIC) + 16


@dataclass
class NmfModel:
    """Spectral basis W (F x R) and activations X (R x T)"""

    w: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.w.ndim != 2 or self.x.ndim != 2 or self.w.shape[1] != self.x.shape[0]:
            raise DimensionMismatchError(
                f"Basis {self.w.shape} and activations {self.x.shape} do not share a rank"
            )

    @property
    def rank(self) -> int:
        return self.w.shape[1]

    def direct_estimate(self, n_rows: Optional[int] = None) -> np.ndarray:
        """W X, or its first ``n_rows`` rows (the current-frame block of a stacked basis)"""
        estimate = self.w @ self.x
        return estimate if n_rows is None else estimate[:n_rows]


def _as_matrix(spec) -> np.ndarray:
    values = getattr(spec, "values", spec)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-D spectrogram, got shape {values.shape}")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValueError("Spectrogram entries must be finite and non-negative")
    return values


def nmf_step(v: np.ndarray, w: np.ndarray, x: np.ndarray, eps: float = 1e-12, update_w: bool = True):
    """One multiplicative KL sweep, W first and then X"""
    if update_w:
        ratio = v / (w @ x + eps)
        w = w * (ratio @ x.T) / (x.sum(axis=1)[None, :] + eps)
    ratio = v / (w @ x + eps)
    x = x * (w.T @ ratio) / (w.sum(axis=0)[:, None] + eps)
    return w, x


def nmf_factorize(
    v,
    rank: int,
    iterations: int,
    seed: int,
    fixed_basis: Optional[np.ndarray] = None,
    eps: float = 1e-12,
) -> NmfModel:
    """Factorize V ~ W X under the generalized KL divergence.

    Factors start from seeded uniform draws scaled by sqrt(mean(V)/R).
    With ``fixed_basis`` only X is updated.
    """
    v = _as_matrix(v)
    if rank < 1:
        raise InvalidRankError(f"rank must be >= 1, got {rank}")
    n_rows, n_frames = v.shape

    rng = np.random.default_rng(seed)
    mean = float(v.mean()) if v.size else 0.0
    scale = np.sqrt(mean / rank) if mean > 0 else 1.0
    w = scale * (rng.random((n_rows, rank)) + 0.1)
    x = scale * (rng.random((rank, n_frames)) + 0.1)

    if fixed_basis is not None:
        w = np.asarray(fixed_basis, dtype=np.float64)
        if w.shape != (n_rows, rank):
            raise DimensionMismatchError(
                f"Fixed basis has shape {w.shape}, expected {(n_rows, rank)}"
            )

    for _ in range(iterations):
        w, x = nmf_step(v, w, x, eps, update_w=fixed_basis is None)
    return NmfModel(w, x)


def _concatenate(training_specs: Iterable) -> np.ndarray:
    mats: List[np.ndarray] = [_as_matrix(spec) for spec in training_specs]
    if not mats:
        raise EmptyTrainingSetError("No training spectrograms were given")
    n_rows = {m.shape[0] for m in mats}
    if len(n_rows) > 1:
        raise DimensionMismatchError(f"Training spectrograms have different bin counts: {sorted(n_rows)}")
    return np.concatenate(mats, axis=1)


def train_basis_offline(training_specs: Iterable, rank: int, iterations: int, seed: int) -> np.ndarray:
    """Learn a low-rank basis from clean speech; columns are scaled to sum to 1"""
    v = _concatenate(training_specs)
    if rank < 1 or rank > v.shape[1]:
        raise InvalidRankError(f"rank {rank} is outside 1..{v.shape[1]} (training frames)")
    logger.info(f"Training rank-{rank} basis on {v.shape[1]} frames for {iterations} iterations")
    return normalize_columns(nmf_factorize(v, rank, iterations, seed).w)


def sample_overcomplete_basis(training_specs: Iterable, rank: int, seed: int) -> np.ndarray:
    """Pick ``rank`` distinct non-silent training frames as basis columns.

    Frames are visited by a seeded random walk with wrap-around; a frame
    that was already taken is skipped by stepping forward.
    """
    v = _concatenate(training_specs)
    active = np.flatnonzero(v.sum(axis=0) > 0)
    dropped = v.shape[1] - active.size
    if dropped:
        logger.warning(f"Ignoring {dropped} all-zero training frames")
    n_frames = active.size
    if rank < 1:
        raise InvalidRankError(f"rank must be >= 1, got {rank}")
    if n_frames < rank:
        raise InsufficientFramesError(f"Need {rank} non-silent frames, only {n_frames} available")

    rng = np.random.default_rng(seed)
    max_step = max(1, n_frames // rank)
    taken = np.zeros(n_frames, dtype=bool)
    picks = []
    position = int(rng.integers(n_frames))
    for _ in range(rank):
        while taken[position]:
            position = (position + 1) % n_frames
        taken[position] = True
        picks.append(position)
        position = (position + int(rng.integers(1, max_step + 1))) % n_frames

    logger.info(f"Sampled {rank} basis columns out of {n_frames} frames")
    return normalize_columns(v[:, active[picks]])


def save_basis(w: np.ndarray, path: Union[str, Path]) -> None:
    """Write W as magic, F and R as little-endian u64, then column-major f64 values"""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise DimensionMismatchError(f"Basis must be 2-D, got shape {w.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = BASIS_MAGIC + np.array(w.shape, dtype="<u8").tobytes()
    path.write_bytes(header + w.astype("<f8").tobytes(order="F"))
    logger.info(f"Saved {w.shape[0]}x{w.shape[1]} basis to {path}")


def load_basis(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER_LEN or not data.startswith(BASIS_MAGIC):
        raise BasisFormatError(f"{path} is not a basis file")
    n_rows, rank = (int(v) for v in np.frombuffer(data[len(BASIS_MAGIC):_HEADER_LEN], dtype="<u8"))
    body = data[_HEADER_LEN:]
    if len(body) != n_rows * rank * 8:
        raise BasisFormatError(
            f"{path} declares a {n_rows}x{rank} basis but holds {len(body)} bytes of values"
        )
    w = np.frombuffer(body, dtype="<f8").reshape((n_rows, rank), order="F")
    return np.array(w, dtype=np.float64)
