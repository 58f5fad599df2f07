from pathlib import Path
from typing import List, Optional, Union
import logging

import numpy as np

from ..audio.signal_io import read_wav
from ..audio.stft import StftConfig, magnitude, stft_forward
from ..config.engine_config import EngineConfig
from ..config.manifest import Variant
from ..core.exceptions import EmptyCorpusError, NctfError
from ..core.framestack import stack
from ..core.nmf import sample_overcomplete_basis, save_basis, train_basis_offline

logger = logging.getLogger(__name__)

DEFAULT_TRAINING_ITERATIONS = 100


def collect_corpus(corpus_dir: Union[str, Path]) -> List[Path]:
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise EmptyCorpusError(f"Corpus directory {corpus_dir} does not exist")
    files = sorted(p for p in corpus_dir.rglob("*") if p.suffix.lower() == ".wav" and p.is_file())
    if not files:
        raise EmptyCorpusError(f"No WAV files found under {corpus_dir}")
    return files


def corpus_spectrograms(files: List[Path], config: EngineConfig) -> List[np.ndarray]:
    """Magnitude spectrograms of every readable file, stacked when T_st > 1"""
    stft_config = StftConfig(frame_len=config.frame_len, power_p=config.power_p)
    spectrograms = []
    for path in files:
        try:
            signal = read_wav(path, expected_rate=config.sample_rate)
            values = magnitude(stft_forward(signal, stft_config)).values
        except (NctfError, OSError) as e:
            logger.warning(f"Skipping {path}: {e}")
            continue
        spectrograms.append(stack(values, config.t_st).values if config.t_st > 1 else values)
    if not spectrograms:
        raise EmptyCorpusError("None of the corpus files could be read")
    logger.info(f"Loaded {len(spectrograms)} of {len(files)} corpus files")
    return spectrograms


def train_basis(
    corpus_dir: Union[str, Path],
    rank: int,
    mode: Union[Variant, str],
    out_path: Union[str, Path],
    config: Optional[EngineConfig] = None,
) -> np.ndarray:
    """Build a low-rank or overcomplete basis from a clean-speech corpus and save it"""
    mode = Variant(mode)
    config = config or EngineConfig()
    spectrograms = corpus_spectrograms(collect_corpus(corpus_dir), config)

    if mode == Variant.LOWRANK:
        iterations = config.iterations or DEFAULT_TRAINING_ITERATIONS
        basis = train_basis_offline(spectrograms, rank, iterations, config.seed)
    elif mode == Variant.OVERCOMPLETE:
        basis = sample_overcomplete_basis(spectrograms, rank, config.seed)
    else:
        raise ValueError("Basis training mode must be 'lowrank' or 'overcomplete'")

    save_basis(basis, out_path)
    return basis
