from pathlib import Path
from typing import List, Optional, Sequence, Union
import logging

import numpy as np
import pandas as pd

from ..analysis.metrics import MetricReport, cepstral_distance, kl_fit, log_spectral_distance
from ..audio.signal_io import Signal, read_wav
from ..audio.stft import Spectrogram, StftConfig, magnitude, stft_forward
from ..config.engine_config import EngineConfig

logger = logging.getLogger(__name__)

REVERBERANT_LABEL = "reverberant"
METRIC_COLUMNS = ["kl_fit", "lsd_db", "cd"]
# Keeps the KL fit finite where a processed bin is exactly zero
KL_FLOOR = 1e-8


def evaluate_signal(
    clean: Signal,
    processed: Signal,
    file: str,
    method: str,
    stft_config: Optional[StftConfig] = None,
) -> MetricReport:
    """Compare a processed signal with the clean reference, trimming both to the shorter one"""
    length = min(len(clean), len(processed))
    clean = clean.trimmed(length)
    processed = processed.trimmed(length)
    stft_config = stft_config or StftConfig(frame_len=EngineConfig().frame_len)

    clean_mag = magnitude(stft_forward(clean, stft_config))
    processed_mag = magnitude(stft_forward(processed, stft_config))
    floor = KL_FLOOR * max(float(np.max(clean_mag.values)), 1.0)
    fit = kl_fit(Spectrogram(clean_mag.values + floor), Spectrogram(processed_mag.values + floor))

    return MetricReport(
        file=file,
        method=method,
        kl_fit=fit,
        lsd_db=log_spectral_distance(clean_mag, processed_mag),
        cd=cepstral_distance(clean, processed),
    )


def add_deltas(frame: pd.DataFrame) -> pd.DataFrame:
    """Processed minus reverberant for every metric; NaN when there is no reverberant row"""
    frame = frame.copy()
    reference = frame[frame["method"] == REVERBERANT_LABEL]
    for column in METRIC_COLUMNS:
        baseline = reference[column].iloc[0] if len(reference) else np.nan
        frame[f"delta_{column}"] = frame[column] - baseline
    return frame


def evaluate_files(
    clean_path: Union[str, Path],
    processed_paths: Sequence[Union[str, Path]],
    reverberant_path: Optional[Union[str, Path]] = None,
    labels: Optional[Sequence[str]] = None,
    config: Optional[EngineConfig] = None,
) -> pd.DataFrame:
    config = config or EngineConfig()
    stft_config = StftConfig(frame_len=config.frame_len)
    if labels is not None and len(labels) != len(processed_paths):
        raise ValueError(f"Got {len(labels)} labels for {len(processed_paths)} processed files")

    clean = read_wav(clean_path, expected_rate=config.sample_rate)
    reports: List[MetricReport] = []
    if reverberant_path is not None:
        reverberant = read_wav(reverberant_path, expected_rate=config.sample_rate)
        reports.append(evaluate_signal(clean, reverberant, Path(reverberant_path).name,
                                       REVERBERANT_LABEL, stft_config))

    for index, path in enumerate(processed_paths):
        path = Path(path)
        label = labels[index] if labels is not None else path.stem
        processed = read_wav(path, expected_rate=config.sample_rate)
        reports.append(evaluate_signal(clean, processed, path.name, label, stft_config))
        logger.info(f"Evaluated {path.name}: LSD {reports[-1].lsd_db:.2f} dB, CD {reports[-1].cd:.2f}")

    return add_deltas(pd.DataFrame([r.to_row() for r in reports]))


def write_metrics_csv(frame: pd.DataFrame, path: Union[str, Path], append: bool = False) -> None:
    """Write the metric table as UTF-8 CSV, appending rows to an existing file when asked"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    exists = path.exists()
    frame.to_csv(path, mode="a" if append else "w", header=not (append and exists),
                 index=False, encoding="utf-8", float_format="%.17g")
    logger.info(f"Wrote {len(frame)} metric rows to {path}")
