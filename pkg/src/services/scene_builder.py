from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union
import logging

import numpy as np

from ..analysis.rir import RirSpec, mix_at_snr, speech_shaped_noise, synthesize_rir
from ..audio.signal_io import Signal, convolve_time, write_wav

logger = logging.getLogger(__name__)

PEAK_LIMIT = 0.99


@dataclass
class Scene:
    """Synthetic RIR, reverberant speech and optionally a noisy mixture.

    Reverberant and noisy signals keep the length of the clean input.
    """

    rir: Signal
    reverberant: Signal
    noise: Optional[Signal] = None
    noisy: Optional[Signal] = None


def build_scene(
    clean: Signal,
    t60: float,
    drr_db: float,
    snr_db: Optional[float] = None,
    seed: int = 0,
) -> Scene:
    rir = synthesize_rir(RirSpec.for_room(t60, drr_db, clean.sample_rate_hz, seed))
    reverberant = convolve_time(clean, rir).trimmed(len(clean))

    noise = noisy = None
    if snr_db is not None:
        shaped = speech_shaped_noise(clean, len(reverberant), seed=seed + 1)
        noisy, noise = mix_at_snr(reverberant, shaped, snr_db)

    loudest = max(float(np.max(np.abs(s.samples))) for s in (reverberant, noisy) if s is not None)
    if loudest > PEAK_LIMIT:
        factor = PEAK_LIMIT / loudest
        logger.info(f"Scaling scene by {factor:.4f} to avoid clipping")
        reverberant = reverberant.scaled(factor)
        if noisy is not None:
            noisy = noisy.scaled(factor)
            noise = noise.scaled(factor)
    return Scene(rir, reverberant, noise, noisy)


def write_scene(scene: Scene, out_dir: Union[str, Path], stem: str) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {"rir": out_dir / f"{stem}_rir.wav", "reverberant": out_dir / f"{stem}_reverberant.wav"}

    rir_peak = float(np.max(np.abs(scene.rir.samples)))
    rir = scene.rir.scaled(PEAK_LIMIT / rir_peak) if rir_peak > PEAK_LIMIT else scene.rir
    write_wav(rir, paths["rir"])
    write_wav(scene.reverberant, paths["reverberant"])
    if scene.noisy is not None:
        paths["noisy"] = out_dir / f"{stem}_noisy.wav"
        write_wav(scene.noisy, paths["noisy"])
    logger.info(f"Wrote scene '{stem}' to {out_dir}")
    return paths
