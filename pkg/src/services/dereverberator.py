from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional
import json
import logging

import numpy as np

from .. import __version__
from ..audio.signal_io import Signal, read_wav, write_wav
from ..audio.stft import StftConfig, apply_gain_and_synthesize, magnitude, stft_forward
from ..config.engine_config import EngineConfig, Method
from ..config.manifest import OutputPaths, RunManifest
from ..config.settings import settings
from ..core.engine_factory import EngineFactory, EngineResult, create_default_factory
from ..core.nmf import load_basis

logger = logging.getLogger(__name__)


@dataclass
class DereverbOutcome:
    signal: Signal
    result: EngineResult


class Dereverberator:
    """STFT analysis, engine run, gain application and overlap-add synthesis"""

    def __init__(self, factory: Optional[EngineFactory] = None):
        self.factory = factory or create_default_factory()

    def process_signal(
        self,
        signal: Signal,
        method: Method,
        config: EngineConfig,
        fixed_basis: Optional[np.ndarray] = None,
    ) -> DereverbOutcome:
        stft_config = StftConfig(frame_len=config.frame_len, power_p=config.power_p)
        spec = stft_forward(signal, stft_config)
        y_spec = magnitude(spec)
        result = self.factory.execute(method, y_spec, config, fixed_basis)

        rir = getattr(result.rir, "h", None)
        if rir is not None and not config.direct_synthesis:
            bound = 1.0 / max(float(np.min(rir[:, 0])), config.eps)
            peak = float(np.max(result.gain)) if result.gain.size else 0.0
            if peak > bound * (1.0 + 1e-9):
                logger.warning(f"Gain peak {peak:.4g} exceeds the model bound {bound:.4g}")

        enhanced = apply_gain_and_synthesize(spec, result.gain, config.power_p)
        return DereverbOutcome(enhanced, result)

    def run(self, manifest: RunManifest) -> List[OutputPaths]:
        """Process every input of the manifest, spreading files over NCTF_NUM_THREADS workers"""
        config = manifest.engine_config()
        fixed_basis = None
        if manifest.method != Method.NCTF and config.fixed_basis:
            fixed_basis = load_basis(manifest.basis_path)
            logger.info(f"Loaded {fixed_basis.shape[0]}x{fixed_basis.shape[1]} basis from {manifest.basis_path}")

        workers = min(settings.NCTF_NUM_THREADS, len(manifest.inputs))
        if workers <= 1:
            return [self._process_file(path, manifest, config, fixed_basis) for path in manifest.inputs]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(self._process_file, path, manifest, config, fixed_basis)
                       for path in manifest.inputs]
            return [future.result() for future in futures]

    def _process_file(
        self,
        path: Path,
        manifest: RunManifest,
        config: EngineConfig,
        fixed_basis: Optional[np.ndarray],
    ) -> OutputPaths:
        logger.info(f"Dereverberating {path} with {manifest.method.value}")
        signal = read_wav(path, expected_rate=config.sample_rate)
        outcome = self.process_signal(signal, manifest.method, config, fixed_basis)

        paths = manifest.output_paths(path)
        write_wav(outcome.signal, paths.wav)
        outcome.result.report.to_csv(paths.report_csv)
        self._write_metadata(paths.metadata_json, path, manifest, config, outcome.result)
        logger.info(f"Wrote {paths.wav}")
        return paths

    def _write_metadata(
        self,
        path: Path,
        input_path: Path,
        manifest: RunManifest,
        config: EngineConfig,
        result: EngineResult,
    ) -> None:
        metadata: Dict[str, Any] = {
            "version": f"nctf-dereverb {__version__}",
            "created": datetime.now().isoformat(),
            "input": str(input_path),
            "manifest": manifest.model_dump(mode="json", exclude={"config"}),
            "config": config.model_dump(mode="json"),
            "resolved": {
                "iterations": config.resolved_iterations(manifest.method),
                "rank": config.resolved_rank(),
                "rho": config.resolved_rho(),
            },
            "fit": {
                "iterations_run": result.report.iterations_run,
                "final_cost": result.report.final_cost,
                "final_kl": result.report.final_kl,
                "execution_time": result.execution_time,
            },
            "monitor": self.factory.monitor.snapshot(),
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(metadata, f, indent=2)
