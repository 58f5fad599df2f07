from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .dereverberator import Dereverberator
from .evaluator import evaluate_signal
from ..audio.signal_io import Signal
from ..audio.stft import StftConfig
from ..config.engine_config import EngineConfig, Method
from ..config.settings import settings

logger = logging.getLogger(__name__)

# Sweep name -> EngineConfig field
SWEEPABLE = {
    "rho": "rho",
    "iterations": "iterations",
    "lh": "lh",
    "phi_x": "phi_x",
    "power": "power_p",
    "frame_ms": "frame_ms",
    "lambda": "lambda_value",
}
INTEGER_FIELDS = {"iterations", "lh", "power_p"}


def parse_sweep(text: str) -> Tuple[str, List[float]]:
    """Parse 'name=start:stop:step' (stop inclusive)"""
    try:
        name, grid = text.split("=", 1)
        start, stop, step = (float(part) for part in grid.split(":"))
    except ValueError:
        raise ValueError(f"Sweep must look like name=start:stop:step, got '{text}'")
    name = name.strip()
    if name not in SWEEPABLE:
        raise ValueError(f"Cannot sweep '{name}'; choose one of {sorted(SWEEPABLE)}")
    if step <= 0 or stop < start:
        raise ValueError(f"Sweep grid {grid} is empty")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    values = [round(start + i * step, 10) for i in range(count)]
    if SWEEPABLE[name] in INTEGER_FIELDS:
        values = [int(round(v)) for v in values]
    return name, values


def run_sweep(
    signal: Signal,
    method: Union[Method, str],
    config: EngineConfig,
    parameter: str,
    values: Sequence[Any],
    reference: Optional[Signal] = None,
    fixed_basis: Optional[np.ndarray] = None,
    dereverberator: Optional[Dereverberator] = None,
) -> pd.DataFrame:
    """Dereverberate ``signal`` once per parameter value and tabulate the outcome"""
    if parameter not in SWEEPABLE:
        raise ValueError(f"Cannot sweep '{parameter}'; choose one of {sorted(SWEEPABLE)}")
    method = Method(method)
    dereverberator = dereverberator or Dereverberator()
    field = SWEEPABLE[parameter]

    def one_point(value) -> Dict[str, Any]:
        point_config = config.with_overrides(**{field: value})
        outcome = dereverberator.process_signal(signal, method, point_config, fixed_basis)
        row: Dict[str, Any] = {
            parameter: value,
            "final_cost": outcome.result.report.final_cost,
            "final_kl": outcome.result.report.final_kl,
            "iterations_run": outcome.result.report.iterations_run,
        }
        if reference is not None:
            report = evaluate_signal(reference, outcome.signal, "sweep", method.value,
                                     StftConfig(frame_len=point_config.frame_len))
            row.update(kl_fit=report.kl_fit, lsd_db=report.lsd_db, cd=report.cd)
        logger.info(f"Sweep {parameter}={value}: final cost {row['final_cost']:.6g}")
        return row

    workers = max(1, min(settings.NCTF_NUM_THREADS, len(values)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(one_point, values))
    return pd.DataFrame(rows)


def plot_sweep(frame: pd.DataFrame, parameter: str, path: Union[str, Path]) -> None:
    columns = [c for c in ("lsd_db", "cd", "kl_fit") if c in frame.columns] or ["final_kl"]
    fig, axes = plt.subplots(len(columns), 1, figsize=(6, 2.5 * len(columns)), sharex=True, squeeze=False)
    for ax, column in zip(axes[:, 0], columns):
        ax.plot(frame[parameter], frame[column], marker="o")
        ax.set_ylabel(column)
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel(parameter)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info(f"Saved sweep plot to {path}")
