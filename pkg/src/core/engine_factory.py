from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Union
import logging
import time

import numpy as np

from .fit_report import FitReport
from .framestack import run_stacked
from .integrated import run_integrated
from .nctf import run_baseline
from .run_monitor import RunMonitor
from .weighted import run_weighted
from ..config.engine_config import EngineConfig, Method

logger = logging.getLogger(__name__)

EngineRunner = Callable[..., tuple]


@dataclass
class EngineResult:
    """Gain, cost trace and the estimated model of one run.

    ``model`` is an NmfModel for the integrated and stacked engines, a
    WeightedState for the weighted engine and the estimated S for the
    baseline.
    """

    method: Method
    gain: np.ndarray
    report: FitReport
    model: Any
    rir: Any
    execution_time: float


def _baseline_runner(y_spec, config: EngineConfig, fixed_basis=None):
    if fixed_basis is not None or config.fixed_basis:
        raise ValueError("Baseline N-CTF has no spectral basis")
    if config.t_st > 1:
        raise ValueError("Frame stacking is only available for the integrated method")
    gain, report, rir, s = run_baseline(y_spec, config)
    return gain, report, s, rir


def _integrated_runner(y_spec, config: EngineConfig, fixed_basis=None):
    if config.t_st > 1:
        return run_stacked(y_spec, config, fixed_basis)
    return run_integrated(y_spec, config, fixed_basis)


def _weighted_runner(y_spec, config: EngineConfig, fixed_basis=None):
    if config.t_st > 1:
        raise ValueError("Frame stacking is only available for the integrated method")
    gain, report, state = run_weighted(y_spec, config, fixed_basis)
    return gain, report, state, state.rir


class EngineFactory:
    """Registry of estimation engines keyed by method"""

    def __init__(self, monitor: Optional[RunMonitor] = None):
        self.engines: Dict[Method, EngineRunner] = {}
        self.monitor = monitor or RunMonitor()

    def register_engine(self, method: Union[Method, str], runner: EngineRunner):
        self.engines[Method(method)] = runner

    def get_engine(self, method: Union[Method, str]) -> EngineRunner:
        try:
            key = Method(method)
        except ValueError:
            raise ValueError(f"Method '{method}' not registered")
        if key not in self.engines:
            raise ValueError(f"Method '{key.value}' not registered")
        return self.engines[key]

    def execute(
        self,
        method: Union[Method, str],
        y_spec,
        config: EngineConfig,
        fixed_basis: Optional[np.ndarray] = None,
    ) -> EngineResult:
        """Run one engine, timing it and recording the outcome in the monitor"""
        runner = self.get_engine(method)
        key = Method(method).value
        start_time = time.perf_counter()
        try:
            gain, report, model, rir = runner(y_spec, config, fixed_basis)
        except Exception as e:
            execution_time = time.perf_counter() - start_time
            self.monitor.track_call(key, success=False, error=e, execution_time=execution_time)
            logger.error(f"{key} run failed after {execution_time:.2f}s: {e}")
            raise
        execution_time = time.perf_counter() - start_time
        self.monitor.track_call(key, success=True, execution_time=execution_time)
        logger.info(f"{key} run finished in {execution_time:.2f}s, final cost {report.final_cost:.6g}")
        return EngineResult(Method(method), gain, report, model, rir, execution_time)


def create_default_factory(monitor: Optional[RunMonitor] = None) -> EngineFactory:
    factory = EngineFactory(monitor)
    factory.register_engine(Method.NCTF, _baseline_runner)
    factory.register_engine(Method.INTEGRATED, _integrated_runner)
    factory.register_engine(Method.WEIGHTED, _weighted_runner)
    return factory
