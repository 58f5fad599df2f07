from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union
import logging

import pandas as pd

logger = logging.getLogger(__name__)


@dataclass
class FitReport:
    """Cost trace of one engine run.

    Index 0 of every trace holds the value before the first sweep, index i
    the value after sweep i.
    """

    cost_name: str
    term_names: Tuple[str, str]
    cost_trace: List[float] = field(default_factory=list)
    term_traces: Dict[str, List[float]] = field(default_factory=dict)
    final_kl: float = float("nan")
    iterations_run: int = 0

    def __post_init__(self):
        for name in self.term_names:
            self.term_traces.setdefault(name, [])

    def record(self, cost: float, first_term: float, second_term: float) -> None:
        self.cost_trace.append(float(cost))
        self.term_traces[self.term_names[0]].append(float(first_term))
        self.term_traces[self.term_names[1]].append(float(second_term))
        logger.debug(f"{self.cost_name} after sweep {len(self.cost_trace) - 1}: {cost:.6g}")

    @property
    def initial_cost(self) -> float:
        return self.cost_trace[0] if self.cost_trace else float("nan")

    @property
    def final_cost(self) -> float:
        return self.cost_trace[-1] if self.cost_trace else float("nan")

    def is_non_increasing(self, rel_slack: float = 1e-9) -> bool:
        trace = self.cost_trace
        return all(
            trace[i + 1] <= trace[i] + rel_slack * abs(trace[i])
            for i in range(len(trace) - 1)
        )

    def to_frame(self) -> pd.DataFrame:
        data = {
            "iteration": list(range(len(self.cost_trace))),
            self.cost_name: self.cost_trace,
        }
        for name in self.term_names:
            data[name] = self.term_traces[name]
        return pd.DataFrame(data)

    def to_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, encoding="utf-8", float_format="%.17g")
        logger.info(f"Wrote fit report with {len(self.cost_trace)} rows to {path}")
