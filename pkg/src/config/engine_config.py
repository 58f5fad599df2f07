from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union
import json

from pydantic import BaseModel, Field, field_validator

from .settings import settings


class Method(str, Enum):
    NCTF = "nctf"
    INTEGRATED = "integrated"
    WEIGHTED = "weighted"


class BasisMode(str, Enum):
    ONLINE = "online"
    FIXED_LOWRANK = "fixed_lowrank"
    FIXED_OVERCOMPLETE = "fixed_overcomplete"


DEFAULT_RANK = {
    BasisMode.ONLINE: 100,
    BasisMode.FIXED_LOWRANK: 100,
    BasisMode.FIXED_OVERCOMPLETE: 3000,
}

DEFAULT_ITERATIONS = {
    Method.NCTF: 20,
    Method.INTEGRATED: 20,
    Method.WEIGHTED: 70,
}

DEFAULT_RHO = {
    BasisMode.ONLINE: 0.75,
    BasisMode.FIXED_LOWRANK: 0.75,
    BasisMode.FIXED_OVERCOMPLETE: 0.45,
}

DEFAULT_TEMPORAL_WINDOW = 6


class EngineConfig(BaseModel):
    """All tunables of the estimation engines.

    Fields left as None are resolved per method and basis mode by the
    ``resolved_*`` helpers, so one config file can drive every method.
    """

    rank: Optional[int] = Field(default=None, ge=1)
    iterations: Optional[int] = Field(default=None, ge=1)
    lh: int = Field(default=10, ge=1)
    power_p: int = 1
    lambda_value: Optional[float] = Field(default=None, ge=0.0)
    phi_x: float = Field(default=1.02, ge=1.0)
    eps: float = Field(default=1e-12, gt=0.0)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED)
    basis_mode: BasisMode = BasisMode.ONLINE
    t_st: int = Field(default=1, ge=1)
    pure_mode: bool = False
    rho: Optional[float] = None
    frame_ms: float = Field(default=64.0, gt=0.0)
    sample_rate: int = Field(default_factory=lambda: settings.EXPECTED_SAMPLE_RATE, gt=0)
    warmup_iterations: int = Field(default=10, ge=0)
    direct_synthesis: bool = False

    @field_validator("power_p")
    @classmethod
    def _check_power(cls, value: int) -> int:
        if value not in (1, 2):
            raise ValueError(f"power_p must be 1 or 2, got {value}")
        return value

    @property
    def fixed_basis(self) -> bool:
        return self.basis_mode != BasisMode.ONLINE

    @property
    def frame_len(self) -> int:
        frame_len = int(round(self.frame_ms * self.sample_rate / 1000.0))
        # 50% overlap needs an even frame
        return frame_len + (frame_len % 2)

    def resolved_rank(self) -> int:
        return self.rank if self.rank is not None else DEFAULT_RANK[self.basis_mode]

    def resolved_iterations(self, method: Union[Method, str]) -> int:
        if self.iterations is not None:
            return self.iterations
        return DEFAULT_ITERATIONS[Method(method)]

    def resolved_rho(self) -> float:
        return self.rho if self.rho is not None else DEFAULT_RHO[self.basis_mode]

    def with_overrides(self, **overrides: Any) -> "EngineConfig":
        """Return a validated copy with the non-None overrides applied"""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return EngineConfig(**data)

    @classmethod
    def from_json_file(cls, path: Union[str, Path], **overrides: Any) -> "EngineConfig":
        """Load a flat JSON document of field names; non-None overrides win"""
        with open(path, "r", encoding="utf-8") as f:
            data: Dict[str, Any] = json.load(f)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)
