from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Union
import json
import logging

from pydantic import BaseModel, Field, model_validator

from .engine_config import DEFAULT_TEMPORAL_WINDOW, BasisMode, EngineConfig, Method
from .settings import settings

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    ONLINE = "online"
    LOWRANK = "lowrank"
    OVERCOMPLETE = "overcomplete"


VARIANT_BASIS_MODE = {
    Variant.ONLINE: BasisMode.ONLINE,
    Variant.LOWRANK: BasisMode.FIXED_LOWRANK,
    Variant.OVERCOMPLETE: BasisMode.FIXED_OVERCOMPLETE,
}


class OutputPaths(NamedTuple):
    wav: Path
    report_csv: Path
    metadata_json: Path


class RunManifest(BaseModel):
    """What to dereverberate, with which method, and where the results go"""

    inputs: List[Path] = Field(min_length=1)
    method: Method = Method.INTEGRATED
    variant: Variant = Variant.ONLINE
    temporal: bool = False
    basis_path: Optional[Path] = None
    output_dir: Path = Field(default_factory=lambda: settings.OUTPUT_DIR)
    output_wav: Optional[Path] = None
    config_path: Optional[Path] = None
    overrides: Dict[str, Any] = Field(default_factory=dict)
    # Fully resolved config, set when a run is reproduced from its metadata
    config: Optional[EngineConfig] = None

    @model_validator(mode="after")
    def _check_combination(self) -> "RunManifest":
        if self.method == Method.NCTF:
            if self.variant != Variant.ONLINE or self.basis_path is not None:
                logger.warning("Baseline N-CTF has no spectral model; ignoring variant and basis")
            self.variant = Variant.ONLINE
            self.basis_path = None
        elif self.variant != Variant.ONLINE and self.basis_path is None:
            raise ValueError(f"Variant '{self.variant.value}' needs a basis file (--basis)")
        if self.temporal and self.method != Method.INTEGRATED:
            raise ValueError("Frame stacking (--temporal) is only available for the integrated method")
        if self.output_wav is not None and len(self.inputs) > 1:
            raise ValueError("An explicit output file needs exactly one input")
        return self

    @property
    def basis_mode(self) -> BasisMode:
        return VARIANT_BASIS_MODE[self.variant]

    def engine_config(self) -> EngineConfig:
        """Config file values, then flag overrides, then the variant and stacking settings"""
        if self.config is not None:
            return self.config
        overrides = dict(self.overrides)
        overrides["basis_mode"] = self.basis_mode
        if self.temporal:
            overrides.setdefault("t_st", DEFAULT_TEMPORAL_WINDOW)
        if self.config_path is not None:
            return EngineConfig.from_json_file(self.config_path, **overrides)
        return EngineConfig().with_overrides(**overrides)

    def output_paths(self, input_path: Path) -> OutputPaths:
        stem = f"{Path(input_path).stem}_{self.method.value}"
        wav = self.output_wav or self.output_dir / f"{stem}.wav"
        base = wav.with_suffix("")
        return OutputPaths(wav, base.with_name(f"{base.name}_fit.csv"), base.with_name(f"{base.name}_run.json"))

    @classmethod
    def from_metadata(cls, path: Union[str, Path], **updates: Any) -> "RunManifest":
        """Rebuild the manifest and the exact config written by an earlier run"""
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        manifest = dict(data["manifest"])
        manifest["config"] = EngineConfig(**data["config"])
        manifest.update({k: v for k, v in updates.items() if v is not None})
        return cls(**manifest)
