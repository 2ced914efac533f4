# fracshape/experiments/context.py
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import pandas as pd

from fracshape.core.config import settings
from fracshape.etl.writers import write_csv, write_json, write_jsonl
from fracshape.grid.lattice import Grid
from fracshape.grid.stiffness import StiffnessOperator, assemble_stiffness
from fracshape.schemas.experiment import ExperimentConfig


@dataclass
class ReportBundle:
    """What a finished run left on disk."""

    kind: str
    out_dir: Path
    files: list[str]
    summary: dict
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "out_dir": self.out_dir.as_posix(),
            "files": self.files,
            "summary": self.summary,
        }


@dataclass
class RunContext:
    """Config plus lazily built grid and operator; records every artifact it writes."""

    config: ExperimentConfig
    out_dir: Path
    base_override: StiffnessOperator | None = None
    written: list[Path] = field(default_factory=list)

    @cached_property
    def grid(self) -> Grid:
        return self.config.grid.build()

    @cached_property
    def base(self) -> StiffnessOperator:
        if self.base_override is not None:
            return self.base_override
        return assemble_stiffness(self.grid, self.config.s, rule=self.config.kernel_rule)

    @property
    def tolerances(self) -> dict:
        return settings.tolerances(self.config.tolerances)

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        return self._keep(write_csv(frame, self.out_dir / name))

    def json(self, name: str, payload) -> Path:
        return self._keep(write_json(payload, self.out_dir / name))

    def jsonl(self, name: str, records) -> Path:
        return self._keep(write_jsonl(records, self.out_dir / name))

    def _keep(self, path: Path) -> Path:
        self.written.append(path)
        return path
