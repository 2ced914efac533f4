# fracshape/schemas/reports.py
from typing import Literal

from pydantic import BaseModel, model_validator


class TrichotomyReport(BaseModel):
    verdict: Literal["compactness", "vanishing", "dichotomy", "inconclusive"]
    centers: list[list[float]] | None = None
    alpha: float | None = None
    radii: list[float]
    profiles: list[list[float]]
    thresholds: dict
    heuristic: bool = True

    @model_validator(mode="after")
    def check_verdict(self):
        if self.verdict == "compactness" and not self.centers:
            raise ValueError("a compactness verdict needs centers")
        if self.verdict == "dichotomy":
            limit = self.thresholds.get("mass_limit")
            if self.alpha is None or not 0 < self.alpha < limit:
                raise ValueError("a dichotomy verdict needs alpha in (0, mass_limit)")
        return self


class TailStep(BaseModel):
    snapshot: int
    cells: int
    clusters: int
    separation: float
    cluster_volumes: list[float]
    debris_volume: float
    resolvent_gap: float
    resolvent_norm: float
    value: float | None = None
    repaired_value: float | None = None


class DichotomyReport(BaseModel):
    verdict: Literal["compactness", "dichotomy", "inconclusive"]
    separations: list[float]
    component_volumes: list[list[float]]
    resolvent_gap: list[float]
    components: list[list[list[int]]] | None = None
    steps: list[TailStep] = []
    torsion_spread: float | None = None

    @model_validator(mode="after")
    def check_verdict(self):
        if self.verdict == "dichotomy":
            if any(b <= a for a, b in zip(self.separations, self.separations[1:])):
                raise ValueError("a dichotomy verdict needs strictly increasing separations")
        return self


class CheckResult(BaseModel):
    name: str
    invariant: str
    passed: bool
    slack: float
    trials: int
    detail: dict = {}


class AuditReport(BaseModel):
    passed: bool
    checks: list[CheckResult]

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]
