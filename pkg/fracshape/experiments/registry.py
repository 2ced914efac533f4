# fracshape/experiments/registry.py
"""Kind -> runner table, and the single entry point every CLI command goes through."""

import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fracshape.core.config import settings
from fracshape.core.errors import FracShapeError
from fracshape.core.logger import get_logger
from fracshape.etl.writers import write_json, write_manifest
from fracshape.experiments import runners
from fracshape.experiments.audit import run_bounds_audit
from fracshape.experiments.context import ReportBundle, RunContext
from fracshape.grid.stiffness import StiffnessOperator
from fracshape.schemas.experiment import ExperimentConfig

logger = get_logger(__name__)

RUNNERS = {}


def register(kind: str, runner) -> None:
    RUNNERS[kind] = runner


# =========================
# GRID-CORE / SOLVERS
# =========================
register("grid", runners.run_grid)
register("eig", runners.run_eig)
register("torsion", runners.run_torsion)

# =========================
# SHAPES
# =========================
register("two-ball", runners.run_two_ball)
register("minimize", runners.run_minimize)

# =========================
# CONCENTRATION-COMPACTNESS
# =========================
register("classify", runners.run_classify)
register("lieb", runners.run_lieb)

# =========================
# AUDIT
# =========================
register("bounds-audit", run_bounds_audit)


def resolve_out_dir(config: ExperimentConfig, out_dir: Path | str | None = None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    if config.output_dir is not None:
        return Path(config.output_dir)
    return settings.OUTPUT_DIR / config.kind


def run_experiment(
    config: ExperimentConfig, out_dir: Path | str | None = None, base: StiffnessOperator | None = None
) -> ReportBundle:
    """
    Dispatch one validated config, write its artifacts and the manifest.

    On a FracShapeError the serialized error goes to error.json, the manifest
    still lists what was written, and the error propagates.
    """
    out = resolve_out_dir(config, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(config=config, out_dir=out, base_override=base)
    echo = config.model_dump(mode="json")
    logger.info("experiment %s started in %s", config.kind, out)
    started = time.perf_counter()
    try:
        summary = RUNNERS[config.kind](ctx)
    except FracShapeError as exc:
        ctx.written.append(write_json({"kind": config.kind, "error": exc.to_dict()}, out / "error.json"))
        write_manifest(out, ctx.written, echo, config.seeds, time.perf_counter() - started)
        logger.error("experiment %s failed: %s", config.kind, exc.message)
        raise
    wall_time = time.perf_counter() - started
    write_manifest(out, ctx.written, echo, config.seeds, wall_time)
    logger.info("experiment %s finished in %.2f s", config.kind, wall_time)
    return ReportBundle(
        kind=config.kind,
        out_dir=out,
        files=sorted(p.relative_to(out).as_posix() for p in ctx.written),
        summary=summary,
        wall_time=wall_time,
    )


def run_batch(configs: list[ExperimentConfig], out_dir: Path | str, workers: int | None = None) -> list[dict]:
    """Run configs concurrently, each in its own numbered directory; results keep the input order."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    targets = [root / f"{i:03d}_{c.kind}" for i, c in enumerate(configs)]

    def one(pair) -> dict:
        config, target = pair
        try:
            bundle = run_experiment(config, target)
            return {"status": "ok", **bundle.to_dict()}
        except FracShapeError as exc:
            return {"status": "error", "kind": config.kind, "out_dir": target.as_posix(), "error": exc.to_dict()}

    with ThreadPoolExecutor(max_workers=workers or settings.WORKERS) as pool:
        results = list(pool.map(one, zip(configs, targets)))
    for index, result in enumerate(results):
        result["index"] = index
        result["out_dir"] = Path(result["out_dir"]).relative_to(root).as_posix()
    write_json({"experiments": results}, root / "batch.json")
    return results
