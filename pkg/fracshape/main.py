# fracshape/main.py

import json
import sys
from pathlib import Path

import click
from dotenv import load_dotenv
from pydantic import ValidationError

# load .env BEFORE everything else
load_dotenv()

from fracshape import __version__  # noqa: E402
from fracshape.core.errors import FracShapeError, ParameterError  # noqa: E402
from fracshape.etl.writers import dumps  # noqa: E402
from fracshape.experiments.audit import list_checks  # noqa: E402
from fracshape.experiments.registry import run_batch, run_experiment  # noqa: E402
from fracshape.schemas.experiment import ExperimentConfig  # noqa: E402

EXIT_FAILURE = 1
EXIT_INVALID = 2


def load_config(path: Path) -> ExperimentConfig:
    return ExperimentConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))


def _invalid(messages: list[str]) -> None:
    for message in messages:
        click.echo(f"invalid config: {message}", err=True)
    sys.exit(EXIT_INVALID)


def _validation_messages(exc: ValidationError) -> list[str]:
    return [f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()]


def _prepare(kind: str, config_path: Path, seed: int | None) -> ExperimentConfig:
    try:
        config = load_config(config_path).with_seed(seed)
    except ValidationError as exc:
        _invalid(_validation_messages(exc))
    if config.kind != kind:
        _invalid([f"kind: this command runs {kind!r}, the config declares {config.kind!r}"])
    return config


def _execute(kind: str, config_path: Path, out: Path | None, seed: int | None) -> None:
    config = _prepare(kind, config_path, seed)
    try:
        bundle = run_experiment(config, out)
    except ParameterError as exc:
        _invalid([exc.message])
    except FracShapeError as exc:
        click.echo(f"{kind} failed: {exc.message}", err=True)
        sys.exit(EXIT_FAILURE)
    click.echo(dumps(bundle.to_dict()), nl=False)


def experiment_options(fn):
    fn = click.option("--seed", type=int, default=None, help="Run with this single seed instead of the config's seeds.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None, help="Output directory.")(fn)
    return fn


# =========================
# COMMAND GROUP
# =========================
@click.group()
@click.version_option(__version__, prog_name="fracshape")
def cli():
    """Spectral shape experiments for the fractional Dirichlet Laplacian."""


def _experiment_command(name: str, kind: str, help_text: str):
    @cli.command(name=name, help=help_text)
    @click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
    @experiment_options
    def command(config_path: Path, out: Path | None, seed: int | None):
        _execute(kind, config_path, out, seed)

    return command


# =========================
# EXPERIMENTS
# =========================
grid = _experiment_command("grid", "grid", "Grid geometry, normalization constant and stiffness summary.")
eig = _experiment_command("eig", "eig", "First k Dirichlet eigenpairs of a mask.")
torsion = _experiment_command("torsion", "torsion", "Torsion function of a mask.")
two_ball = _experiment_command("two-ball", "two-ball", "Second eigenvalue of two receding balls.")
minimize = _experiment_command("minimize", "minimize", "Volume-constrained minimization of a spectral functional.")
classify = _experiment_command("classify", "classify", "Concentration-compactness verdict on a synthetic sequence.")
lieb = _experiment_command("lieb", "lieb", "Translation search for a large intersection.")


# =========================
# AUDIT
# =========================
@cli.command(help="Inequality audit over randomized masks.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--list-checks", "show_checks", is_flag=True, help="List the audit checks and exit.")
@experiment_options
def audit(config_path: Path | None, show_checks: bool, out: Path | None, seed: int | None):
    if show_checks:
        for entry in list_checks():
            click.echo(f"{entry['name']:<20} {entry['invariant']:<28} {entry['description']}")
        return
    if config_path is None:
        _invalid(["--config is required unless --list-checks is given"])
    _execute("bounds-audit", config_path, out, seed)


# =========================
# SYSTEM
# =========================
@cli.command(help="Print the JSON schema of experiment configs.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
def schema(out: Path | None):
    text = json.dumps(ExperimentConfig.model_json_schema(), indent=2, sort_keys=True) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")


@cli.command(help="Run several configs concurrently, one numbered directory each.")
@click.option("--config", "config_paths", multiple=True, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--workers", type=click.IntRange(min=1), default=None)
def batch(config_paths: tuple[Path, ...], out: Path, workers: int | None):
    configs = []
    for path in config_paths:
        try:
            configs.append(load_config(path))
        except ValidationError as exc:
            _invalid([f"{path}: {m}" for m in _validation_messages(exc)])
    results = run_batch(configs, out, workers)
    click.echo(dumps({"experiments": results}), nl=False)
    if any(r["status"] != "ok" for r in results):
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    cli()
