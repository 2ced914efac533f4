# fracshape/etl/writers.py
"""
Artifact export for experiment runs: CSV tables via pandas, JSON reports,
JSON-lines trajectories and the run manifest.
"""

import hashlib
import json
import platform
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import pandas as pd

from fracshape import __version__
from fracshape.core.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"
MANIFEST = "manifest.json"
_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "click")


# ==========================================================
# 1. Values JSON can carry
# ==========================================================
def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if hasattr(value, "model_dump"):
        return _plain(value.model_dump(mode="python"))
    if isinstance(value, Path):
        return value.as_posix()
    return value


def _float_text(value: float) -> str:
    """FLOAT_FORMAT text for one float, kept a JSON float (1.0 stays 1.0, not 1)."""
    if value != value:
        return "NaN"
    if value in (float("inf"), float("-inf")):
        return "Infinity" if value > 0 else "-Infinity"
    text = FLOAT_FORMAT % value
    return text if any(c in text for c in ".e") else text + ".0"


class FloatFormatEncoder(json.JSONEncoder):
    """JSON encoder that writes floats with the same FLOAT_FORMAT as the CSV tables."""

    def iterencode(self, o, _one_shot=False):
        indent = " " * self.indent if isinstance(self.indent, int) else self.indent
        # json only exposes its float hook through the pure-Python iterencode
        encode = json.encoder._make_iterencode(
            {} if self.check_circular else None,
            self.default,
            json.encoder.encode_basestring_ascii if self.ensure_ascii else json.encoder.encode_basestring,
            indent,
            _float_text,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            _one_shot,
        )
        return encode(o, 0)


def dumps(payload, indent: int | None = 2) -> str:
    text = json.dumps(_plain(payload), sort_keys=True, indent=indent, cls=FloatFormatEncoder)
    return text + "\n" if indent is not None else text


# ==========================================================
# 2. Writers
# ==========================================================
def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("wrote %s rows to %s", len(frame), path)
    return path


def write_json(payload, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload), encoding="utf-8", newline="\n")
    logger.info("wrote %s", path)
    return path


def write_jsonl(records, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [dumps(r, indent=None) for r in records]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8", newline="\n")
    logger.info("wrote %s records to %s", len(lines), path)
    return path


# ==========================================================
# 3. Manifest
# ==========================================================
def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_versions() -> dict:
    versions = {"fracshape": __version__, "python": platform.python_version()}
    for name in _PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = None
    return versions


def write_manifest(out_dir: Path, files: list[Path], config: dict, seeds: list[int], wall_time: float) -> Path:
    """Every artifact with its content hash, plus the config echo and run metadata."""
    entries = [
        {"path": f.relative_to(out_dir).as_posix(), "sha256": sha256_file(f), "bytes": f.stat().st_size}
        for f in sorted(files, key=lambda p: p.relative_to(out_dir).as_posix())
    ]
    manifest = {
        "config": config,
        "seeds": list(seeds),
        "versions": package_versions(),
        "wall_time": wall_time,
        "files": entries,
    }
    return write_json(manifest, out_dir / MANIFEST)


def read_manifest(out_dir: Path) -> dict:
    return json.loads((out_dir / MANIFEST).read_text(encoding="utf-8"))


def verify_manifest(out_dir: Path) -> list[str]:
    """Paths whose current hash differs from the one recorded."""
    manifest = read_manifest(out_dir)
    return [e["path"] for e in manifest["files"] if sha256_file(out_dir / e["path"]) != e["sha256"]]
