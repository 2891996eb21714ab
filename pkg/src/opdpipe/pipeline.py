"""Full pipeline runs: stage sequencing, run log and the run manifest.

``manifest.json`` records the effective configuration, package versions and
the sha256 of every input and product file. It holds no wall-clock fields,
so identical inputs and configuration give a byte-identical manifest.
"""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from .asciigrid import read_scene_manifest
from .config import PATH_FIELDS, RunConfig
from .errors import OpdError, StageError
from .logging_utils import attach_run_log, detach_run_log, get_logger
from .registry import PIPELINE_ORDER, StageRegistry
from .stages.base import OutputLayout, StageResult

logger = get_logger(__name__)

MANIFEST_PACKAGES = ("opdpipe", "numpy", "pandas", "shapely", "PyYAML", "typer", "rich", "python-dotenv")
_CHUNK = 1 << 20


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for block in iter(lambda: handle.read(_CHUNK), b""):
            digest.update(block)
    return digest.hexdigest()


def package_versions(names: Iterable[str] = MANIFEST_PACKAGES) -> Dict[str, Optional[str]]:
    versions: Dict[str, Optional[str]] = {"python": platform.python_version()}
    for name in names:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


def input_files(config: RunConfig) -> List[Path]:
    """Every file a run reads: manifests, scenes, chip detections and layers."""

    files: List[Path] = []
    if config.scene_manifest:
        manifest = Path(config.scene_manifest)
        files.append(manifest)
        for paths in read_scene_manifest(manifest).values():
            files.extend(paths)
    if config.detections_dir and Path(config.detections_dir).is_dir():
        files.extend(Path(config.detections_dir).rglob("*.txt"))
    for name in ("exclusion_path", "region_path", "eez_path", "coast_path", "bathymetry_path"):
        path = config.path(name)
        if path is not None:
            files.append(path)
    return sorted({p.resolve() for p in files}, key=lambda p: p.as_posix())


def _relative(path: Path, root: Path) -> str:
    try:
        return path.resolve().relative_to(root.resolve()).as_posix()
    except ValueError:
        return path.resolve().as_posix()


def build_manifest(config: RunConfig, results: Dict[str, StageResult], layout: OutputLayout) -> dict:
    outputs = sorted({p.resolve() for r in results.values() for p in r.files}, key=lambda p: p.as_posix())
    settings = config.to_dict()
    for name in PATH_FIELDS:
        if settings.get(name):
            settings[name] = Path(settings[name]).as_posix()
    return {
        "config": settings,
        "versions": package_versions(),
        "stages": {name: result.output for name, result in results.items()},
        "inputs": {p.as_posix(): sha256_file(p) for p in input_files(config)},
        "outputs": {_relative(p, layout.root): sha256_file(p) for p in outputs},
    }


def write_manifest(manifest: dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


@dataclass
class RunReport:
    layout: OutputLayout
    results: Dict[str, StageResult] = field(default_factory=dict)
    manifest_path: Optional[Path] = None


def run_pipeline(config: RunConfig, registry: Optional[StageRegistry] = None) -> RunReport:
    """Execute composite → export; a failing stage aborts with :class:`StageError`."""

    config.validate()
    registry = registry or StageRegistry.from_default_spec()
    layout = OutputLayout(Path(config.output_dir))
    layout.root.mkdir(parents=True, exist_ok=True)
    report = RunReport(layout)

    handler = attach_run_log(layout.root)
    try:
        logger.info("Pipeline run into %s with %d worker(s)", layout.root, config.workers)
        for name in PIPELINE_ORDER:
            result = registry.call(name, config)
            report.results[name] = result
            if not result.success:
                exc = result.exception
                if isinstance(exc, StageError):
                    raise exc
                if isinstance(exc, OpdError):
                    raise StageError(name, str(exc)) from exc
                raise StageError(name, result.error or "failed")
            logger.info("[%s] %s", name, result.output)
        report.manifest_path = write_manifest(build_manifest(config, report.results, layout), layout.manifest)
        logger.info("Run manifest written to %s", report.manifest_path)
    finally:
        detach_run_log(handler)
    return report


__all__ = [
    "RunReport",
    "build_manifest",
    "input_files",
    "package_versions",
    "run_pipeline",
    "sha256_file",
    "write_manifest",
]
