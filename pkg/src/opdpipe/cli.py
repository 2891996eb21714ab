"""Command-line interface: one subcommand per pipeline stage plus ``run``.

Global options (config file, output directory, worker count, thresholds and
generic ``--set key=value`` overrides) come before the subcommand and take
precedence over the config file and ``OPDPIPE_*`` environment variables.

Exit codes: 0 ok, 2 configuration error, 3 input error, 4 stage failure.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from .config import RunConfig, configure, get_config, load_run_config
from .errors import EXIT_STAGE, ConfigError, OpdError, exit_code_for
from .logging_utils import get_logger, setup_logging
from .pipeline import run_pipeline
from .registry import StageRegistry
from .stages.base import StageResult

cli = typer.Typer(
    name="opdpipe",
    help="Offshore platform inventory pipeline: SAR composites to platform tracks and dataset products.",
    no_args_is_help=True,
    add_completion=False,
)
console = Console()
logger = get_logger(__name__)


def _parse_assignments(values: Optional[List[str]]) -> Dict[str, str]:
    parsed: Dict[str, str] = {}
    for item in values or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        parsed[key.strip()] = value.strip()
    return parsed


def _fail(exc: BaseException) -> None:
    code = exit_code_for(exc)
    console.print(f"[bold red]Error:[/bold red] {escape(str(exc))}")
    raise typer.Exit(code=code)


def _render(name: str, result: StageResult) -> None:
    if not result.success:
        _fail(result.exception or OpdError(result.error or f"{name} failed"))
    console.print(f"[green]✓[/green] [bold]{name}[/bold]: {result.output}")
    if result.files:
        logger.debug("%s wrote %d files", name, len(result.files))


def _call(name: str, config: Optional[RunConfig] = None, **kwargs: Any) -> StageResult:
    registry = StageRegistry.from_default_spec()
    result = registry.call(name, config or get_config(), **{k: v for k, v in kwargs.items() if v is not None})
    _render(name, result)
    return result


@cli.callback()
def main(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Flat key: value YAML config file."),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", "-o", help="Run output directory."),
    workers: Optional[int] = typer.Option(None, "--workers", "-j", help="Parallel (tile, quarter) units."),
    conf_min: Optional[float] = typer.Option(None, "--conf-min", help="Detection confidence gate."),
    level_min: Optional[int] = typer.Option(None, "--level-min", help="Minimum 8-bit composite level inside a box."),
    iou_dedup: Optional[float] = typer.Option(None, "--iou-dedup", help="IoU joining duplicates within a quarter."),
    iou_link: Optional[float] = typer.Option(None, "--iou-link", help="IoU linking detections across quarters."),
    eval_iou: Optional[float] = typer.Option(None, "--eval-iou", help="IoU for evaluation matches."),
    eval_conf: Optional[float] = typer.Option(None, "--eval-conf", help="Confidence gate for evaluation."),
    presence: Optional[str] = typer.Option(None, "--presence", help="Presence mode: filled or observed."),
    assignments: Optional[List[str]] = typer.Option(None, "--set", help="Override any setting, e.g. --set coast_path=coast.geojson."),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Console log level."),
) -> None:
    """Resolve the layered configuration before any subcommand runs."""

    setup_logging(log_level)
    try:
        overrides: Dict[str, Any] = _parse_assignments(assignments)
        overrides.update(
            {
                "output_dir": str(output_dir) if output_dir else None,
                "workers": workers,
                "conf_min": conf_min,
                "level_min": level_min,
                "iou_dedup": iou_dedup,
                "iou_link": iou_link,
                "eval_iou": eval_iou,
                "eval_conf": eval_conf,
                "presence": presence,
            }
        )
        configure(load_run_config(config, overrides=overrides))
    except OpdError as exc:
        _fail(exc)


@cli.command()
def composite(
    scene_manifest: Optional[Path] = typer.Option(None, "--scene-manifest", help="CSV of tile_id, quarter, scene_path."),
) -> None:
    """Median-composite and quantise every (tile, quarter) unit."""

    _call("composite", scene_manifest=str(scene_manifest) if scene_manifest else None)


@cli.command()
def chip(
    composites_dir: Optional[Path] = typer.Option(None, "--composites-dir", help="Directory of composites."),
    export: Optional[bool] = typer.Option(None, "--export/--no-export", help="Write every chip as an ESRI grid; defaults to export_chips."),
) -> None:
    """List (and optionally export) the 640 px model chips of every composite."""

    _call("chip", composites_dir=str(composites_dir) if composites_dir else None, export=export)


@cli.command()
def ingest(
    manifest: Optional[Path] = typer.Option(None, "--manifest", help="Ingest manifest CSV."),
    composites_dir: Optional[Path] = typer.Option(None, "--composites-dir", help="Directory of composites."),
    detections_dir: Optional[Path] = typer.Option(None, "--detections-dir", help="Root of <tile>/<quarter>/<chip>.txt files."),
) -> None:
    """Parse chip detection files into geographic detections."""

    _call(
        "ingest",
        manifest=str(manifest) if manifest else None,
        composites_dir=str(composites_dir) if composites_dir else None,
        detections_dir=str(detections_dir) if detections_dir else None,
    )


@cli.command()
def consolidate(
    detections_dir: Optional[Path] = typer.Option(None, "--detections-dir", help="Directory of ingested detections."),
) -> None:
    """Gate, de-duplicate and mask detections per quarter."""

    _call("consolidate", detections_dir=str(detections_dir) if detections_dir else None)


@cli.command()
def link(
    inventories_dir: Optional[Path] = typer.Option(None, "--inventories-dir", help="Directory of quarterly inventories."),
) -> None:
    """Link quarterly inventories into platform tracks."""

    _call("link", inventories_dir=str(inventories_dir) if inventories_dir else None)


@cli.command()
def enrich(
    tracks: Optional[Path] = typer.Option(None, "--tracks", help="Track GeoJSON."),
) -> None:
    """Attach region, EEZ, coast distance, depth and area to every track."""

    _call("enrich", tracks_path=str(tracks) if tracks else None)


@cli.command()
def stats(
    enriched: Optional[Path] = typer.Option(None, "--enriched", help="Enriched platform GeoJSON."),
    groups: Optional[Path] = typer.Option(None, "--groups", help="YAML of EEZ groups for the snapshot table."),
) -> None:
    """Write the statistics tables and their schema."""

    _call("stats", enriched_path=str(enriched) if enriched else None, groups_path=str(groups) if groups else None)


@cli.command(name="eval")
def evaluate(
    predictions: List[str] = typer.Option(..., "--pred", help="Prediction GeoJSON, optionally NAME=PATH; repeatable."),
    truth: Path = typer.Option(..., "--truth", help="Ground-truth GeoJSON."),
    regions: Optional[Path] = typer.Option(None, "--by-region", "--regions", help="Region polygons for per-region metrics."),
    iou: Optional[float] = typer.Option(None, "--iou", help="IoU for a match; overrides eval_iou."),
    conf: Optional[float] = typer.Option(None, "--conf", help="Confidence gate; overrides eval_conf."),
    point_in_box: bool = typer.Option(False, "--point-in-box", help="Match prediction centres inside truth boxes."),
    unscored: bool = typer.Option(False, "--unscored", help="Disable the confidence gate."),
    out: Optional[Path] = typer.Option(None, "--out", help="Report path."),
) -> None:
    """Precision, recall and F1 of one or more prediction sets."""

    named: Dict[str, str] = {}
    for item in predictions:
        name, sep, path = item.partition("=")
        if not sep:
            name, path = Path(item).stem, item
        named[name] = path
    config = get_config().copy()
    if iou is not None:
        config.eval_iou = iou
    if conf is not None:
        config.eval_conf = conf
    try:
        config.validate()
    except ConfigError as exc:
        _fail(exc)
    result = _call(
        "evaluate",
        config,
        predictions=named,
        truth=str(truth),
        regions_path=str(regions) if regions else None,
        point_in_box=point_in_box,
        unscored=unscored,
        out_path=str(out) if out else None,
    )
    table = Table(title="Evaluation")
    for column in ("dataset", "region", "TP", "FP", "FN", "precision", "recall", "F1"):
        table.add_column(column, justify="right" if column not in ("dataset", "region") else "left")
    for name, report in result.data.items():
        for m in [*sorted(report.per_region.values(), key=lambda m: m.region), report.micro]:
            table.add_row(name, m.region, str(m.tp), str(m.fp), str(m.fn), f"{m.precision:.3f}", f"{m.recall:.3f}", f"{m.f1:.3f}")
        table.add_row(name, "[bold]macro F1[/bold]", "", "", "", "", "", f"{report.macro_f1:.3f}")
    console.print(table)


@cli.command()
def export(
    enriched: Optional[Path] = typer.Option(None, "--enriched", help="Enriched platform GeoJSON."),
) -> None:
    """Write the ALL, QUARTERLY and SNAPSHOT products."""

    _call("export", enriched_path=str(enriched) if enriched else None)


@cli.command()
def simulate(
    spec: Optional[Path] = typer.Option(None, "--spec", help="Simulation spec YAML."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed of a random spec."),
    max_platforms: int = typer.Option(50, "--max-platforms", help="Upper bound on platforms of a random spec."),
    out: Optional[Path] = typer.Option(None, "--out", help="Destination directory."),
    verify: bool = typer.Option(False, "--verify", help="Check the in-memory round trip against the truth."),
) -> None:
    """Write a synthetic scene set with its ground truth."""

    result = _call(
        "simulate",
        spec_path=str(spec) if spec else None,
        seed=seed,
        max_platforms=max_platforms,
        out_dir=str(out) if out else None,
        verify=verify,
    )
    diffs = result.data.get("diffs") or []
    for diff in diffs:
        console.print(f"  [yellow]•[/yellow] {diff}")
    if diffs:
        raise typer.Exit(code=EXIT_STAGE)


@cli.command()
def run() -> None:
    """Run composite → chip → ingest → consolidate → link → enrich → stats → export."""

    config = get_config()
    console.print(Panel(f"Pipeline run into [cyan]{config.output_dir}[/cyan] with {config.workers} worker(s)", expand=False))
    try:
        report = run_pipeline(config)
    except OpdError as exc:
        _fail(exc)
        return
    for name, result in report.results.items():
        console.print(f"[green]✓[/green] [bold]{name}[/bold]: {result.output}")
    console.print(f"Manifest: [cyan]{report.manifest_path}[/cyan]")


@cli.command(name="config:check")
def check_config() -> None:
    """Validate and display the effective configuration."""

    cfg: RunConfig = get_config()
    table = Table(title="opdpipe Effective Configuration")
    table.add_column("Setting", style="cyan", no_wrap=True)
    table.add_column("Value", style="magenta")
    defaults = RunConfig()
    for name, value in cfg.to_dict().items():
        marker = "" if value == getattr(defaults, name) else " [yellow](overridden)[/yellow]"
        table.add_row(name, ("[dim]unset[/dim]" if value is None else str(value)) + marker)
    console.print(table)


@cli.command(name="stages:list")
def list_stages() -> None:
    """List the registered pipeline stages."""

    registry = StageRegistry.from_default_spec()
    for info in registry.described_stages():
        console.print(f"  - [bold green]{info['name']}[/bold green]: {info['description']}")


__all__ = ["cli"]
