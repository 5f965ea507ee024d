"""Command-line entry points: eval, report, serve.

Exit codes: 0 success, 1 configuration error, 2 partial failures.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .dataset import ManifestError
from .harness import ConfigError, RunConfig, RunRecord, emit_report, evaluate
from .promptgen import PointSamplingConfig
from .strategies import FilterConfig, StrategyParams


@click.group()
def main():
    """Text-conditioned zero-shot segmentation engine."""


@main.command("eval")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--backend", required=True, help="mock:DIR or remote:URL")
@click.option("--strategies", default="s1", show_default=True, help="comma-separated, e.g. s1,s2,s4")
@click.option("--augment", is_flag=True, help="use manifest synonyms as prompts")
@click.option("--baseline", is_flag=True, help="also run the random-point baseline")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--parallelism", default=1, show_default=True, type=int)
@click.option("--point-threshold", default=0.8, show_default=True, type=float)
@click.option("--max-points", default=5, show_default=True, type=int)
@click.option("--box-threshold", default=0.35, show_default=True, type=float)
@click.option("--text-threshold", default=0.25, show_default=True, type=float)
@click.option("--grid-n", default=16, show_default=True, type=int)
def eval_cmd(
    manifest_path,
    backend,
    strategies,
    augment,
    baseline,
    seed,
    out_dir,
    parallelism,
    point_threshold,
    max_points,
    box_threshold,
    text_threshold,
    grid_n,
):
    """Evaluate strategies over a dataset and write the run record."""
    try:
        params = StrategyParams(
            box_threshold=box_threshold,
            text_threshold=text_threshold,
            point_sampling=PointSamplingConfig(point_threshold, max_points),
            grid_n=grid_n,
            filter=FilterConfig(),
        )
        config = RunConfig(
            manifest=Path(manifest_path),
            backend=backend,
            strategies=tuple(s.strip() for s in strategies.split(",") if s.strip()),
            augment=augment,
            baseline=baseline,
            seed=seed,
            params=params,
            out_dir=Path(out_dir),
            parallelism=parallelism,
        )
    except (ConfigError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)

    try:
        record = evaluate(config)
    except (ConfigError, ManifestError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "record.json").write_bytes(record.to_bytes())
    (out / "report.csv").write_bytes(emit_report(record, "csv"))
    (out / "report.md").write_bytes(emit_report(record, "markdown"))
    click.echo(emit_report(record, "markdown").decode("utf-8"))
    if record.failures:
        for line in record.failures:
            click.echo(f"FAILED {line}", err=True)
        sys.exit(2)


@main.command("report")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
@click.option(
    "--format", "fmt", default="md", show_default=True, type=click.Choice(["md", "markdown", "csv", "json"])
)
def report_cmd(run_dir, fmt):
    """Re-render the report for a finished run."""
    record_path = Path(run_dir) / "record.json"
    if not record_path.exists():
        click.echo(f"config error: no record.json in {run_dir}", err=True)
        sys.exit(1)
    record = RunRecord.from_json(json.loads(record_path.read_text()))
    sys.stdout.buffer.write(emit_report(record, fmt))


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--addr", default="127.0.0.1:8750", show_default=True)
def serve_cmd(config_path, addr):
    """Serve the workbench API.

    Config JSON: {"manifest": PATH, "backend": "mock:DIR"|"remote:URL"}.
    """
    import uvicorn

    from .service import create_app

    try:
        cfg = json.loads(Path(config_path).read_text())
        manifest = (Path(config_path).parent / cfg["manifest"]).resolve()
        app = create_app(manifest, cfg["backend"])
        host, _, port = addr.rpartition(":")
    except (KeyError, ValueError, ManifestError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")


if __name__ == "__main__":
    main()
