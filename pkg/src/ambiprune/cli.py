"""Command-line interface: score, report, prune, eval, serve."""

from __future__ import annotations

import json
import logging
import os
import socket
import sys
from pathlib import Path

import click

from . import reporting
from .ambiguity import (
    DEFAULT_BINS,
    apply_score_records,
    histogram,
    score_dataset,
    score_summary,
    top_ambiguous,
)
from .pruning import prune
from .errors import AmbiPruneError, ParseError
from .evaluation import (
    BUILTIN_SUBSETS,
    DEFAULT_CONFIDENCE_THRESHOLD,
    DEFAULT_IOU_THRESHOLD,
    evaluate,
)
from .model import load_dataset, load_detections, save_dataset

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _configure_logging() -> None:
    level = os.environ.get("AMBIPRUNE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        stream=sys.stderr)


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(path: str, format: str):
    try:
        return load_dataset(path, format=format)
    except ParseError as exc:
        _fail(str(exc), EXIT_IO if "no such file" in str(exc) else EXIT_VALIDATION)
    except AmbiPruneError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except OSError as exc:
        _fail(str(exc), EXIT_IO)


def _write_json(payload, path: str | Path) -> None:
    try:
        Path(path).write_text(
            json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8")
    except OSError as exc:
        _fail(str(exc), EXIT_IO)


def _read_score_records(path: str) -> list[dict]:
    records = []
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    _fail(f"{path}:{lineno}: {exc.msg}", EXIT_VALIDATION)
    except OSError as exc:
        _fail(str(exc), EXIT_IO)
    return records


input_option = click.option("--input", "input_path", required=True,
                            help="Dataset file (native) or directory (ecp).")
format_option = click.option("--format", "format_", default="native",
                             type=click.Choice(["native", "ecp"]),
                             show_default=True)


@click.group()
def main() -> None:
    """Annotation-ambiguity scoring, pruning and evaluation toolkit."""
    _configure_logging()


@main.command("score")
@input_option
@format_option
@click.option("--output", required=True, help="Path for the scored dataset.")
@click.option("--scores", "scores_path", default=None,
              help="JSON-lines file with precomputed scores or answer counts.")
@click.option("--overwrite", is_flag=True,
              help="Recompute scores even where one is already present.")
def cmd_score(input_path: str, format_: str, output: str,
              scores_path: str | None, overwrite: bool) -> None:
    """Compute ambiguity scores for every instance."""
    dataset = _load(input_path, format_)
    try:
        if scores_path:
            dataset = apply_score_records(
                dataset, _read_score_records(scores_path))
        scored = score_dataset(dataset, overwrite=overwrite)
        save_dataset(scored, output)
    except AmbiPruneError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except OSError as exc:
        _fail(str(exc), EXIT_IO)
    summary = score_summary(scored)
    quantiles = " ".join(f"{name}={value:.4f}"
                         for name, value in summary["quantiles"].items())
    click.echo(f"scored {summary['scored']} instances  "
               f"mean={summary['mean']:.4f}  {quantiles}")


@main.command("report")
@input_option
@format_option
@click.option("--output", required=True,
              help="Directory for histogram.json/.csv/.svg.")
@click.option("--bins", default=DEFAULT_BINS,
              show_default=True, type=int)
@click.option("--top", "top_k", default=10, show_default=True, type=int,
              help="How many most-ambiguous instance ids to list.")
def cmd_report(input_path: str, format_: str, output: str, bins: int,
               top_k: int) -> None:
    """Write the ambiguity histogram and tag-distribution report."""
    dataset = _load(input_path, format_)
    try:
        hist = histogram(dataset, bins)
    except AmbiPruneError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    out_dir = Path(output)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(hist.to_dict(), out_dir / "histogram.json")
        reporting.write_histogram_csv(hist, out_dir / "histogram.csv")
        reporting.write_histogram_svg(hist, out_dir / "histogram.svg")
    except OSError as exc:
        _fail(str(exc), EXIT_IO)

    for family in ("occlusion", "truncation"):
        for level_name, index in hist.to_dict()["peak_bins"][family].items():
            low, high = hist.bin_edges[index], hist.bin_edges[index + 1]
            click.echo(f"peak bin {family} {level_name}: "
                       f"[{low:.3f}, {high:.3f})")
    click.echo(f"top {top_k} most ambiguous instances:")
    for instance_id, score in top_ambiguous(dataset, top_k):
        click.echo(f"  {instance_id}  alpha={score:.4f}")


@main.command("prune")
@input_option
@format_option
@click.option("--output", required=True, help="Path for the pruned dataset.")
@click.option("--threshold", required=True, type=float)
@click.option("--mode", default="ignore", show_default=True,
              type=click.Choice(["delete", "ignore"]))
@click.option("--report", "report_path", default=None,
              help="Path for the prune report JSON "
                   "(default: <output>.report.json).")
def cmd_prune(input_path: str, format_: str, output: str, threshold: float,
              mode: str, report_path: str | None) -> None:
    """Remove or ignore-flag instances at or above an ambiguity threshold."""
    dataset = _load(input_path, format_)
    try:
        pruned, report = prune(dataset, threshold, mode)
        save_dataset(pruned, output)
    except AmbiPruneError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except OSError as exc:
        _fail(str(exc), EXIT_IO)
    _write_json(report.to_dict(), report_path or f"{output}.report.json")
    click.echo(f"removed {report.removed_count} of "
               f"{report.removed_count + report.kept_count} instances "
               f"(mode={mode}, threshold={threshold:g})")
    for tag in report.overpruned_tags:
        click.echo(f"warning: over-pruned tag level {tag}", err=True)


@main.command("eval")
@input_option
@format_option
@click.option("--detections", "detections_path", required=True,
              help="Detections JSON-lines file.")
@click.option("--output", required=True, help="Path for the EvalResult JSON.")
@click.option("--subset", default="all", show_default=True,
              type=click.Choice(sorted(BUILTIN_SUBSETS)))
@click.option("--iou", default=DEFAULT_IOU_THRESHOLD, show_default=True,
              type=float)
@click.option("--conf", default=DEFAULT_CONFIDENCE_THRESHOLD,
              show_default=True, type=float)
@click.option("--identity", default="pedestrian", show_default=True)
@click.option("--jobs", default=1, show_default=True, type=int)
def cmd_eval(input_path: str, format_: str, detections_path: str, output: str,
             subset: str, iou: float, conf: float, identity: str,
             jobs: int) -> None:
    """Evaluate detector output on one evaluation subset."""
    dataset = _load(input_path, format_)
    try:
        detections = load_detections(detections_path)
    except AmbiPruneError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except OSError as exc:
        _fail(str(exc), EXIT_IO)
    try:
        result = evaluate(dataset, detections, subset=subset,
                          iou_threshold=iou, confidence_threshold=conf,
                          identity=identity, jobs=jobs)
    except AmbiPruneError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    _write_json(result.to_dict(), output)
    floor = " (floor)" if result.lamr_floor else ""
    click.echo(f"LAMR={result.lamr:.6g}{floor} P={result.precision:.4f} "
               f"R={result.recall:.4f} F1={result.f1:.4f}")


@main.command("serve")
@input_option
@format_option
@click.option("--detections", "detections_path", default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--cors", "cors_origin", default=None,
              help="Allowed UI origin for CORS.")
def cmd_serve(input_path: str, format_: str, detections_path: str | None,
              host: str, port: int, cors_origin: str | None) -> None:
    """Serve the what-if HTTP API until interrupted."""
    import uvicorn

    from .service import create_app

    dataset = _load(input_path, format_)
    detections = None
    if detections_path:
        try:
            detections = load_detections(detections_path)
        except AmbiPruneError as exc:
            _fail(str(exc), EXIT_VALIDATION)
        except OSError as exc:
            _fail(str(exc), EXIT_IO)
    app = create_app(dataset, detections, cors_origin=cors_origin)
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))
    except OSError as exc:
        _fail(f"cannot bind {host}:{port}: {exc}", EXIT_IO)
    bound_host, bound_port = sock.getsockname()[:2]
    click.echo(f"serving on http://{bound_host}:{bound_port}")
    config = uvicorn.Config(app, log_level="warning")
    uvicorn.Server(config).run(sockets=[sock])


if __name__ == "__main__":
    main()
