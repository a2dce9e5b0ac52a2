"""Command-line frontend: score, deblur, batch, and report subcommands.

Exit codes are a stable contract: 0 success, 1 operational error (bad
inputs, unreadable files, usage mistakes), 2 quality rejection (an image
classified Discard).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime as _dt
import json
import sys
from pathlib import Path

from .blind import estimate_kernel
from .config import RunConfig, load_config, parse_crop
from .errors import SatsharpError
from .fleet import (
    CSV_HEADER,
    FleetRecord,
    aggregate,
    anova_f,
    anova_to_dict,
    filter_valid,
    read_records_csv,
    record_to_row,
    summary_to_dict,
)
from .imageio import read_raster, write_raster
from .kernel import render_kernel_png, save_kernel_text
from .raster import Raster, crop as crop_raster
from .score import ProductType, QualityClass, SharpnessReport, classify, sharpness
from .tv import deblur

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REJECT = 2


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures reported as operational errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _load_run_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    if getattr(args, "parallelism", None) is not None:
        cfg = RunConfig(
            estimation=cfg.estimation, deconv=cfg.deconv, thresholds=cfg.thresholds,
            parallelism=args.parallelism, crop=cfg.crop, min_samples=cfg.min_samples)
    if getattr(args, "crop", None):
        cfg = RunConfig(
            estimation=cfg.estimation, deconv=cfg.deconv, thresholds=cfg.thresholds,
            parallelism=cfg.parallelism, crop=parse_crop(args.crop), min_samples=cfg.min_samples)
    return cfg


def _prepare(path: str, cfg: RunConfig) -> Raster:
    raster = read_raster(path)
    if cfg.crop is not None:
        x, y, w, h = cfg.crop
        raster = crop_raster(raster, x, y, w, h)
    return raster


def _score_one(path: str, satellite_id: str, product: ProductType,
               acquired: _dt.date, cfg: RunConfig) -> SharpnessReport:
    raster = _prepare(path, cfg)
    result = estimate_kernel(raster, cfg.estimation)
    s = sharpness(result.kernel)
    quality = classify(s, product, cfg.thresholds)
    return SharpnessReport(
        image_id=Path(path).stem,
        satellite_id=satellite_id,
        product=product,
        score=s,
        quality=quality,
        acquired=acquired,
        kernel=result.kernel,
        used_fallback=result.used_fallback,
    )


def _emit_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_score(args) -> int:
    cfg = _load_run_config(args)
    report = _score_one(
        args.image, args.satellite_id, ProductType.parse(args.product),
        _dt.date.fromisoformat(args.acquired), cfg)
    if args.kernel_out:
        save_kernel_text(report.kernel, args.kernel_out)
    if args.kernel_png:
        render_kernel_png(report.kernel, args.kernel_png)
    _emit_json(report.to_dict())
    return EXIT_REJECT if report.quality is QualityClass.DISCARD else EXIT_OK


def cmd_deblur(args) -> int:
    cfg = _load_run_config(args)
    product = ProductType.parse(args.product)
    acquired = _dt.date.fromisoformat(args.acquired)

    raster = _prepare(args.image, cfg)
    before = estimate_kernel(raster, cfg.estimation)
    s_before = sharpness(before.kernel)
    class_before = classify(s_before, product, cfg.thresholds)
    if class_before is QualityClass.DISCARD and not args.force:
        print(
            f"error: input classifies discard (score {s_before:.4f}); "
            "pass --force to deblur anyway", file=sys.stderr)
        return EXIT_REJECT

    restored = deblur(raster, before.kernel, cfg.deconv)
    after = estimate_kernel(restored, cfg.estimation)
    s_after = sharpness(after.kernel)
    write_raster(args.output, restored, bit_depth=args.bit_depth)
    if args.kernel_out:
        save_kernel_text(before.kernel, args.kernel_out)
    if args.kernel_png:
        render_kernel_png(before.kernel, args.kernel_png)
    _emit_json({
        "input": args.image,
        "output": args.output,
        "score_before": s_before,
        "class_before": class_before.label,
        "score_after": s_after,
        "class_after": classify(s_after, product, cfg.thresholds).label,
        "used_fallback": before.used_fallback,
    })
    return EXIT_OK


def _load_manifest(path: str) -> list[dict]:
    try:
        entries = json.loads(Path(path).read_text())
    except OSError as e:
        raise ValueError(f"cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ValueError(f"manifest {path} is not valid JSON: {e}") from e
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"manifest {path} must be a non-empty JSON array")
    seen = set()
    for i, entry in enumerate(entries):
        for field in ("path", "satellite_id", "product", "acquired"):
            if field not in entry:
                raise ValueError(f"manifest entry {i} missing field {field!r}")
        ProductType.parse(entry["product"])
        _dt.date.fromisoformat(entry["acquired"])
        if entry["path"] in seen:
            raise ValueError(f"manifest entry {i} duplicates path {entry['path']!r}")
        seen.add(entry["path"])
    return entries


def _batch_row(task: tuple[int, dict, RunConfig]) -> tuple[int, list[str]]:
    """Score one manifest entry; failures become class=error rows."""
    index, entry, cfg = task
    image_id = Path(entry["path"]).stem
    try:
        report = _score_one(
            entry["path"], entry["satellite_id"], ProductType.parse(entry["product"]),
            _dt.date.fromisoformat(entry["acquired"]), cfg)
        row = record_to_row(FleetRecord(
            image_id=report.image_id,
            satellite_id=report.satellite_id,
            product=report.product,
            score=report.score,
            quality=report.quality,
            acquired=report.acquired,
        ))
    except Exception:
        row = [image_id, entry["satellite_id"], entry["product"], "", "error", entry["acquired"]]
    return index, row


def cmd_batch(args) -> int:
    cfg = _load_run_config(args)
    entries = _load_manifest(args.manifest)
    tasks = [(i, entry, cfg) for i, entry in enumerate(entries)]

    if cfg.parallelism == 1:
        results = [_batch_row(t) for t in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            results = list(pool.map(_batch_row, tasks))
    results.sort(key=lambda pair: pair[0])

    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for _, row in results:
            writer.writerow(row)
    errors = sum(1 for _, row in results if row[4] == "error")
    print(f"scored {len(results) - errors}/{len(results)} images -> {args.output}")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _load_run_config(args)
    records = read_records_csv(args.records)

    report: dict = {}
    hist_base = Path(args.histogram_csv) if args.histogram_csv else Path(args.output).with_suffix("")
    wrote_any = False
    for product in ProductType:
        subset = [r for r in records if r.product is product]
        if not subset:
            continue
        valid = filter_valid(subset, cfg.thresholds)
        summary = aggregate(valid, cfg.min_samples)
        kept_ids = {s.satellite_id for s in summary.per_satellite}
        groups = {}
        for r in valid:
            if r.satellite_id in kept_ids:
                groups.setdefault(r.satellite_id, []).append(r.score)
        try:
            anova = anova_f(list(groups.values()))
        except ValueError:
            anova = None
        payload = summary_to_dict(summary)
        payload["anova"] = anova_to_dict(anova)
        report[product.value] = payload
        for prod_key, hist in summary.histograms.items():
            hist_path = hist_base.parent / f"{hist_base.name}.hist.{prod_key}.csv"
            with open(hist_path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["edge", "count"])
                for edge, count in zip(hist.edges[:-1], hist.counts):
                    writer.writerow([repr(float(edge)), count])
            wrote_any = True
    if not report:
        raise ValueError("records CSV holds no scored rows to report on")

    Path(args.output).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    note = " (+histograms)" if wrote_any else ""
    print(f"report for {len(records)} records -> {args.output}{note}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, parallelism: bool = False) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--crop", help="crop window x,y,w,h applied before estimation")
    if parallelism:
        p.add_argument("--parallelism", type=int, help="worker process count")


def _add_metadata(p: argparse.ArgumentParser) -> None:
    p.add_argument("--product", default="ortho", choices=["basic", "ortho"],
                   help="product type for threshold selection (default: ortho)")
    p.add_argument("--satellite-id", default="unknown", help="satellite identifier")
    p.add_argument("--acquired", default="1970-01-01", help="acquisition date, ISO-8601")
    p.add_argument("--kernel-out", help="write the estimated kernel as a text grid")
    p.add_argument("--kernel-png", help="write a 32x32 PNG rendering of the kernel")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="satsharp",
        description="Blind sharpness scoring, deblurring, and fleet statistics for satellite imagery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="estimate a blur kernel and print a sharpness report")
    p_score.add_argument("image", help="input image (png, tif, tiff, pgm)")
    _add_metadata(p_score)
    _add_common(p_score)
    p_score.set_defaults(func=cmd_score)

    p_deblur = sub.add_parser("deblur", help="blind-deblur an image and report before/after scores")
    p_deblur.add_argument("image", help="input image")
    p_deblur.add_argument("output", help="output image path")
    p_deblur.add_argument("--force", action="store_true",
                          help="deblur even when the input classifies discard")
    p_deblur.add_argument("--bit-depth", type=int, default=16, choices=[8, 16])
    _add_metadata(p_deblur)
    _add_common(p_deblur)
    p_deblur.set_defaults(func=cmd_deblur)

    p_batch = sub.add_parser("batch", help="score every manifest entry into a records CSV")
    p_batch.add_argument("manifest", help="JSON array of {path, satellite_id, product, acquired}")
    p_batch.add_argument("output", help="output records CSV")
    _add_common(p_batch, parallelism=True)
    p_batch.set_defaults(func=cmd_batch)

    p_report = sub.add_parser("report", help="aggregate a records CSV into fleet statistics")
    p_report.add_argument("records", help="records CSV from the batch subcommand")
    p_report.add_argument("output", help="output JSON path")
    p_report.add_argument("--histogram-csv",
                          help="basename for histogram CSVs (default: derived from the JSON path)")
    _add_common(p_report)
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SatsharpError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
