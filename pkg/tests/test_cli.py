"""End-to-end CLI behavior: subcommands, exit codes, file outputs."""

import csv
import json

import numpy as np
import pytest

from satsharp.cli import main
from satsharp.fleet import CSV_HEADER, record_to_row, FleetRecord
from satsharp.imageio import write_raster
from satsharp.kernel import delta, gaussian, load_kernel_text
from satsharp.raster import synthesize
from satsharp.score import ProductType, QualityClass
from tests.util import cartoon_scene

import datetime


def _write_scene(path, seed, kernel=None, noise=0.0, size=64):
    truth = cartoon_scene(size, seed)
    observed = synthesize(truth, kernel if kernel is not None else delta(5), noise, seed + 1)
    write_raster(path, observed, bit_depth=16)
    return observed


def test_score_sharp_scene(tmp_path, capsys):
    img = tmp_path / "scene.pgm"
    _write_scene(img, 70)
    kernel_txt = tmp_path / "kernel.txt"
    kernel_png = tmp_path / "kernel.png"
    code = main(["score", str(img), "--satellite-id", "sat7", "--acquired", "2021-05-04",
                 "--kernel-out", str(kernel_txt), "--kernel-png", str(kernel_png)])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["class"] == "sharp"
    assert out["image_id"] == "scene"
    assert out["satellite_id"] == "sat7"
    assert out["product"] == "ortho"
    # well above the sharp cut; exact recovery quality is covered elsewhere
    assert out["score"] > 0.1
    assert kernel_txt.is_file() and kernel_png.is_file()
    saved = load_kernel_text(kernel_txt)
    assert np.asarray(saved.weights).shape == np.asarray(out["kernel"]).shape


def test_score_discard_exits_two(tmp_path, capsys):
    img = tmp_path / "blurry.pgm"
    _write_scene(img, 71, kernel=gaussian(2.0, 11), noise=0.004, size=96)
    cfg = tmp_path / "strict.cfg"
    cfg.write_text("ortho_discard = 0.5\northo_sharp = 0.9\n")
    code = main(["score", str(img), "--config", str(cfg)])
    out = json.loads(capsys.readouterr().out)
    assert code == 2
    assert out["class"] == "discard"
    assert out["score"] < 0.5


def test_score_missing_file_exits_one(tmp_path, capsys):
    code = main(["score", str(tmp_path / "absent.pgm")])
    captured = capsys.readouterr()
    assert code == 1
    assert "error:" in captured.err


def test_score_flat_image_exits_one(tmp_path, capsys):
    img = tmp_path / "flat.pgm"
    from satsharp.raster import Raster
    write_raster(img, Raster(np.full((64, 64), 0.5)))
    code = main(["score", str(img)])
    captured = capsys.readouterr()
    assert code == 1
    assert "insufficient structure" in captured.err


def test_score_crop_flag(tmp_path, capsys):
    img = tmp_path / "wide.pgm"
    _write_scene(img, 72, size=96)
    code = main(["score", str(img), "--crop", "0,0,64,64"])
    assert code == 0
    json.loads(capsys.readouterr().out)
    code = main(["score", str(img), "--crop", "0,0,200,200"])
    captured = capsys.readouterr()
    assert code == 1
    assert "error:" in captured.err


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["polish"])
    assert exc.value.code == 1
    assert "error:" in capsys.readouterr().err


def test_deblur_improves_score(tmp_path, capsys):
    img = tmp_path / "blurred.pgm"
    _write_scene(img, 73, kernel=gaussian(1.5, 11), noise=0.002, size=96)
    out_img = tmp_path / "restored.pgm"
    code = main(["deblur", str(img), str(out_img)])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out_img.is_file()
    assert payload["score_after"] > payload["score_before"]
    assert payload["output"] == str(out_img)


def test_deblur_discard_refused_without_force(tmp_path, capsys):
    img = tmp_path / "hopeless.pgm"
    _write_scene(img, 74, kernel=gaussian(2.0, 11), noise=0.004, size=96)
    cfg = tmp_path / "strict.cfg"
    cfg.write_text("ortho_discard = 0.5\northo_sharp = 0.9\n")
    out_img = tmp_path / "restored.pgm"
    code = main(["deblur", str(img), str(out_img), "--config", str(cfg)])
    captured = capsys.readouterr()
    assert code == 2
    assert not out_img.exists()
    assert "discard" in captured.err

    code = main(["deblur", str(img), str(out_img), "--config", str(cfg), "--force"])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out_img.is_file()
    assert payload["class_before"] == "discard"


def test_deblur_bit_depth_eight(tmp_path, capsys):
    img = tmp_path / "in.pgm"
    _write_scene(img, 75, kernel=gaussian(1.2, 9), noise=0.002)
    out_img = tmp_path / "out.pgm"
    code = main(["deblur", str(img), str(out_img), "--bit-depth", "8"])
    capsys.readouterr()
    assert code == 0
    assert out_img.read_bytes().startswith(b"P5\n64 64\n255\n")


def _write_manifest(tmp_path, entries):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps(entries))
    return manifest


def _manifest_entries(tmp_path, count, start_seed=80):
    entries = []
    for i in range(count):
        img = tmp_path / f"img{i:02d}.pgm"
        _write_scene(img, start_seed + i, kernel=gaussian(1.0 + 0.2 * i, 9), noise=0.002)
        entries.append({
            "path": str(img),
            "satellite_id": f"sat{i % 3}",
            "product": "ortho" if i % 2 == 0 else "basic",
            "acquired": f"2021-07-{i + 1:02d}",
        })
    return entries


def test_batch_rows_follow_manifest_order(tmp_path, capsys):
    entries = _manifest_entries(tmp_path, 3)
    manifest = _write_manifest(tmp_path, entries)
    out_csv = tmp_path / "records.csv"
    code = main(["batch", str(manifest), str(out_csv)])
    assert code == 0
    assert "scored 3/3" in capsys.readouterr().out
    rows = list(csv.reader(out_csv.read_text().splitlines()))
    assert rows[0] == CSV_HEADER
    assert [r[0] for r in rows[1:]] == ["img00", "img01", "img02"]
    assert all(r[4] != "error" for r in rows[1:])


def test_batch_tolerates_corrupt_files(tmp_path, capsys):
    entries = _manifest_entries(tmp_path, 2)
    bad = tmp_path / "broken.pgm"
    bad.write_bytes(b"P5\n64 64\n255\nshort")
    entries.insert(1, {"path": str(bad), "satellite_id": "satX",
                       "product": "ortho", "acquired": "2021-07-30"})
    manifest = _write_manifest(tmp_path, entries)
    out_csv = tmp_path / "records.csv"
    code = main(["batch", str(manifest), str(out_csv)])
    assert code == 0
    assert "scored 2/3" in capsys.readouterr().out
    rows = list(csv.reader(out_csv.read_text().splitlines()))[1:]
    assert [r[0] for r in rows] == ["img00", "broken", "img01"]
    assert rows[1][4] == "error"
    assert rows[0][4] != "error" and rows[2][4] != "error"


def test_batch_parallelism_matches_serial(tmp_path, capsys):
    entries = _manifest_entries(tmp_path, 4)
    manifest = _write_manifest(tmp_path, entries)
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    assert main(["batch", str(manifest), str(serial), "--parallelism", "1"]) == 0
    assert main(["batch", str(manifest), str(parallel), "--parallelism", "2"]) == 0
    capsys.readouterr()
    assert serial.read_bytes() == parallel.read_bytes()


def test_batch_rejects_bad_manifest(tmp_path, capsys):
    manifest = tmp_path / "manifest.json"
    manifest.write_text("{}")
    assert main(["batch", str(manifest), str(tmp_path / "out.csv")]) == 1
    manifest.write_text(json.dumps([{"path": "a.pgm", "satellite_id": "s"}]))
    assert main(["batch", str(manifest), str(tmp_path / "out.csv")]) == 1
    img = tmp_path / "img.pgm"
    entry = {"path": str(img), "satellite_id": "s", "product": "ortho",
             "acquired": "2021-01-01"}
    manifest.write_text(json.dumps([entry, entry]))
    assert main(["batch", str(manifest), str(tmp_path / "out.csv")]) == 1
    capsys.readouterr()


def _fleet_csv(tmp_path, spec):
    """Write a records CSV; spec maps satellite id -> (mean, count)."""
    rng = np.random.default_rng(90)
    path = tmp_path / "fleet.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        i = 0
        for sat, (mean, count) in spec.items():
            for s in rng.normal(mean, 0.001, size=count):
                rec = FleetRecord(
                    image_id=f"img{i:04d}", satellite_id=sat,
                    product=ProductType.ORTHO, score=float(np.clip(s, 0.024, 0.06)),
                    quality=QualityClass.DEBLURRABLE,
                    acquired=datetime.date(2021, 8, 1))
                writer.writerow(record_to_row(rec))
                i += 1
    return path


def test_report_separated_fleet(tmp_path, capsys):
    records = _fleet_csv(tmp_path, {"a": (0.028, 60), "b": (0.030, 60), "c": (0.032, 60)})
    out_json = tmp_path / "summary.json"
    code = main(["report", str(records), str(out_json)])
    assert code == 0
    capsys.readouterr()
    payload = json.loads(out_json.read_text())
    ortho = payload["ortho"]
    assert [s["satellite_id"] for s in ortho["per_satellite"]] == ["a", "b", "c"]
    assert all(s["count"] == 60 for s in ortho["per_satellite"])
    assert ortho["anova"]["df_between"] == 2
    assert ortho["anova"]["df_within"] == 177
    assert ortho["anova"]["p_value"] < 0.001
    hist_csv = tmp_path / "summary.hist.ortho.csv"
    assert hist_csv.is_file()
    rows = list(csv.reader(hist_csv.read_text().splitlines()))
    assert rows[0] == ["edge", "count"]
    assert sum(int(r[1]) for r in rows[1:]) == 180
    # re-serializing the parsed payload reproduces the file byte for byte
    assert json.dumps(payload, indent=2, sort_keys=True) + "\n" == out_json.read_text()


def test_report_single_satellite_has_no_anova(tmp_path, capsys):
    records = _fleet_csv(tmp_path, {"solo": (0.03, 60)})
    out_json = tmp_path / "summary.json"
    assert main(["report", str(records), str(out_json)]) == 0
    capsys.readouterr()
    payload = json.loads(out_json.read_text())
    assert payload["ortho"]["anova"] is None
    assert len(payload["ortho"]["per_satellite"]) == 1


def test_report_rejects_undersampled_fleet(tmp_path, capsys):
    records = _fleet_csv(tmp_path, {"a": (0.03, 10), "b": (0.031, 10)})
    code = main(["report", str(records), str(tmp_path / "summary.json")])
    captured = capsys.readouterr()
    assert code == 1
    assert "no satellite passing min_samples" in captured.err


def test_report_min_samples_override(tmp_path, capsys):
    records = _fleet_csv(tmp_path, {"a": (0.03, 10), "b": (0.031, 10)})
    cfg = tmp_path / "loose.cfg"
    cfg.write_text("min_samples = 5\n")
    out_json = tmp_path / "summary.json"
    assert main(["report", str(records), str(out_json), "--config", str(cfg)]) == 0
    capsys.readouterr()
    payload = json.loads(out_json.read_text())
    assert len(payload["ortho"]["per_satellite"]) == 2


def test_report_empty_records_exits_one(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(CSV_HEADER) + "\n")
    code = main(["report", str(path), str(tmp_path / "summary.json")])
    captured = capsys.readouterr()
    assert code == 1
    assert "no scored rows" in captured.err
