import json

from depthbench.cli import main


def test_gen_evaluate_rank_flow(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["gen-fixtures", "--out", str(data), "--frames", "4",
                 "--width", "32", "--height", "24", "--seed", "3"]) == 0

    report_a = tmp_path / "a.json"
    assert main(["evaluate", "--manifest", str(data / "manifest.json"),
                 "--submission", str(data / "submission"),
                 "--align", "lse", "--out", str(report_a)]) == 0
    doc = json.loads(report_a.read_text())
    assert doc["team"] == "reference"
    assert doc["overall"]["means"]["f_score"] == 1.0
    assert doc["alignment_method"] == "lse"

    # second team: same predictions under median alignment
    report_b = tmp_path / "b.json"
    assert main(["evaluate", "--manifest", str(data / "manifest.json"),
                 "--submission", str(data / "submission"),
                 "--align", "median", "--out", str(report_b)]) == 0
    doc_b = json.loads(report_b.read_text())
    doc_b["team"] = "runner-up"
    report_b.write_text(json.dumps(doc_b))

    assert main(["rank", str(report_a), str(report_b), "--format", "markdown"]) == 0
    out = capsys.readouterr().out
    assert "| reference |" in out and "| runner-up |" in out


def test_csv_and_markdown_outputs(tmp_path):
    data = tmp_path / "data"
    main(["gen-fixtures", "--out", str(data), "--frames", "2",
          "--width", "32", "--height", "24"])
    out_csv = tmp_path / "r.csv"
    assert main(["evaluate", "--manifest", str(data / "manifest.json"),
                 "--submission", str(data / "submission"),
                 "--format", "csv", "--out", str(out_csv)]) == 0
    assert out_csv.read_text().startswith("scope,id,category")


def test_gen_fixtures_spec_flag(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"frames": 3, "width": 40, "height": 30,
                                "pred_kind": "disparity", "scale": 2.0,
                                "shift": 0.1}))
    data = tmp_path / "data"
    assert main(["gen-fixtures", "--out", str(data), "--spec", str(spec)]) == 0
    doc = json.loads((data / "manifest.json").read_text())
    assert len(doc["frames"]) == 3
    assert doc["frames"][0]["width"] == 40
    meta = json.loads((data / "submission" / "submission.json").read_text())
    assert meta["prediction_kind"] == "disparity"
    # explicit flags win over the spec document
    data2 = tmp_path / "data2"
    assert main(["gen-fixtures", "--out", str(data2), "--spec", str(spec),
                 "--frames", "5"]) == 0
    assert len(json.loads((data2 / "manifest.json").read_text())["frames"]) == 5
    # inline JSON works too; unknown keys are rejected
    assert main(["gen-fixtures", "--out", str(tmp_path / "d3"),
                 "--spec", '{"frames": 2}']) == 0
    assert main(["gen-fixtures", "--out", str(tmp_path / "d4"),
                 "--spec", '{"resolution": 99}']) == 1


def test_csv_coverage_column(tmp_path):
    data = tmp_path / "data"
    main(["gen-fixtures", "--out", str(data), "--frames", "2",
          "--width", "32", "--height", "24"])
    out_csv = tmp_path / "r.csv"
    main(["evaluate", "--manifest", str(data / "manifest.json"),
          "--submission", str(data / "submission"),
          "--format", "csv", "--out", str(out_csv)])
    header = out_csv.read_text().splitlines()[0]
    assert header.endswith("valid_pixel_count,coverage")


def test_config_file_flag(tmp_path):
    data = tmp_path / "data"
    main(["gen-fixtures", "--out", str(data), "--frames", "2",
          "--width", "32", "--height", "24"])
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"fscore_tau": 0.25}))
    report = tmp_path / "r.json"
    assert main(["evaluate", "--manifest", str(data / "manifest.json"),
                 "--submission", str(data / "submission"),
                 "--config", str(cfg_path), "--out", str(report)]) == 0
    assert json.loads(report.read_text())["config"]["fscore_tau"] == 0.25


def test_validation_error_exit_code(tmp_path, capsys):
    data = tmp_path / "data"
    main(["gen-fixtures", "--out", str(data), "--frames", "2",
          "--width", "32", "--height", "24"])
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text(json.dumps({"fscore_tau": 0.0}))
    code = main(["evaluate", "--manifest", str(data / "manifest.json"),
                 "--submission", str(data / "submission"),
                 "--config", str(bad_cfg)])
    assert code == 1
    assert "fscore_tau" in capsys.readouterr().err


def test_io_error_exit_code(tmp_path):
    code = main(["evaluate", "--manifest", str(tmp_path / "missing.json"),
                 "--submission", str(tmp_path / "nope")])
    assert code == 2
    code = main(["rank", str(tmp_path / "missing-report.json")])
    assert code == 2


def test_dump_edges_writes_1bit_pngs(tmp_path):
    from PIL import Image
    data = tmp_path / "data"
    main(["gen-fixtures", "--out", str(data), "--frames", "2",
          "--width", "32", "--height", "24"])
    edges = tmp_path / "edges"
    assert main(["evaluate", "--manifest", str(data / "manifest.json"),
                 "--submission", str(data / "submission"),
                 "--out", str(tmp_path / "r.json"),
                 "--dump-edges", str(edges)]) == 0
    dumped = sorted(p.name for p in edges.iterdir())
    assert dumped == ["0000.gt_edges.png", "0000.pred_edges.png",
                      "0001.gt_edges.png", "0001.pred_edges.png"]
    assert Image.open(edges / "0000.gt_edges.png").mode == "1"


def test_workers_flag_flow(tmp_path):
    data = tmp_path / "data"
    main(["gen-fixtures", "--out", str(data), "--frames", "3",
          "--width", "32", "--height", "24"])
    r1 = tmp_path / "w1.json"
    r2 = tmp_path / "w2.json"
    main(["evaluate", "--manifest", str(data / "manifest.json"),
          "--submission", str(data / "submission"), "--out", str(r1)])
    main(["evaluate", "--manifest", str(data / "manifest.json"),
          "--submission", str(data / "submission"), "--workers", "3",
          "--out", str(r2)])
    assert r1.read_bytes() == r2.read_bytes()
