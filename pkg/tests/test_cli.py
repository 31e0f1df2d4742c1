import json

import numpy as np
import pytest

from gekrig import load
from gekrig.benchmarks import get_function
from gekrig.cli import main


def test_fit_then_predict(tmp_path, capsys):
    model_path = tmp_path / "m.json"
    assert main(["fit", "y1:2", "gekpls", "10", "--m", "1", "--seed", "3", "-o", str(model_path)]) == 0
    model = load(model_path)
    assert model.kind == "gekpls"
    assert model.points.shape == (20, 2)   # 10 samples plus one Taylor point each

    pts = np.array([[0.0, 1.0], [-2.5, 3.3]])
    pts_path = tmp_path / "pts.csv"
    pts_path.write_text("x1,x2\n" + "\n".join(",".join(repr(float(v)) for v in row) for row in pts) + "\n")
    out_path = tmp_path / "pred.csv"
    assert main(["predict", str(model_path), str(pts_path), "-o", str(out_path)]) == 0
    lines = out_path.read_text().split()
    assert lines[0] == "prediction"
    np.testing.assert_array_equal(np.array(lines[1:], float), model.predict(pts))


def test_predict_without_header(tmp_path):
    model_path = tmp_path / "m.json"
    main(["fit", "p1", "kriging", "8", "-o", str(model_path)])
    pts_path = tmp_path / "pts.csv"
    pts_path.write_text("0.1,0.2\n0.3,0.4\n")
    out = tmp_path / "o.csv"
    main(["predict", str(model_path), str(pts_path), "-o", str(out)])
    assert len(out.read_text().split()) == 3


def test_bench_writes_records_summary_and_plot(tmp_path):
    grid = {"trials": 2, "n_v": 50, "grid": [{"function": "y1", "d": [2], "n": [8],
                                              "models": [{"model": "kriging"}, {"model": "gekpls", "m": 1}]}]}
    cfg = tmp_path / "grid.json"
    cfg.write_text(json.dumps(grid))
    rec, summ, svg = tmp_path / "r.csv", tmp_path / "s.csv", tmp_path / "p.svg"
    assert main(["bench", str(cfg), "--records", str(rec), "--summary", str(summ), "--plot", str(svg)]) == 0
    lines = rec.read_text().splitlines()
    assert lines[0] == "function,d,model,h,m,n,trial,seed,re,fit_seconds,nugget"
    assert len(lines) == 1 + 4
    assert len(summ.read_text().splitlines()) == 1 + 2
    assert svg.read_text().count("<polyline") == 2

    again = tmp_path / "again.svg"
    assert main(["plot", str(summ), str(again)]) == 0
    assert again.read_text() == svg.read_text()


def test_sweep_step_output(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-step", "y1", "2", "gekpls", "8", "--m", "1", "--trials", "1", "--n-v", "20",
                 "--steps", "1e-4", "1e-2", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "fota_step,mean_re,mean_fit_seconds,failed"
    assert [float(line.split(",")[0]) for line in lines[1:]] == [1e-4, 1e-2]


def test_library_errors_exit_with_code_2(tmp_path, capsys):
    assert main(["fit", "p4", "gekpls", "10", "--m", "9", "-o", str(tmp_path / "x.json")]) == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        main(["train"])


def test_fit_uses_requested_function(tmp_path):
    path = tmp_path / "m.json"
    main(["fit", "p3", "kriging", "12", "-o", str(path)])
    model = load(path)
    assert model.points.shape[1] == get_function("p3").d
    assert model.meta["function"] == get_function("p3").id


def test_malformed_points_file(tmp_path, capsys):
    model_path = tmp_path / "m.json"
    main(["fit", "p1", "kriging", "8", "-o", str(model_path)])
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2\n0.1,oops\n")
    assert main(["predict", str(model_path), str(bad)]) == 2
    assert "bad.csv" in capsys.readouterr().err
