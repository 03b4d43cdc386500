import csv
import json
import math

import numpy as np
import pytest

from bstraight.cli import RunConfig, main, simplex_lattice


def strip_times(text):
    data = json.loads(text)
    data.pop("timestamps")
    return data


def write_tet(path, model="h3"):
    r = 0.5
    pts = [[0, 0, 0, 1]] + [[r * e[0], r * e[1], r * e[2], math.sqrt(1 + r * r)] for e in np.eye(3)]
    path.write_text(json.dumps({"model": model, "vertices": pts}))
    return pts


def test_verify_jacobian_bound(tmp_path):
    out = tmp_path / "r.json"
    code = main(["verify", "--model", "h3", "--property", "jacobian-bound", "--samples", "200",
                 "--seed", "42", "--out", str(out)])
    report = json.loads(out.read_text())
    assert code == 0
    assert report["violations"] == []
    assert list(report) == ["version", "command", "config", "timestamps", "results", "violations"]
    assert report["version"] == "1" and report["command"] == "verify"


def test_verify_equivariance_h2(tmp_path):
    assert main(["verify", "--model", "h2", "--property", "equivariance", "--samples", "50",
                 "--seed", "7", "--out", str(tmp_path / "e.json")]) == 0


def test_verify_all_small(tmp_path):
    out = tmp_path / "all.json"
    assert main(["verify", "--model", "h2xh2", "--samples", "3", "--seed", "1", "--out", str(out)]) == 0
    results = json.loads(out.read_text())["results"]
    assert {"equivariance", "faces", "c1", "jacobian-bound"} <= set(results)


def test_unknown_model_exits_64(capsys):
    assert main(["verify", "--model", "h9", "--samples", "5"]) == 64
    assert "unknown model" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["verify", "--model", "h2", "--samples", "0"],
    ["verify", "--model", "h2", "--tol-grad", "-1"],
    ["verify", "--model", "h2", "--radius", "0"],
    ["verify", "--model", "h2", "--grid-resolution", "4"],
    ["verify", "--model", "h2", "--property", "other"],
    ["jscan"],
    ["simvol", "surface(2)", "--v", "three"],
])
def test_invalid_config_exits_64(argv, capsys):
    with pytest.raises(SystemExit) as info:
        raise SystemExit(main(argv))
    assert info.value.code == 64


def test_violations_exit_1(tmp_path):
    out = tmp_path / "v.json"
    code = main(["jscan", "--model", "h2", "--samples", "3", "--cprime", "1e-9", "--volume-tuples", "0",
                 "--out", str(out)])
    report = json.loads(out.read_text())
    assert code == 1 and report["violations"]


def test_solver_failure_exit_2(tmp_path):
    out = tmp_path / "f.json"
    code = main(["verify", "--model", "h2", "--property", "faces", "--samples", "2", "--max-iter", "1",
                 "--radius", "3", "--out", str(out)])
    assert code == 2
    assert any(v["kind"] == "solver" for v in json.loads(out.read_text())["violations"])


def test_jscan_rerun_is_byte_stable(tmp_path, monkeypatch):
    paths = []
    for threads in ("1", "3"):
        monkeypatch.setenv("BSTRAIGHT_THREADS", threads)
        out = tmp_path / "s.json"
        assert main(["jscan", "--model", "h2xh2", "--samples", "20", "--seed", "1", "--out", str(out)]) == 0
        paths.append(out.read_text())
    assert strip_times(paths[0]) == strip_times(paths[1])
    lines = [[ln for ln in p.splitlines() if '"started"' not in ln and '"finished"' not in ln] for p in paths]
    assert lines[0] == lines[1]


def test_report_config_round_trips(tmp_path):
    out = tmp_path / "r.json"
    main(["verify", "--model", "h2", "--property", "faces", "--samples", "3", "--seed", "4", "--out", str(out)])
    report = json.loads(out.read_text())
    config = RunConfig(**report["config"]).validate()
    again = tmp_path / "again.json"
    argv = ["verify", "--model", config.model, "--property", "faces", "--samples", str(config.samples),
            "--seed", str(config.seed), "--grid-resolution", str(config.grid_resolution),
            "--tol-grad", repr(config.tol_grad), "--out", str(again)]
    main(argv)
    assert strip_times(again.read_text())["results"] == report["results"]


def test_straighten_csv(tmp_path):
    simplex = tmp_path / "tet.json"
    pts = write_tet(simplex)
    out = tmp_path / "m.csv"
    assert main(["straighten", "--model", "h3", "--simplex", str(simplex), "--grid", "20",
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == math.comb(23, 3)
    vertex_rows = [r for r in rows if r["vertex_error"]]
    assert len(vertex_rows) == 4
    for r in vertex_rows:
        i = [float(r[f"a{j}"]) for j in range(1, 5)].index(1.0)
        y = [float(r[f"y{j}"]) for j in range(4)]
        assert np.max(np.abs(np.array(y) - np.array(pts[i]))) <= 1e-7


def test_simplex_lattice_counts():
    pts = list(simplex_lattice(2, 4))
    assert len(pts) == math.comb(6, 2)
    assert all(abs(a @ a - 1) <= 1e-12 for a in pts)


def test_barycenter_command(tmp_path, capsys):
    simplex = tmp_path / "tet.json"
    write_tet(simplex)
    assert main(["barycenter", "--simplex", str(simplex), "--weights", "1,1,0,0"]) == 0
    report = json.loads(capsys.readouterr().out)
    y = np.array(report["results"]["point"])
    assert y[0, 0] == pytest.approx(math.sinh(math.asinh(0.5) / 2), abs=1e-8)
    assert main(["barycenter", "--simplex", str(simplex), "--weights", "1,2"]) == 64


@pytest.mark.parametrize("content", [
    "not json",
    '{"model": "h3"}',
    '{"model": "h7", "vertices": [[0, 0, 0, 1]]}',
    '{"model": "h3", "vertices": [[0, 0, 1]]}',
    '{"model": "h3", "vertices": [[1, 0, 0, 1]]}',
    '{"model": "h2", "vertices": [[0, 0, 1]]}',
])
def test_malformed_simplex_exits_65(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    assert main(["straighten", "--model", "h3", "--simplex", str(path)]) == 65


def test_missing_simplex_file_exits_65(tmp_path):
    assert main(["straighten", "--simplex", str(tmp_path / "none.json")]) == 65


def test_simvol_command(capsys):
    assert main(["simvol", "product(surface(genus=2), surface(genus=2))"]) == 0
    report = json.loads(capsys.readouterr().out)
    interval = report["results"]["interval"]
    assert (interval["lo"], interval["hi"]) == (16.0, 96.0)
    assert any(t.get("constant") == "C(4)" for t in interval["trace"])
    assert main(["simvol", "product(surface(2), surface(2))", "--product-constant", "4=2"]) == 0
    assert json.loads(capsys.readouterr().out)["results"]["interval"]["hi"] == 32.0


def test_simvol_errors_exit_3(capsys):
    assert main(["simvol", "product(surface(2),\n  surface(genus=x y))"]) == 3
    assert "line 2, column 17" in capsys.readouterr().err
    assert main(["simvol", "hyperbolic(5, vol=1)"]) == 3
    assert main(["simvol", "connect_sum(surface(2), surface(2))"]) == 3


def test_csv_format_flag(tmp_path, capsys):
    assert main(["simvol", "surface(genus=3)", "--format", "csv"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == "expression,lo,hi,dim"
