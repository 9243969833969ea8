import csv
import io
import json

import numpy as np
import pytest

from ictk.cli import main, parse_targets, CliError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.reader(io.StringIO(text)))


def test_example1_output(capsys):
    code, out, _ = run(capsys, "example1")
    assert code == 0
    rows = {r[0]: r for r in table(out)[1:]}
    assert rows["r1"][1] == "4" and rows["r2_uncoordinated"][1] == "2"
    assert round(float(rows["r2_coordinated"][1]), 5) == 2.39624
    assert round(float(rows["rc"][1]), 5) == 0.81128
    assert [rows[k][3] for k in ("r1", "r2_coordinated", "rc")] == ["4", "2.4", "0.81"]


def test_capacity_identity(capsys):
    code, out, _ = run(capsys, "capacity", "--channel", "identity:4", "--target", "0.25,0.25,0.25,0.25")
    assert code == 0
    row = table(out)[1]
    assert row[1] == "true" and float(row[2]) == pytest.approx(2.0, abs=1e-12)


def test_capacity_infeasible_only_exits_2(capsys):
    code, out, _ = run(capsys, "capacity", "--channel", "bsc:0.1", "--target", "0,1")
    assert code == 2
    assert table(out)[1][1] == "false"


def test_capacity_sweep_mixes_feasible_and_infeasible(capsys):
    code, out, _ = run(capsys, "capacity", "--channel", "bsc:0.1", "--target", "0:1:5", "--round", "6")
    rows = table(out)[1:]
    assert code == 0 and len(rows) == 5
    assert [r[1] for r in rows] == ["false", "true", "true", "true", "false"]
    assert rows[2][2] == "0.531004"


def test_errors_exit_1(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"type": "single", "P_Y_given_X": [[0.5, 0.3]], "P_Z": [[1.0]]}))
    code, _, err = run(capsys, "capacity", "--channel", str(bad))
    assert code == 1 and "row 0" in err
    assert run(capsys, "capacity", "--channel", "bsc:0.1", "--target", "0.5,0.6")[0] == 1
    assert run(capsys, "capacity", "--channel", "example1")[0] == 1
    assert run(capsys, "capacity", "--channel", "bsc:0.1", "--tol", "0")[0] == 1
    code, _, err = run(capsys, "capacity", "--channel", "identity:25")
    assert code == 1 and "not of the problem" in err


def test_simulate_table(capsys):
    code, out, _ = run(capsys, "simulate", "--channel", "bsc:0.11", "--rate", "0.3",
                       "--n-list", "20,40", "--trials", "30", "--codebook", "ensemble")
    rows = table(out)
    assert code == 0 and rows[0][0] == "n" and [r[0] for r in rows[1:]] == ["20", "40"]
    assert run(capsys, "simulate", "--channel", "bsc:0.11", "--rate", "0.3", "--n-list", "400",
               "--trials", "1")[0] == 1


def test_region_table(capsys, tmp_path):
    out_path = tmp_path / "region.csv"
    code, _, _ = run(capsys, "region", "--channel", "example1", "--target", "1,0", "--u-size", "1",
                     "--weights", "1,1,0", "--restarts", "4", "--out", str(out_path))
    assert code == 0
    points, facets = out_path.read_text().split("\n\n")
    rows = table(points)
    assert rows[0][:7] == ["w1", "w2", "wc", "r1", "r2", "rc", "tv_to_target"]
    assert float(rows[1][6]) <= 1e-6
    assert table(facets)[0] == ["n_r1", "n_r2", "n_rc", "offset"]


def test_target_parsing():
    assert len(parse_targets(["0:1:3"], 2)) == 3
    with pytest.raises(CliError):
        parse_targets(["0:1:3"], 3)
    with pytest.raises(CliError):
        parse_targets(["0:1"], 2)
    assert np.allclose(parse_targets(["0.2,0.3,0.5"], 3)[0], [0.2, 0.3, 0.5])
