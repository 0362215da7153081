import json
import subprocess
import sys

import numpy as np
import pytest

from commmap.cli import main
from commmap.wire import read_container

FAST = ["--permutations", "3", "--gibbs-iterations", "5", "--quiet"]


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "events.csv"
    assert main(["synth", "--out", str(path), "--seed", "2", "--quiet"]) == 0
    return path


def test_synth_writes_csv(data_csv):
    lines = data_csv.read_text().splitlines()
    assert lines[0] == "tx_easting,tx_northing,rx_easting,rx_northing,label,tx_agent,rx_agent"
    assert len(lines) == 1 + 1800


@pytest.mark.parametrize("command", ["local", "decentralized"])
def test_experiment_outputs(command, data_csv, tmp_path, capsys):
    js, cs = tmp_path / "r.json", tmp_path / "r.csv"
    assert main([command, "--data", str(data_csv), "--json", str(js), "--csv", str(cs), "--m", "2",
                 "--policies", "good", "bad", "--permutations", "3", "--gibbs-iterations", "5"]) == 0
    res = json.loads(js.read_text())
    assert res["experiment"] == command
    assert res["config"]["ms"] == [2] and res["config"]["policies"] == ["good", "bad"]
    assert cs.read_text().startswith("scope,policy,m,")
    out = capsys.readouterr().out
    assert "NLL" in out
    if command == "decentralized":
        assert "60 B" in out


def test_decentralized_json_is_byte_identical(data_csv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["decentralized", "--data", str(data_csv), "--json", str(p)] + FAST) == 0
    assert a.read_bytes() == b.read_bytes()


def test_synthetic_source_and_centers(tmp_path):
    js = tmp_path / "r.json"
    argv = ["local", "--synthetic-seed", "4", "--slots", "600", "--json", str(js),
            "--center", "0:0,0,0,0", "--center", "1:0.1,0,0,0"] + FAST
    assert main(argv) == 0
    res = json.loads(js.read_text())
    assert res["agents"]["1"]["center"] == [0.1, 0.0, 0.0, 0.0]


def test_map_with_package_container(data_csv, tmp_path):
    pk, out1, out2 = tmp_path / "p.bin", tmp_path / "m1.csv", tmp_path / "m2.csv"
    grid = ["--fixed", "100", "50", "--easting", "0", "800", "--northing", "0", "450", "--nx", "5", "--ny", "4"]
    base = ["map", "--data", str(data_csv), "--gibbs-iterations", "5", "--quiet"] + grid
    assert main(base + ["--packages-out", str(pk), "--out", str(out1)]) == 0
    pkgs = read_container(pk)
    assert [p.m for p in pkgs] == [2, 2]
    assert main(base + ["--packages", str(pk), "--out", str(out2)]) == 0
    a = np.loadtxt(out1, delimiter=",", skiprows=1)
    b = np.loadtxt(out2, delimiter=",", skiprows=1)
    assert a.shape == (20, 5)
    # the container holds float32 values
    np.testing.assert_allclose(a, b, atol=1e-5)


def test_errors_exit_nonzero_with_json(tmp_path, capsys):
    assert main(["local", "--data", str(tmp_path / "missing.csv")] + FAST) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "FileNotFoundError"
    bad = tmp_path / "bad.csv"
    bad.write_text("tx_easting,tx_northing,rx_easting,rx_northing,label,tx_agent,rx_agent\n1,2,3,4,7,0,1\n")
    assert main(["local", "--data", str(bad)] + FAST) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "DataFormatError" and "row 2" in err["message"]
    with pytest.raises(SystemExit):
        main(["local", "--data", "x.csv", "--center", "0:1,2"])


def test_console_entry_point(data_csv):
    proc = subprocess.run([sys.executable, "-m", "commmap.cli", "local", "--data", str(data_csv), "--m", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert json.loads(proc.stderr)["error"] == "ValueError"
