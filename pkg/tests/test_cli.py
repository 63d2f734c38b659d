import json
import subprocess
import sys

import pytest

from fracparts.cli import parse_grid, run
from fractions import Fraction

from conftest import GOLDEN, SQRT2, SQRT2_3


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_count_json(capsys):
    code, out, err = call(capsys, "count", "--alpha", GOLDEN, "--eps", "0.25", "--q", "5")
    assert code == 0 and json.loads(out)["count"] == 6
    assert "|M| = 6" in err


def test_resonance_exit(capsys):
    assert call(capsys, "sum", "--alpha", "rat:1/2", "--q", "2")[0] == 3


def test_phi_csv(capsys):
    code, out, _ = call(capsys, "phi", "--alpha", SQRT2, "--qmax", "10", "--format", "csv")
    rows = out.strip().splitlines()
    assert rows[0] == "x,value,witness"
    assert rows[1].startswith("1,0.414213562") and rows[1].endswith(",[1]")
    assert rows[2].startswith("2,0.343145750") and rows[2].endswith(",[2]")
    assert len(rows) == 3


@pytest.mark.parametrize("argv", [
    ["phi", "--alpha", "quad:(1+1*sqrt(4))/2", "--qmax", "10"],
    ["count", "--alpha", GOLDEN, "--eps", "0.75", "--q", "5"],
    ["count", "--alpha", GOLDEN, "--eps", "abc", "--q", "5"],
    ["count", "--alpha", GOLDEN, "--q", "5"],
    ["verify", "prop", "--alpha", GOLDEN, "--q-grid", "16:4:2"],
    ["frobnicate"],
    ["sum", "--alpha", SQRT2_3, "--radii", "3"],
    ["bounds", "--n", "1", "--q", "10", "--phi-q", "2"],
])
def test_usage_errors(capsys, argv):
    assert call(capsys, *argv)[0] == 4


def test_precision_exit(capsys):
    assert call(capsys, "count", "--alpha", "dec:0.5@8", "--eps", "1/2", "--q", "1")[0] == 2


def test_invariant_exit(capsys, monkeypatch):
    import fracparts.sums as sums

    monkeypatch.setattr(sums, "sandwich_check", lambda p, r: sums.SandwichReport(0, 0, 1.0, 1.0, False, False))
    assert call(capsys, "profile", "--alpha", GOLDEN, "--q", "5")[0] == 5


def test_max_bits_env(capsys, monkeypatch):
    monkeypatch.setenv("FRACPARTS_MAX_BITS", "64")
    assert call(capsys, "count", "--alpha", GOLDEN, "--eps", "1/4", "--q", "5", "--start-bits", "128")[0] == 4
    monkeypatch.setenv("FRACPARTS_MAX_BITS", "4096")
    assert call(capsys, "count", "--alpha", GOLDEN, "--eps", "1/4", "--q", "5")[0] == 0


def test_output_file(tmp_path, capsys):
    path = tmp_path / "p.csv"
    code, out, _ = call(capsys, "profile", "--alpha", GOLDEN, "--q", "5", "--format", "csv", "--output", str(path))
    assert code == 0 and "sandwich 40 <= S <= 80: holds" in out
    assert path.read_text(encoding="utf-8") == "q,k,count\n5,1,4\n5,2,4\n5,3,2\n"


@pytest.mark.parametrize("spec,eps,q", [(GOLDEN, "1/16", "20"), (SQRT2_3, "1/2", "7")])
def test_oracle_agrees_with_count(capsys, spec, eps, q):
    a = json.loads(call(capsys, "count", "--alpha", spec, "--eps", eps, "--q", q)[1])
    b = json.loads(call(capsys, "oracle", "--alpha", spec, "--eps", eps, "--q", q)[1])
    assert a["count"] == b["count"]


@pytest.mark.parametrize("argv", [
    ["sum", "--alpha", SQRT2_3, "--q", "6"],
    ["sum", "--alpha", SQRT2_3, "--radii", "3,2"],
    ["sharpness", "--alpha", SQRT2, "--qmax", "100"],
    ["verify", "prop", "--alpha", GOLDEN, "--eps-grid", "1/2:1/8:1/2", "--q-grid", "16:64:2"],
    ["verify", "theorem", "--alpha", GOLDEN, "--q-grid", "16,32"],
    ["verify", "gap", "--alpha", SQRT2, "--q", "20"],
    ["verify", "shells", "--alpha", GOLDEN, "--q", "100", "--c-n", "1"],
    ["verify", "widmer", "--alpha", GOLDEN, "--eps", "1/8", "--q", "32", "--b-grid", "4:32:2"],
    ["bounds", "--n", "1", "--q", "10", "--phi-q", "0.381966", "--phi-2q", "0.381966"],
])
@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_every_command_emits(capsys, argv, fmt):
    code, out, err = call(capsys, *argv, "--format", fmt)
    assert code == 0 and err.strip()
    if fmt == "json":
        json.loads(out)
    else:
        assert out.endswith("\n") and "," in out.splitlines()[0]


def test_grids():
    assert parse_grid("16:128:2") == [16, 32, 64, 128]
    assert parse_grid("1/2:1/16:1/2") == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)]
    assert parse_grid("3,5") == [3, 5]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fracparts.cli", "count", "--alpha", GOLDEN, "--eps", "1/4", "--q", "5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["count"] == 6
