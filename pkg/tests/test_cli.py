import math

import pytest

from planeparts.cli import main, read_config_file
from planeparts.sampler import read_partitions


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_kernel_sine_value(capsys):
    code, out, _ = run(capsys, "kernel", "--type", "sine", "--dt", "0", "--dh", "1", "--tau", "0", "--chi", "0")
    assert code == 0
    val = float(out.split("value_real = ")[1].split()[0])
    assert val == pytest.approx(math.sqrt(3) / (2 * math.pi), abs=1e-12)  # 0.27566...
    assert "# type = sine" in out


def test_kernel_kq(capsys):
    code, out, _ = run(capsys, "kernel", "--type", "kq", "--q", "0.2", "--p1", "0:1", "--p2", "0:1")
    assert code == 0 and "value = 0.2249" in out


def test_oracle_counts(capsys):
    code, out, _ = run(capsys, "oracle", "--max-volume", "6")
    assert code == 0
    rows = [l for l in out.splitlines() if l and not l.startswith("#")][1:]
    assert [int(r.split(",")[1]) for r in rows] == [1, 1, 3, 6, 13, 24, 48]


def test_limit_shape(capsys, tmp_path):
    out_path = tmp_path / "grid.csv"
    code, _, _ = run(capsys, "limit-shape", "--tau-min", "-1", "--tau-max", "1", "--chi-min", "-2",
                     "--chi-max", "1", "--step", "0.5", "--out", str(out_path))
    assert code == 0
    lines = [l for l in out_path.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "tau,chi,in_A,density"
    rows = {tuple(map(float, l.split(",")[:2])): l.split(",")[2:] for l in lines[1:]}
    assert float(rows[(0.0, 0.0)][1]) == pytest.approx(1 / 3, abs=1e-15)
    assert rows[(0.0, -2.0)] == ["0", ""]
    # halving the step reproduces shared nodes exactly
    fine = tmp_path / "fine.csv"
    run(capsys, "limit-shape", "--tau-min", "-1", "--tau-max", "1", "--chi-min", "-2",
        "--chi-max", "1", "--step", "0.25", "--out", str(fine))
    fine_rows = {tuple(map(float, l.split(",")[:2])): l.split(",")[2:]
                 for l in fine.read_text().splitlines()[7:]}
    for key, val in rows.items():
        assert fine_rows[key] == val


def test_sample_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(capsys, "sample", "--q", "0.3", "--n", "1000", "--seed", "7", "--out", str(a))[0] == 0
    assert run(capsys, "sample", "--q", "0.3", "--n", "1000", "--seed", "7", "--out", str(b),
               "--threads", "2")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    header, parts = read_partitions(a)
    assert len(parts) == 1000 and header["seed"] == 7
    assert "timestamp" in (tmp_path / "a.jsonl.log").read_text()


def test_sample_volume_stats(capsys):
    code, out, _ = run(capsys, "sample", "--q", "0.1", "--n", "20000", "--seed", "3", "--stats", "volume")
    assert code == 0
    rows = [l.split(",") for l in out.splitlines() if l and l[0].isdigit()]
    assert all(abs(float(r[4])) < 3 for r in rows if float(r[2]) > 5)


@pytest.mark.parametrize("args,field", [
    (["sample", "--q", "1.5"], "q"),
    (["sample", "--q", "abc"], "q"),
    (["sample", "--q", "0.3", "--r", "1"], "q"),
    (["sample", "--r", "-1"], "r"),
    (["sample", "--q", "0.3", "--n", "0"], "n"),
    (["sample", "--q", "0.3", "--delta", "0"], "delta"),
    (["sample", "--q", "0.3", "--threads", "x"], "threads"),
    (["kernel", "--type", "sine", "--tau", "0", "--chi", "-3"], "tau"),
    (["kernel", "--type", "sine", "--dh", "0.5"], "dh"),
    (["kernel", "--type", "kq", "--q", "0.2", "--p1", "0:0"], "p1"),
    (["kernel", "--tol", "-1"], "tol"),
    (["limit-shape", "--tau-min", "1", "--tau-max", "0"], "tau_min"),
    (["limit-shape", "--step", "0"], "step"),
    (["lln", "--r", "0.1,0.2"], "r"),
    (["lln", "--r", "0.4", "--n", "10"], "n"),
    (["lln", "--r", "0.4", "--pattern", "0:0"], "pattern"),
    (["lln", "--r", "0.4", "--f-center", "0.5"], "f_center"),
    (["lln", "--r", "0.4", "--f-family", "gauss"], "f_family"),
    (["oracle", "--max-volume", "20"], "max_volume"),
    (["bogus"], "arguments"),
    ([], "command"),
])
def test_config_errors_exit_2(capsys, args, field):
    code, _, err = run(capsys, *args)
    assert code == 2
    assert f"invalid {field}" in err


def test_computational_failure_exit_1(capsys):
    # a valid q that the contour quadrature declines to attempt
    code, _, err = run(capsys, "kernel", "--type", "kq", "--r", "1e-4")
    assert code == 1 and "computation failed" in err


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sampling run\nq = 0.4\nn = 5\nseed = 9\n")
    assert read_config_file(str(cfg)) == {"q": "0.4", "n": "5", "seed": "9"}
    code, out, _ = run(capsys, "sample", "--config", str(cfg), "--n", "3")
    assert code == 0
    assert len(out.splitlines()) == 4 and '"q": 0.4' in out
    cfg.write_text("colour = red\n")
    assert run(capsys, "sample", "--config", str(cfg))[0] == 2
    assert run(capsys, "sample", "--config", str(tmp_path / "missing"))[0] == 2


def test_env_threads(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PLANEPARTS_THREADS", "2")
    code, out, _ = run(capsys, "sample", "--q", "0.3", "--n", "200", "--seed", "1")
    monkeypatch.setenv("PLANEPARTS_THREADS", "1")
    assert code == 0 and out == run(capsys, "sample", "--q", "0.3", "--n", "200", "--seed", "1")[1]


def test_lln_command(capsys, tmp_path):
    out_path, csv_path = tmp_path / "rep.txt", tmp_path / "s.csv"
    code, _, _ = run(capsys, "lln", "--r", "0.4", "--n", "50", "--seed", "7", "--grid-step", "0.1",
                     "--out", str(out_path), "--sigmas-csv", str(csv_path))
    assert code == 0
    text = out_path.read_text()
    assert "# command = lln" in text and "[r.0]" in text and "mean_sigma = " in text
    assert csv_path.read_text().startswith("r,replica,sigma\n")
