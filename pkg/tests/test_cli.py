import json
import subprocess
import sys

import numpy as np
import pytest

from adaptive_epd.cli import run
from adaptive_epd.data import read_returns_csv


@pytest.fixture()
def returns_file(tmp_path):
    path = tmp_path / "r.csv"
    assert run(["simulate", "--model", "regime", "--kappa", "1", "--schedule", "800:0.01,800:0.03",
                "--seed", "5", "-o", str(path)]) == 0
    return path


@pytest.fixture()
def price_file(tmp_path):
    rng = np.random.default_rng(0)
    prices = 100 * np.exp(np.cumsum(rng.laplace(0, 0.01, 400)))
    path = tmp_path / "prices.csv"
    rows = "".join(f"{1000 + i}-01-01,{float(p)!r}\n" for i, p in enumerate(prices))
    path.write_text("Date,Close\n" + rows)
    return path


def read_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_simulate_writes_config_and_values(returns_file):
    text = returns_file.read_text().splitlines()
    assert text[0].startswith("# config: ")
    assert json.loads(text[0][len("# config: "):])["seed"] == 5
    assert text[1] == "x" and len(read_returns_csv(returns_file)) == 1600


def test_returns_from_prices(price_file, tmp_path, capsys):
    out = tmp_path / "ret.csv"
    assert run(["returns", "--input", str(price_file), "-o", str(out)]) == 0
    assert len(read_returns_csv(out)) == 399


def test_fit_static_json_embeds_config(returns_file, capsys):
    assert run(["fit-static", "--returns", str(returns_file), "--kappa", "1"]) == 0
    doc = read_json(capsys)
    assert doc["config"]["kappa"] == 1.0 and doc["config"]["command"] == "fit-static"
    assert doc["result"]["params"]["kappa"] == 1.0


def test_fit_adaptive_with_trajectory(returns_file, tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    assert run(["fit-adaptive", "--returns", str(returns_file), "--kappa", "1", "--adapt-mu",
                "--trajectory", str(traj), "--format", "csv"]) == 0
    lines = traj.read_text().splitlines()
    assert lines[0].startswith("# config: ") and lines[1] == "t,sigma,mu"
    assert lines[2].startswith("1,0.01,0.0") and len(lines) == 2 + 1600
    assert "mean_loglik" in capsys.readouterr().out


def test_sweep_csv_and_determinism(returns_file, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert run(["sweep", "--returns", str(returns_file), "--kappa", "0.8:1.2:0.2",
                    "--mode", "adaptive-optimized", "-o", str(path)]) == 0
        outs.append(path.read_bytes().replace(name.encode(), b""))
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[1].startswith("# argmax_kappa: ") and lines[3] == "kappa,loglik,eta"
    assert len(lines) == 4 + 3


def test_garch_normalize_compare(returns_file, capsys):
    assert run(["garch", "--returns", str(returns_file)]) == 0
    assert 0 <= read_json(capsys)["result"]["params"]["alpha"] < 1
    assert run(["normalize", "--returns", str(returns_file), "--model", "adaptive:kappa=1", "--format", "json"]) == 0
    doc = read_json(capsys)
    assert 0 < doc["result"]["ks_statistic"] < 1 and len(doc["result"]["y"]) == 1600
    assert run(["compare", "--returns", str(returns_file), "--model", "static", "--model", "adaptive:kappa=1",
                "--format", "csv"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[1] == "rank,model_id,mean_loglik,n,error"
    assert rows[2].startswith("1,adaptive:kappa=1,")


def test_config_files(returns_file, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kappa": 1.3, "eta": 0.9}))
    assert run(["--config", str(cfg), "fit-adaptive", "--returns", str(returns_file)]) == 0
    doc = read_json(capsys)
    assert doc["config"]["kappa"] == 1.3 and doc["config"]["eta"] == 0.9
    ycfg = tmp_path / "c.yaml"
    ycfg.write_text("kappa: 1.1\nthreads: 2\n")
    # command-line flags override the file
    assert run(["--config", str(ycfg), "fit-adaptive", "--returns", str(returns_file), "--kappa", "0.9"]) == 0
    doc = read_json(capsys)
    assert doc["config"]["kappa"] == 0.9 and doc["config"]["threads"] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert run(["--config", str(bad), "fit-static", "--returns", str(returns_file)]) == 2
    assert "nonsense" in capsys.readouterr().err


def test_threads_env_default(returns_file, monkeypatch, capsys):
    monkeypatch.setenv("ADAPTIVE_EPD_THREADS", "3")
    assert run(["fit-static", "--returns", str(returns_file), "--kappa", "1"]) == 0
    assert read_json(capsys)["config"]["threads"] == 3


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "missing.csv"
    assert run(["fit-static", "--input", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err
    assert run(["fit-adaptive", "--returns", str(missing), "--kappa", "1"]) == 1
    assert str(missing) in capsys.readouterr().err


def test_bad_arguments_exit_with_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["sweep", "--kappa", "1:2"])
    assert exc.value.code == 2
    assert run(["fit-static"]) == 1


def test_module_entry_point(returns_file):
    proc = subprocess.run([sys.executable, "-m", "adaptive_epd", "fit-static", "--returns", str(returns_file),
                           "--kappa", "1", "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0 and "mean_loglik" in proc.stdout


def test_simulate_twice_is_byte_identical(tmp_path):
    path = tmp_path / "sim.csv"
    argv = ["simulate", "--model", "epd", "--kappa", "1", "--sigma", "1", "--n", "1000", "--seed", "7", "-o", str(path)]
    assert run(argv) == 0
    first = path.read_bytes()
    assert run(argv) == 0
    assert path.read_bytes() == first
    assert run(argv[:-4] + ["--seed", "8", "-o", str(path)]) == 0
    assert path.read_bytes() != first
