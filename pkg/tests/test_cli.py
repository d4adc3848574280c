import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from carbonshift.cli import main
from carbonshift.ingest import read_signal_csv
from carbonshift.output import write_signal_csv
from carbonshift.synthetic import noisy_daily_signal

SUBCOMMANDS = ["ingest", "signal", "potential", "simulate", "sweep", "report"]


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    for i, (region, zone) in enumerate([("de", "Europe/Berlin"), ("ca", "America/Los_Angeles")]):
        sig = noisy_daily_signal(start="2019-12-28", days=380, region=region, zone=zone, seed=i)
        write_signal_csv(sig, d / f"{region}.csv")
    (d / "de.toml").write_text(
        'timezone = "Europe/Berlin"\nvocabulary = "entsoe"\n'
        '[[neighbors]]\nname = "FR"\nintensity = 56.3\ncitation = "fixture"\n'
    )
    idx = pd.date_range("2020-03-01", periods=96, freq="15min", tz="UTC").strftime("%Y-%m-%dT%H:%M:%SZ")
    pd.DataFrame({"timestamp": idx, "Wind Onshore": np.full(96, 300.0),
                  "Fossil Hard coal": np.linspace(100, 200, 96)}).to_csv(d / "gen.csv", index=False)
    pd.DataFrame({"timestamp": idx, "FR": np.full(96, 100.0)}).to_csv(d / "imp.csv", index=False)
    return d


@pytest.fixture
def env(data_dir, monkeypatch):
    monkeypatch.setenv("CARBONSHIFT_DATA_DIR", str(data_dir))
    return data_dir


def test_signal_pipeline(env, tmp_path):
    out = tmp_path / "ci.csv"
    assert main(["signal", "--region", "de", "--gen", str(env / "gen.csv"),
                 "--imports", str(env / "imp.csv"), "--out", str(out)]) == 0
    sig = read_signal_csv(out, "de", "Europe/Berlin")
    # 15-min feed averaged to 30-min slots
    assert len(sig) == 48
    coal = (np.linspace(100, 200, 96)[0] + np.linspace(100, 200, 96)[1]) / 2
    expected = (300 * 12 + coal * 1001 + 100 * 56.3) / (300 + coal + 100)
    assert sig.values[0] == pytest.approx(expected, rel=1e-9)


def test_ingest_writes_trace(env, tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["ingest", "--region", "de", "--gen", str(env / "gen.csv"), "--out", str(out)]) == 0
    df = pd.read_csv(out)
    assert {"coal", "wind"} <= set(df.columns)
    assert len(df) == 48


def test_simulate_nightly_json(env, tmp_path, capsys):
    assert main(["simulate", "--scenario", "nightly", "--window", "8h", "--error", "0.05",
                 "--region", "de", "--repetitions", "3"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["n_jobs"] == 366
    assert res["window"] == "8h" and res["error"] == 0.05
    assert len(res["repetition_savings_percent"]) == 3
    assert 0 < res["savings_percent"] < 100


def test_simulate_ml_with_assignments(env, tmp_path):
    out, asg = tmp_path / "r.json", tmp_path / "a.csv"
    assert main(["simulate", "--scenario", "ml_project", "--constraint", "semi_weekly", "--region", "de",
                 "--repetitions", "1", "--out", str(out), "--assignments", str(asg)]) == 0
    res = json.loads(out.read_text())
    assert res["strategy"] == "interrupting" and res["n_jobs"] == 3387
    assert pd.read_csv(asg).groupby("job_id").size().sum() > 0


def test_potential_table(env, tmp_path):
    out = tmp_path / "pot.csv"
    assert main(["potential", "--window", "+8h", "--region", "ca", "--out", str(out)]) == 0
    df = pd.read_csv(out)
    assert len(df) == 48
    assert {"mean", "q50", "share_ge_80"} <= set(df.columns)
    assert (df["mean"] >= 0).all()


def test_report(env, tmp_path, capsys):
    hist = tmp_path / "h.csv"
    assert main(["report", "--region", "de", "--histogram", str(hist)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert {"mean", "workday_mean", "weekend_mean", "drop_percent"} <= set(stats)
    assert pd.read_csv(hist)["count"].sum() == 380 * 48


def test_sweep(env, tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text(
        f'repetitions = 2\n[signals.de]\npath = "{env / "de.csv"}"\ntimezone = "Europe/Berlin"\n'
        '[[experiments]]\nscenario = "nightly"\nhalf_width_hours = [0, 4]\nerrors = [0.0, 0.05]\n'
    )
    out, man = tmp_path / "res.csv", tmp_path / "man.json"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--manifest", str(man)]) == 0
    assert len(pd.read_csv(out)) == 4
    assert "de" in json.loads(man.read_text())["dataset_sha256"]


def test_outputs_byte_identical(env, tmp_path):
    args = ["simulate", "--window", "3h", "--error", "0.1", "--region", "de", "--repetitions", "2",
            "--forecast-seed", "7"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(args + ["--out", str(a)])
    main(args + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    p, q = tmp_path / "p.csv", tmp_path / "q.csv"
    main(["potential", "--window=-2h", "--region", "ca", "--out", str(p)])
    main(["potential", "--window=-2h", "--region", "ca", "--out", str(q)])
    assert p.read_bytes() == q.read_bytes()


def test_data_error_exit_1(env, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,mystery\n2020-01-01T00:00Z,1\n2020-01-01T00:30Z,1\n")
    assert main(["signal", "--region", "de", "--gen", str(bad), "--out", str(tmp_path / "o.csv")]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "MappingError"
    assert not (tmp_path / "o.csv").exists()


def test_usage_errors_exit_2(env, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--strategy", "magic"])
    assert exc.value.code == 2
    assert main(["report", "--signal", str(tmp_path / "missing.csv")]) == 2
    assert main(["simulate", "--scenario", "nightly", "--constraint", "semi_weekly", "--region", "de"]) == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_missing_signal_source_is_usage_error(monkeypatch):
    monkeypatch.delenv("CARBONSHIFT_DATA_DIR", raising=False)
    assert main(["report", "--region", "de"]) == 2


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_for_every_subcommand(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    assert "usage: carbonshift " + cmd in capsys.readouterr().out


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "carbonshift.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in SUBCOMMANDS:
        assert cmd in out.stdout
