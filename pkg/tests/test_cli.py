"""End-to-end CLI behavior through the real argument parser."""

import json
import os

from gridcraft.cli import main


def test_run_then_replay_and_metrics(tmp_path, capsys):
    out_dir = tmp_path / "logs"
    rc = main(["run", "--seeds", "0:2", "--policy", "random",
               "--out-dir", str(out_dir)])
    assert rc == 0
    files = sorted(os.listdir(out_dir))
    assert "manifest.json" in files and "summary.json" in files
    log_files = [f for f in files if f.endswith(".gclog")]
    assert len(log_files) == 2
    capsys.readouterr()

    rc = main(["replay", "--log", str(out_dir / log_files[0])])
    assert rc == 0
    assert "replay verified" in capsys.readouterr().out

    rc = main(["metrics", "--report", "achievements", "--logs", str(out_dir),
               "--format", "json"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert "mean_score" in data and "pooled" in data

    rc = main(["metrics", "--report", "tools", "--logs", str(out_dir),
               "--format", "csv"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("agent,own_uses")


def test_metrics_ct_from_scenario_dirs(tmp_path, capsys):
    for name, scenario in (("full", "full_expert"), ("half", "half_expert"),
                           ("solo", "solo")):
        rc = main(["run", "--seeds", "0:2", "--policy", "random",
                   "--expert-policy", "random",
                   "--scenario", scenario, "--horizon", "60",
                   "--fixed-timesteps",
                   "--out-dir", str(tmp_path / name)])
        assert rc == 0
    capsys.readouterr()
    rc = main(["metrics", "--report", "ct",
               "--full", str(tmp_path / "full"),
               "--half", str(tmp_path / "half"),
               "--solo", str(tmp_path / "solo")])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert "ct" in data and "expert_score" in data


def test_replay_gif(tmp_path, capsys):
    out_dir = tmp_path / "logs"
    main(["run", "--seeds", "5:6", "--policy", "noop", "--horizon", "8",
          "--fixed-timesteps", "--out-dir", str(out_dir)])
    log_file = [f for f in os.listdir(out_dir) if f.endswith(".gclog")][0]
    gif = tmp_path / "ep.gif"
    rc = main(["replay", "--log", str(out_dir / log_file), "--gif", str(gif)])
    assert rc == 0
    assert gif.exists() and gif.stat().st_size > 0
    assert "9 frames" in capsys.readouterr().out


def test_map_prints_grid(capsys):
    rc = main(["map", "--seed", "7"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 48 and len(lines[0]) == 48


def test_bench_smoke(capsys):
    rc = main(["bench", "--duration", "0.3"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["agent_steps_per_s"] > 0


def test_bad_config_gives_error_json(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"n_agents": 0, "mystery": 1}))
    rc = main(["map", "--config", str(cfg)])
    assert rc == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "config"


def test_missing_log_gives_error_json(capsys):
    rc = main(["replay", "--log", "/nonexistent.gclog"])
    assert rc == 1
    err = json.loads(capsys.readouterr().err)
    assert "error" in err
