import json

import pytest

from cp_regular.cli import main
from cp_regular.config import ConfigError, load_config, parse_config
from cp_regular.scenarios import run_scenario

TINY = {
    "main_theorem": """
        lam_weak = 1.0
        n_grid = 50, 100, 200
        min_survivors = 5
        horizon = 50
        c_weak = 0.5
    """,
    "calibrate_lambdas": """
        lam_grid = 0.5, 2.0
        n_grid = 20, 40
        replicas = 4
        horizon = 50
        tree_horizon = 3
        tree_replicas = 200
    """,
    "clash_time": """
        lam = 1.5
        n_grid = 100, 1000
        replicas = 20
        c_horizon = 4
        c_replicas = 1000
    """,
    "surviving_types": """
        lam = 1.0
        k = 5
        horizon = 8
        replicas = 30
        survival_replicas = 500
    """,
    "duality": """
        lam = 1.0
        t_grid = 0.5
        replicas = 2000
    """,
    "growth_concentration": """
        lam = 1.0
        horizon = 4
        replicas = 300
        tail_replicas = 300
        t_grid = 2, 4
        delta = 0.3
    """,
    "oracle_validation": """
        lam_grid = 1
        replicas = 2000
    """,
    "local_limit": """
        n_grid = 100, 1000
        radius = 2
        replicas = 2
        samples = 20
    """,
}


def _write(tmp_path, scenario, body, name="run.cfg", **extra):
    lines = [f"scenario = {scenario}", "seed = 3", *(f"{k} = {v}" for k, v in extra.items())]
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n" + body)
    return path


# config parsing

def test_parse_comments_lists_and_scientific_ints():
    cfg = parse_config("scenario = duality  # comment\nreplicas = 1e5\nt_grid = 0.5, 1.5\n")
    assert cfg.scenario == "duality"
    assert cfg.get("replicas") == 100_000
    assert cfg.get("t_grid") == (0.5, 1.5)
    assert cfg.echo()["t_grid"] == [0.5, 1.5]


@pytest.mark.parametrize("text", [
    "replicas = 10\n",                               # no scenario
    "scenario = nonsense\n",
    "scenario = duality\nfoo = 1\n",                 # unknown key
    "scenario = duality\nlam = 1\nlam = 2\n",        # duplicate
    "scenario = duality\nlam = -1\n",
    "scenario = duality\nreplicas = 1.5\n",
    "scenario = duality\nepsilon = 1\n",
    "scenario = duality\nd = 2\n",
    "scenario = duality\njust text\n",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_shipped_configs_validate(capsys):
    from pathlib import Path
    for path in sorted(Path(__file__).parent.parent.glob("configs/*.cfg")):
        assert main(["validate", str(path)]) == 0
        echoed = json.loads(capsys.readouterr().out)
        assert echoed["scenario"] == load_config(path).scenario


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("scenario = duality\nbogus = 1\n")
    assert main(["run", str(bad)]) == 2
    assert main(["validate", str(tmp_path / "missing.cfg")]) == 2
    good = _write(tmp_path, "duality", TINY["duality"])
    assert main(["run", str(good), "--threads", "0"]) == 2
    assert main(["run", str(good), "--seed", "-1"]) == 2
    missing = _write(tmp_path, "clash_time", "", name="missing_keys.cfg")
    assert main(["run", str(missing), "--out", str(tmp_path / "o")]) == 2
    assert "invalid config" in capsys.readouterr().err


def test_budget_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "growth_concentration", "lam = 3\nhorizon = 12\nreplicas = 50\nbudget = 500\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "aborted" in capsys.readouterr().err


# scenarios

@pytest.mark.filterwarnings("ignore:.*fewer than 100 surviving:RuntimeWarning")
@pytest.mark.parametrize("scenario", sorted(TINY))
def test_tiny_scenario_runs(tmp_path, scenario):
    cfg = load_config(_write(tmp_path, scenario, TINY[scenario]))
    summary = run_scenario(cfg, tmp_path / "out")
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert set(manifest) == {"config", "outputs", "content_hash", "wall_time_seconds"}
    assert set(manifest["outputs"]) == set(summary["files"])
    assert manifest["config"]["scenario"] == scenario
    for name in summary["files"]:
        assert (tmp_path / "out" / name).stat().st_size > 0


def test_repeat_run_is_byte_identical(tmp_path):
    path = _write(tmp_path, "duality", TINY["duality"])
    assert main(["run", str(path), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(path), "--out", str(tmp_path / "b")]) == 0
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert a["content_hash"] == b["content_hash"]
    assert (tmp_path / "a" / "duality.csv").read_bytes() == (tmp_path / "b" / "duality.csv").read_bytes()


@pytest.mark.filterwarnings("ignore:.*fewer than 100 surviving:RuntimeWarning")
def test_thread_count_does_not_change_results(tmp_path):
    path = _write(tmp_path, "main_theorem", TINY["main_theorem"])
    assert main(["run", str(path), "--threads", "1", "--out", str(tmp_path / "one")]) == 0
    assert main(["run", str(path), "--threads", "2", "--out", str(tmp_path / "two")]) == 0
    one = (tmp_path / "one" / "main_theorem_weak.csv").read_bytes()
    two = (tmp_path / "two" / "main_theorem_weak.csv").read_bytes()
    assert one == two


def test_seed_override_changes_output(tmp_path):
    path = _write(tmp_path, "duality", TINY["duality"])
    main(["run", str(path), "--out", str(tmp_path / "a")])
    main(["run", str(path), "--seed", "99", "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert b["config"]["seed"] == 99
    assert a["content_hash"] != b["content_hash"]


def test_lambda_zero_main_theorem_is_empty_and_flagged(tmp_path):
    cfg = load_config(_write(tmp_path, "main_theorem", "lam = 0\nn_grid = 50, 100\nmin_survivors = 5\n"
                                                        "max_replicas = 100\nhorizon = 20\n"))
    with pytest.warns(RuntimeWarning, match="no replica survived"):
        summary = run_scenario(cfg, tmp_path / "out")
    phase = summary["phases"]["weak"]
    assert phase["records"] == 0 and phase["flagged"] and not summary["passed"]
    rows = (tmp_path / "out" / "main_theorem_weak.csv").read_text().splitlines()
    assert rows[0] == "N,replica,I_k,survived_cond"
    assert all(r.endswith(",0") for r in rows[1:])
