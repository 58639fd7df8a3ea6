from __future__ import annotations

import json

import pytest

from pcncongest.harness import cli
from pcncongest.harness.config import (
    WORKERS_ENV,
    ConfigError,
    ExperimentConfig,
    apply_setting,
    dump_config,
    find_section,
    load_config,
    substream_seed,
)
from pcncongest.harness.experiments import (
    TopologyCalibrationFailed,
    build_network,
    run_experiment_1,
    run_experiment_2,
    worker_count,
)
from pcncongest.harness.report import load_result, render_report, save_result, summary_text


def small_config(**kw) -> ExperimentConfig:
    cfg = ExperimentConfig(
        iterations=2,
        threshold_grid=[0.2, 0.6],
        budgets=[5_000_000, 20_000_000],
        budget_sweep=[1_000_000, 10_000_000],
        max_paths=30,
    )
    cfg.topology.honest_node_count = 80
    cfg.sybil.pair_count = 2
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


@pytest.fixture(scope="module")
def exp1_result():
    return run_experiment_1(small_config(), workers=1)


def test_config_round_trip(tmp_path):
    cfg = small_config(seed=9, reprobe=False)
    cfg.topology.graph_model = "small-world"
    path = tmp_path / "c.ini"
    path.write_text(dump_config(cfg))
    back = load_config(path)
    assert back.to_dict() == cfg.to_dict()
    assert back.config_hash() == cfg.config_hash()
    assert ExperimentConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_config_file_parsing(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\nbudgets = 75e6, 1e8\niterations = 3\n[sybil]\npair_count=4\n")
    cfg = load_config(path)
    assert cfg.budgets == [75_000_000, 100_000_000]
    assert cfg.iterations == 3 and cfg.pair_count == 4


@pytest.mark.parametrize(
    "text",
    [
        "[experiment]\nbogus = 1\n",
        "[extra]\nseed = 1\n",
        "[experiment]\niterations = lots\n",
        "[experiment]\nbudgets = 1.5\n",
        "[experiment]\nreprobe = maybe\n",
    ],
)
def test_bad_config_file(tmp_path, text):
    path = tmp_path / "c.ini"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_validation_and_lookup():
    for kw in ({"iterations": 0}, {"strategies": ["greedy"]}, {"threshold_grid": [1.5]},
               {"path_selection": "longest"}, {"budget_scope": "global"}, {"max_hops": 30}):
        with pytest.raises(ConfigError):
            small_config(**kw).validate()
    assert find_section(ExperimentConfig(), "pair_count") == "sybil"
    with pytest.raises(ConfigError):
        find_section(ExperimentConfig(), "nope")
    cfg = ExperimentConfig()
    apply_setting(cfg, "topology", "mean_capacity", "2e6")
    assert cfg.topology.mean_capacity == 2e6


def test_flags_override_file(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\nseed = 3\niterations = 7\n[topology]\nhonest_node_count = 90\n")
    args = cli.build_parser().parse_args(
        ["exp1", "--config", str(path), "--seed", "5", "--budgets", "1e6,2e6"]
    )
    cfg = cli.config_from_args(args)
    assert (cfg.seed, cfg.iterations, cfg.budgets) == (5, 7, [1_000_000, 2_000_000])
    assert cfg.topology.honest_node_count == 90


def test_worker_env(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert worker_count() == 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert worker_count() == 3
    for bad in ("zero", "0"):
        monkeypatch.setenv(WORKERS_ENV, bad)
        with pytest.raises(ConfigError):
            worker_count()


def test_substreams_are_distinct():
    seeds = {
        substream_seed(0, it, purpose, extra)
        for it in range(20)
        for purpose in ("topology", "sybil", "random-planner", "probe", "htlc")
        for extra in range(3)
    }
    assert len(seeds) == 20 * 5 * 3
    assert substream_seed(0, 1, "htlc") == substream_seed(0, 1, "htlc")
    assert substream_seed(0, 1, "htlc") != substream_seed(1, 1, "htlc")


def test_build_network_is_seeded():
    cfg = small_config()
    a, b = build_network(cfg, 0), build_network(cfg, 0)
    assert a.graph.to_dict(a.pairs) == b.graph.to_dict(b.pairs)
    assert build_network(cfg, 1).graph.to_dict() != a.graph.to_dict()


def test_impossible_length_targets():
    cfg = small_config(target_mean_length=1.0, target_max_length=1, length_tolerance=0.0,
                       max_topology_attempts=2)
    with pytest.raises(TopologyCalibrationFailed):
        build_network(cfg, 0)


def test_exp1_shape_and_budget_respected(exp1_result):
    cfg = small_config()
    assert len(exp1_result.points) == 4 * 2 * 2
    for p in exp1_result.points:
        assert p.n == cfg.iterations
        assert p.mean["max_spend_fraction"] <= 1.0
        assert abs(sum(p.mean[f"pcr_{k}"] for k in ("0_25", "25_50", "50_75", "75_100"))
                   - 100.0) < 1e-9


def test_exp1_deterministic_across_workers(exp1_result, tmp_path):
    again = run_experiment_1(small_config(), workers=2)
    assert again.to_dict() == exp1_result.to_dict()
    a = render_report(exp1_result, tmp_path / "a", ["csv"])
    b = render_report(again, tmp_path / "b", ["csv"])
    assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]


def test_experiments_need_their_strategy():
    with pytest.raises(ConfigError):
        run_experiment_1(small_config(strategies=["random", "general"]))
    with pytest.raises(ConfigError):
        run_experiment_2(small_config(strategies=["minpay"]))


def test_exp2_skips_minpay():
    res = run_experiment_2(small_config(iterations=1), workers=1)
    assert {p.strategy for p in res.points} == {"spcr-max", "random", "general"}
    assert all(p.threshold is None for p in res.points)


def test_report_outputs(exp1_result, tmp_path):
    files = render_report(exp1_result, tmp_path)
    names = {p.name for p in files}
    assert "exp1_pcr_histogram.csv" in names and "exp1_gamma_vs_threshold.svg" in names
    assert "exp1_summary.txt" in names
    header = (tmp_path / "exp1_pcr_vs_threshold.csv").read_text().splitlines()[0]
    assert header == "strategy,budget,threshold,mean,std,n"
    svg = (tmp_path / "exp1_pcr_vs_threshold.svg").read_bytes()
    render_report(exp1_result, tmp_path, ["svg-charts"])
    assert (tmp_path / "exp1_pcr_vs_threshold.svg").read_bytes() == svg


def test_summary_ranks_gamma_ascending(exp1_result):
    text = summary_text(exp1_result)
    tail = text.split("ascending")[1].splitlines()[1:]
    gammas = [float(line.split()[1]) for line in tail if line.strip()]
    assert gammas == sorted(gammas) and len(gammas) == 4


def test_empty_result_rejected(exp1_result, tmp_path):
    empty = type(exp1_result)("exp1", "x", 1, [])
    with pytest.raises(ConfigError):
        render_report(empty, tmp_path)
    with pytest.raises(ConfigError):
        render_report(exp1_result, tmp_path, ["pdf"])


def test_result_json_round_trip(exp1_result, tmp_path):
    save_result(exp1_result, tmp_path / "r.json")
    assert load_result(tmp_path / "r.json").to_dict() == exp1_result.to_dict()


SMALL_FLAGS = ["--honest-node-count", "80", "--pair-count", "2", "--max-paths", "30"]


def test_cli_gen_attack_report(tmp_path, capsys, exp1_result):
    graph = tmp_path / "g.json"
    assert cli.main(["gen", *SMALL_FLAGS, "--out", str(graph)]) == 0
    doc = json.loads(graph.read_text())
    assert len(doc["pairs"]) == 2

    paths_csv = tmp_path / "paths.csv"
    rc = cli.main(["attack", *SMALL_FLAGS, "--graph", str(graph), "--strategy", "minpay",
                   "--budget", "5e6", "--threshold", "0.3", "--paths-csv", str(paths_csv)])
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].startswith("run_id,attack_name,threshold,budget,")
    assert lines[1].split(",")[1] == "minpay"
    assert len(paths_csv.read_text().splitlines()) > 1

    assert cli.main(["attack", *SMALL_FLAGS, "--graph", str(graph), "--strategy", "minpay"]) == 2

    save_result(exp1_result, tmp_path / "r.json")
    assert cli.main(["report", str(tmp_path / "r.json"), "--out", str(tmp_path / "rep"),
                     "--formats", "csv,summary-text"]) == 0
    assert (tmp_path / "rep" / "exp1_summary.txt").exists()
    assert not list((tmp_path / "rep").glob("*.svg"))


def test_cli_exp1_writes_outputs(tmp_path):
    out = tmp_path / "res"
    rc = cli.main(["exp1", *SMALL_FLAGS, "--iterations", "1", "--threshold-grid", "0.5",
                   "--budgets", "5e6", "--output-dir", str(out), "--formats", "csv"])
    assert rc == 0
    assert (out / "exp1_config.ini").exists() and (out / "exp1_result.json").exists()
    assert load_config(out / "exp1_config.ini").budgets == [5_000_000]


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["exp1", "--strategies", "random", "--iterations", "1"]) == 2
    assert "minpay" in capsys.readouterr().err
    assert cli.main(["report", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["exp1", "--formats", "pdf"])
