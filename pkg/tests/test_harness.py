import csv

import pytest

from contention_ppo.harness import (
    BASELINE_COLUMNS,
    TRAINING_COLUMNS,
    VALIDATION_COLUMNS,
    CheckpointMismatchError,
    ConfigFileNotFound,
    ConfigRangeError,
    ConfigSchemaError,
    export_metrics,
    parse_config,
    run_baseline,
    run_eval,
    run_sweep,
    run_train,
    spec_from_mapping,
)
from contention_ppo.harness.cli import main
from contention_ppo.harness.runner import eval_grid
from contention_ppo.neural import tensor_sets
from contention_ppo.radio import ConstantPolicy
from contention_ppo.training import evaluate_policy

SMALL = {
    "episode_len": 8,
    "eval_configs": 2,
    "eval_realizations": 2,
    "n_batch": 2,
    "ppo_hidden": 8,
    "dqn_hidden": 8,
    "dense_width": 6,
}


def _spec(tmp_path, name="run", **kw):
    return spec_from_mapping({**SMALL, "out_dir": str(tmp_path / name), **kw})


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_empty_config_gives_table_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    spec = parse_config(path)
    assert spec.net.n_bs == 4 and spec.net.smoothing_window == 10 and spec.net.episode_len == 2000
    assert spec.train.clip_eps == 0.2 and spec.train.gamma == 1 - 1e-6
    assert spec.train.n_batch == 8 and spec.train.iterations == 800 and spec.train.lr == 4e-4
    assert spec.eval_configs == 15 and spec.eval_realizations == 20 and spec.train.val_every == 50


def test_layout2_from_rect_length(tmp_path):
    path = tmp_path / "l2.yaml"
    path.write_text("rect_length_m: 60\nalgorithm: dqn\n")
    spec = parse_config(path)
    assert spec.net.rect_length_m == 60.0 and spec.algorithm == "dqn"
    assert spec_from_mapping({"layout": "L2"}).net.rect_length_m == 60.0


def test_out_of_range(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("gamma: 1.5\n")
    with pytest.raises(ConfigRangeError, match="gamma"):
        parse_config(path)


def test_unknown_key_and_type_errors():
    with pytest.raises(ConfigSchemaError, match="unknown"):
        spec_from_mapping({"learning_rate": 0.1})
    with pytest.raises(ConfigSchemaError):
        spec_from_mapping({"n_batch": 2.5})
    with pytest.raises(ConfigSchemaError):
        spec_from_mapping({"centralized_critic": "yes"})
    with pytest.raises(ConfigRangeError):
        spec_from_mapping({"algorithm": "sarsa"})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigFileNotFound):
        parse_config(tmp_path / "nope.yaml")


def test_nested_yaml_rejected(tmp_path):
    path = tmp_path / "nested.yaml"
    path.write_text("train:\n  lr: 0.1\n")
    with pytest.raises(ConfigSchemaError):
        parse_config(path)


def test_export_metrics_headers_only(tmp_path):
    paths = export_metrics(tmp_path / "fresh")
    assert _rows(paths["training"]) == [TRAINING_COLUMNS]
    assert _rows(paths["validation"]) == [VALIDATION_COLUMNS]
    assert _rows(paths["baselines"]) == [BASELINE_COLUMNS]


def test_zero_iterations_only_baselines(tmp_path):
    spec = _spec(tmp_path, iterations=0)
    assert run_train(spec) == 0
    out = tmp_path / "run"
    assert len(_rows(out / "validation.csv")) == 1
    assert len(_rows(out / "training.csv")) == 1
    base = _rows(out / "baselines.csv")
    algos = [r[0] for r in base[1:]]
    assert algos.count("ed-sweep") == 15
    assert {"pf", "ed", "adaptive-ed"} <= set(algos)


def test_validation_cadence_and_checkpoints(tmp_path):
    spec = _spec(tmp_path, iterations=5, val_every=2, rate_every=4)
    run_train(spec)
    out = tmp_path / "run"
    val = _rows(out / "validation.csv")
    assert [int(r[0]) for r in val[1:]] == [0, 2, 4, 5]
    # sum/max rate only on the rate cadence and at the end
    assert [bool(r[4]) for r in val[1:]] == [True, False, True, True]
    assert len(_rows(out / "training.csv")) == 6
    ckpts = sorted(p.name for p in (out / "checkpoints").iterdir())
    assert ckpts == ["final.ckpt", "iter_000000.ckpt", "iter_000002.ckpt", "iter_000004.ckpt", "iter_000005.ckpt"]
    assert len(tensor_sets(out / "checkpoints" / "final.ckpt")) == 12


def test_run_train_bitwise_deterministic(tmp_path):
    for name in ("a", "b"):
        run_train(_spec(tmp_path, name, iterations=2, val_every=1))
    for f in ("training.csv", "validation.csv", "baselines.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_baselines_independent_of_training(tmp_path):
    run_train(_spec(tmp_path, "t", iterations=2))
    run_baseline(_spec(tmp_path, "b"))
    assert (tmp_path / "t" / "baselines.csv").read_bytes() == (tmp_path / "b" / "baselines.csv").read_bytes()


def test_eval_round_trip_matches_validation(tmp_path):
    spec = _spec(tmp_path, iterations=2, algorithm="dqn")
    run_train(spec)
    out = tmp_path / "run"
    summary = run_eval(spec, out / "checkpoints" / "final.ckpt")
    assert summary["algorithm"] == "dqn" and summary["iteration"] == 2
    last = _rows(out / "validation.csv")[-1]
    assert float(last[2]) == summary["reward_mean"]
    assert float(last[4]) == summary["sum_rate_mbps"]


def test_eval_rejects_mismatched_checkpoint(tmp_path):
    spec = _spec(tmp_path, iterations=1)
    run_train(spec)
    other = _spec(tmp_path, "other", n_bs=3)
    with pytest.raises(CheckpointMismatchError):
        run_eval(other, tmp_path / "run" / "checkpoints" / "final.ckpt")


def test_never_transmit_sum_rate_vanishes(tmp_path):
    spec = _spec(tmp_path, episode_len=300)
    res = evaluate_policy(ConstantPolicy(0), eval_grid(spec), spec.net, spec.train.gamma)
    assert res.sum_rate_mean < 1e-6


def test_sweep_outputs(tmp_path):
    sweep = run_sweep(_spec(tmp_path, "s"))
    rows = _rows(tmp_path / "s" / "sweep.csv")
    assert len(rows) == 16 and float(rows[1][0]) == -22.0
    per = _rows(tmp_path / "s" / "sweep_per_config.csv")
    assert len(per) == 1 + 2 * 15
    assert sum(int(r[3]) for r in per[1:]) == 2
    assert len(sweep.thresholds) == 15


# ---------------------------------------------------------------- CLI


def _cli(tmp_path, *args):
    sets = [x for k, v in SMALL.items() for x in ("--set", f"{k}={v}")]
    return main([*args, *sets])


def test_cli_train_eval_baseline(tmp_path, capsys):
    out = str(tmp_path / "cli")
    assert _cli(tmp_path, "train", "--out", out, "--seed", "3", "--set", "iterations=1") == 0
    assert _cli(tmp_path, "eval", "--out", out, "--checkpoint", f"{out}/checkpoints/final.ckpt") == 0
    assert '"reward_mean"' in capsys.readouterr().out
    assert _cli(tmp_path, "baseline", "--out", out) == 0
    assert _cli(tmp_path, "sweep-ed", "--out", out, "-v") == 0
    assert (tmp_path / "cli" / "sweep.csv").exists()


def test_cli_config_errors_exit_2(tmp_path, capsys):
    assert main(["train", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert "not found" in capsys.readouterr().err
    assert main(["baseline", "--set", "gamma=1.5"]) == 2
    assert main(["baseline", "--set", "nonsense"]) == 2
    assert main(["train", "--seed", "-1"]) == 2


def test_cli_bad_checkpoint_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    assert _cli(tmp_path, "eval", "--out", str(tmp_path), "--checkpoint", str(bad)) == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "magic" in err


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("".join(f"{k}: {v}\n" for k, v in SMALL.items()) + "algorithm: pf\n")
    assert main(["baseline", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "baselines.csv").exists()
