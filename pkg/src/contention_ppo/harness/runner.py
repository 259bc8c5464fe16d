"""Experiment orchestration: training with periodic validation, evaluation, baselines.

Output files (all CSV, header first, one flushed row at a time):

``training.csv``    iteration, algorithm, reward_mean, entropy, loss_clip, loss_con, loss_eos, lr, epsilon
``validation.csv``  iteration, algorithm, reward_mean, reward_stderr, sum_rate_mbps, max_rate_mbps
``baselines.csv``   algorithm, threshold_dbm, reward_mean, reward_stderr, sum_rate_mbps, max_rate_mbps
``sweep.csv``       threshold_dbm, reward_mean, reward_stderr, sum_rate_mbps, max_rate_mbps
``sweep_per_config.csv``  config, threshold_dbm, reward_mean, best
``eval.csv``        algorithm, iteration, reward_mean, reward_stderr, sum_rate_mbps, max_rate_mbps

Blank cells mean "not applicable" (e.g. entropy for DQN, rates off the rate cadence).
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from pathlib import Path

import numpy as np

from ..baselines import EnergyDetect, ProportionalFair, ed_sweep_thresholds, sweep_ed
from ..dqn import DQNTrainer
from ..neural import load_checkpoint, save_checkpoint
from ..ppo import PPOTrainer
from ..training import EvalGrid, EvalResult, evaluate_policy
from .spec import ConfigRangeError, ExperimentSpec

log = logging.getLogger(__name__)

TRAINING_COLUMNS = ["iteration", "algorithm", "reward_mean", "entropy", "loss_clip", "loss_con", "loss_eos", "lr", "epsilon"]
VALIDATION_COLUMNS = ["iteration", "algorithm", "reward_mean", "reward_stderr", "sum_rate_mbps", "max_rate_mbps"]
BASELINE_COLUMNS = ["algorithm", "threshold_dbm", "reward_mean", "reward_stderr", "sum_rate_mbps", "max_rate_mbps"]
SWEEP_COLUMNS = ["threshold_dbm", "reward_mean", "reward_stderr", "sum_rate_mbps", "max_rate_mbps"]
SWEEP_CONFIG_COLUMNS = ["config", "threshold_dbm", "reward_mean", "best"]
EVAL_COLUMNS = ["algorithm", "iteration", "reward_mean", "reward_stderr", "sum_rate_mbps", "max_rate_mbps"]

TRAINERS = {"ppo": PPOTrainer, "dqn": DQNTrainer}


class CheckpointMismatchError(RuntimeError):
    pass


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class CsvLog:
    def __init__(self, path: Path, columns: list[str]):
        self.columns = columns
        self.fh = open(path, "w", newline="")
        self.writer = csv.writer(self.fh)
        self.writer.writerow(columns)
        self.fh.flush()

    def write(self, row: dict) -> None:
        self.writer.writerow([_cell(row.get(c)) for c in self.columns])
        self.fh.flush()

    def close(self) -> None:
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def export_metrics(run_dir) -> dict[str, Path]:
    """Create the run directory with headers-only metric files."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, cols in (("training", TRAINING_COLUMNS), ("validation", VALIDATION_COLUMNS), ("baselines", BASELINE_COLUMNS)):
        paths[name] = run_dir / f"{name}.csv"
        CsvLog(paths[name], cols).close()
    return paths


def eval_grid(spec: ExperimentSpec) -> EvalGrid:
    return EvalGrid.build(spec.net, spec.seed, spec.eval_configs, spec.eval_realizations)


def _thresholds(spec: ExperimentSpec) -> list[float]:
    return ed_sweep_thresholds(spec.sweep_high_dbm, spec.sweep_low_dbm, spec.sweep_step_db)


def _result_row(res: EvalResult) -> dict:
    return {
        "reward_mean": res.reward_mean,
        "reward_stderr": res.reward_stderr,
        "sum_rate_mbps": res.sum_rate_mean,
        "max_rate_mbps": res.max_rate_mean,
    }


def _stats_row(values: np.ndarray, sums: np.ndarray, maxes: np.ndarray) -> dict:
    values = np.ravel(values)
    return _result_row(EvalResult(values, np.ravel(sums), np.ravel(maxes), np.empty(0)))


def baseline_rows(spec: ExperimentSpec, grid: EvalGrid) -> list[dict]:
    """PF, fixed ED, adaptive ED and one row per swept threshold, all on ``grid``."""
    net, gamma = spec.net, spec.train.gamma
    rows = [{"algorithm": "pf", **_result_row(evaluate_policy(ProportionalFair(net), grid, net, gamma))}]
    fixed = evaluate_policy(EnergyDetect(spec.ed_threshold_dbm), grid, net, gamma)
    rows.append({"algorithm": "ed", "threshold_dbm": spec.ed_threshold_dbm, **_result_row(fixed)})
    sweep = sweep_ed(net, grid.configs, grid.seeds, _thresholds(spec), gamma)
    rows.append({"algorithm": "adaptive-ed", **_stats_row(*sweep.adaptive())})
    for k, thr in enumerate(sweep.thresholds):
        rows.append(
            {
                "algorithm": "ed-sweep",
                "threshold_dbm": thr,
                **_stats_row(sweep.rewards[k], sweep.sum_rate_mbps[k], sweep.max_rate_mbps[k]),
            }
        )
    return rows


def run_baseline(spec: ExperimentSpec) -> list[dict]:
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = baseline_rows(spec, eval_grid(spec))
    with CsvLog(out / "baselines.csv", BASELINE_COLUMNS) as f:
        for row in rows:
            f.write(row)
    return rows


def run_sweep(spec: ExperimentSpec):
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = eval_grid(spec)
    sweep = sweep_ed(spec.net, grid.configs, grid.seeds, _thresholds(spec), spec.train.gamma)
    with CsvLog(out / "sweep.csv", SWEEP_COLUMNS) as f:
        for k, thr in enumerate(sweep.thresholds):
            f.write({"threshold_dbm": thr, **_stats_row(sweep.rewards[k], sweep.sum_rate_mbps[k], sweep.max_rate_mbps[k])})
    best = sweep.per_config_best()
    with CsvLog(out / "sweep_per_config.csv", SWEEP_CONFIG_COLUMNS) as f:
        for c in range(len(grid.configs)):
            for k, thr in enumerate(sweep.thresholds):
                f.write({"config": c, "threshold_dbm": thr, "reward_mean": float(sweep.rewards[k, c].mean()), "best": int(best[c] == k)})
    return sweep


def make_trainer(spec: ExperimentSpec):
    if spec.algorithm not in TRAINERS:
        raise ConfigRangeError(f"training needs algorithm ppo or dqn, got {spec.algorithm!r}")
    return TRAINERS[spec.algorithm](spec.net, spec.train, spec.seed)


def _checkpoint_extra(spec: ExperimentSpec, trainer) -> dict:
    return {
        "algorithm": trainer.algorithm,
        "iteration": trainer.iteration,
        "seed": spec.seed,
        "net": dataclasses.asdict(spec.net),
        "train": dataclasses.asdict(spec.train),
    }


def write_checkpoint(path, spec: ExperimentSpec, trainer) -> None:
    nets, opts = trainer.named_nets()
    save_checkpoint(path, nets, opts, extra=_checkpoint_extra(spec, trainer))


def read_checkpoint(path, spec: ExperimentSpec):
    """Rebuild a trainer from a checkpoint, checking it fits the spec's network."""
    nets, opts, extra = load_checkpoint(path)
    algorithm = extra.get("algorithm")
    if algorithm not in TRAINERS:
        raise CheckpointMismatchError(f"{path}: unknown algorithm {algorithm!r}")
    stored_n = extra.get("net", {}).get("n_bs")
    if stored_n != spec.net.n_bs:
        raise CheckpointMismatchError(f"{path}: checkpoint has {stored_n} BSs, spec has {spec.net.n_bs}")
    policy_key = "bs0/pi_con" if algorithm == "ppo" else "bs0/q_con"
    if policy_key not in nets or nets[policy_key].spec.n_in != 3 + spec.net.n_bs + 1:
        raise CheckpointMismatchError(f"{path}: policy networks do not fit an N={spec.net.n_bs} network")
    try:
        return TRAINERS[algorithm].from_named_nets(spec.net, spec.train, spec.seed, nets, opts, extra.get("iteration", 0))
    except KeyError as exc:
        raise CheckpointMismatchError(f"{path}: missing network {exc}") from None


def run_train(spec: ExperimentSpec) -> int:
    """Train, validating every ``val_every`` iterations (and after the last one)."""
    trainer = make_trainer(spec)
    out = Path(spec.out_dir)
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    grid = eval_grid(spec)
    cfg = spec.train

    with CsvLog(out / "baselines.csv", BASELINE_COLUMNS) as f:
        for row in baseline_rows(spec, grid):
            f.write(row)

    training = CsvLog(out / "training.csv", TRAINING_COLUMNS)
    validation = CsvLog(out / "validation.csv", VALIDATION_COLUMNS)

    def validate():
        it = trainer.iteration
        res = evaluate_policy(trainer.greedy_policy(), grid, spec.net, cfg.gamma)
        row = {"iteration": it, "algorithm": trainer.algorithm, "reward_mean": res.reward_mean, "reward_stderr": res.reward_stderr}
        if it % cfg.rate_every == 0 or it == cfg.iterations:
            row.update(sum_rate_mbps=res.sum_rate_mean, max_rate_mbps=res.max_rate_mean)
        validation.write(row)
        write_checkpoint(ckpt_dir / f"iter_{it:06d}.ckpt", spec, trainer)
        log.info("iteration %d: validation reward %.4f", it, res.reward_mean)

    try:
        while trainer.iteration < cfg.iterations:
            if trainer.iteration % cfg.val_every == 0:
                validate()
            stats = trainer.train_iteration()
            training.write({**stats, "algorithm": trainer.algorithm})
        if cfg.iterations > 0:
            validate()
            write_checkpoint(ckpt_dir / "final.ckpt", spec, trainer)
    except KeyboardInterrupt:
        write_checkpoint(ckpt_dir / "interrupted.ckpt", spec, trainer)
        raise
    finally:
        training.close()
        validation.close()
    return 0


def run_eval(spec: ExperimentSpec, checkpoint) -> dict:
    trainer = read_checkpoint(checkpoint, spec)
    res = evaluate_policy(trainer.greedy_policy(), eval_grid(spec), spec.net, spec.train.gamma)
    summary = {"algorithm": trainer.algorithm, "iteration": trainer.iteration, **_result_row(res)}
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with CsvLog(out / "eval.csv", EVAL_COLUMNS) as f:
        f.write(summary)
    return summary
