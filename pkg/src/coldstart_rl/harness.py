"""Experiment orchestration: config, training runs, evaluation grids, tables.

An experiment is a grid of (strategy x display size) cells. Agents are
trained per (variant, display size, run seed) and evaluated greedily on
held-out test cold users; ranking strategies evaluate directly. Every cell
stores its per-user RMSE samples, so the same results feed both the summary
table and the pairwise significance tests.

Determinism: the data/split/model side is driven entirely by `data_seed`,
each training run by its run seed, and evaluation episodes by
(data_seed, user). Two runs from the same config produce identical tables.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats

from . import dataset as ds
from .agent import AgentConfig, QAgent, Transition, Variant, epsilon_at
from .dataset import Dataset, SyntheticConfig
from .environment import InterviewEnv, build_pool, evaluate_strategy
from .errors import ValidationError
from .mf import FactorModel, MFHyper, train_mf
from .strategies import StrategyKind, random_strategy, rank_items

STRATEGY_ROWS = (
    "popularity",
    "entropy",
    "gini",
    "variance",
    "error",
    "popent",
    "popgini",
    "popvar",
    "poperror",
    "random",
)

DISPLAY_NAMES = {
    "dqn": "Standard DQN",
    "double": "Double DQN",
    "dueling": "Dueling DQN",
    "popularity": "Popularity",
    "entropy": "Entropy",
    "gini": "Gini",
    "variance": "Variance",
    "error": "Error",
    "popent": "PopEnt",
    "popgini": "PopGini",
    "popvar": "PopVar",
    "poperror": "PopError",
    "random": "Random",
}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str | None = None
    synthetic: SyntheticConfig | None = None
    data_seed: int = 0
    cold_fraction: float = 0.25
    cold_test_fraction: float = 0.2
    mf: MFHyper = MFHyper()
    agent: AgentConfig = AgentConfig()
    pool_size: int = 200
    fold_regularization: float | None = None  # None: reuse mf.regularization
    rmse_floor: float = 1e-3
    terminal_reward: bool = False
    full_retrain: bool = False
    display_sizes: tuple[int, ...] = (10, 25, 50, 100)
    episodes: int = 2000
    epsilon_decay_steps: int | None = None  # None: decay_fraction of the run
    epsilon_decay_fraction: float = 0.8
    variants: tuple[str, ...] = ("dqn", "double", "dueling")
    strategies: tuple[str, ...] = STRATEGY_ROWS
    strategy_w1: float = 1.0
    strategy_w2: float = 1.0
    strategy_smoothing: float = 1.0
    seeds: tuple[int, ...] = (0,)
    out_dir: str = "runs"

    def validate(self) -> None:
        if (self.dataset_path is None) == (self.synthetic is None):
            raise ValidationError("configure exactly one of dataset.path or synthetic.*")
        if not self.display_sizes:
            raise ValidationError("display_sizes must be non-empty")
        if any(k < 1 or k > self.pool_size for k in self.display_sizes):
            raise ValidationError(f"display sizes must be in [1, {self.pool_size}]")
        if self.episodes < 1:
            raise ValidationError("episodes must be >= 1")
        if not self.seeds:
            raise ValidationError("need at least one seed")
        if not 0.0 < self.cold_test_fraction < 1.0:
            raise ValidationError("cold_test_fraction must be in (0, 1)")
        for name in self.variants:
            Variant(name)
        for name in self.strategies:
            if name != "random":
                StrategyKind(name)
        self.mf.validate()
        if self.synthetic is not None:
            self.synthetic.validate()

    @property
    def rows(self) -> tuple[str, ...]:
        return tuple(self.variants) + tuple(self.strategies)


def _coerce(value: str, like):
    if isinstance(like, bool):
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValidationError(f"expected a boolean, got {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def _int_tuple(value: str) -> tuple[int, ...]:
    return tuple(int(part) for part in value.split(",") if part.strip())


def _str_tuple(value: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in value.split(",") if part.strip())


def parse_config_file(path) -> dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment; blank lines ignored."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{line_no}: expected key = value")
            key, value = line.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    mapping = dict(mapping)
    cfg = ExperimentConfig()
    mf_kwargs: dict = {}
    agent_kwargs: dict = {}
    synth_kwargs: dict = {}
    top_kwargs: dict = {}

    top_keys = {
        "dataset.path": ("dataset_path", "x"),
        "dataset.cold_fraction": ("cold_fraction", 0.25),
        "dataset.cold_test_fraction": ("cold_test_fraction", 0.2),
        "dataset.seed": ("data_seed", 0),
        "env.pool_size": ("pool_size", 200),
        "env.rmse_floor": ("rmse_floor", 1e-3),
        "env.fold_regularization": ("fold_regularization", 0.01),
        "env.terminal_reward": ("terminal_reward", False),
        "env.full_retrain": ("full_retrain", False),
        "experiment.episodes": ("episodes", 2000),
        "experiment.epsilon_decay_fraction": ("epsilon_decay_fraction", 0.8),
        "experiment.out": ("out_dir", "x"),
        "strategy.w1": ("strategy_w1", 1.0),
        "strategy.w2": ("strategy_w2", 1.0),
        "strategy.smoothing": ("strategy_smoothing", 1.0),
        "w1": ("strategy_w1", 1.0),
        "w2": ("strategy_w2", 1.0),
        "smoothing": ("strategy_smoothing", 1.0),
    }
    for key, value in mapping.items():
        if key in top_keys:
            attr, like = top_keys[key]
            top_kwargs[attr] = _coerce(value, like)
        elif key == "experiment.display_sizes":
            top_kwargs["display_sizes"] = _int_tuple(value)
        elif key == "experiment.seeds":
            top_kwargs["seeds"] = _int_tuple(value)
        elif key == "experiment.variants":
            top_kwargs["variants"] = _str_tuple(value)
        elif key in ("experiment.strategies", "strategy"):
            top_kwargs["strategies"] = _str_tuple(value)
        elif key.startswith("mf."):
            name = key[3:]
            if not hasattr(cfg.mf, name):
                raise ValidationError(f"unknown config key {key!r}")
            mf_kwargs[name] = _coerce(value, getattr(cfg.mf, name))
        elif key.startswith("synthetic."):
            name = key[len("synthetic."):]
            like = 0.0 if name in ("noise_rate", "return_rate") else 0
            synth_kwargs[name] = _coerce(value, like)
        elif key == "agent.hidden":
            agent_kwargs["hidden"] = _int_tuple(value)
        elif key == "agent.epsilon_decay_steps":
            top_kwargs["epsilon_decay_steps"] = int(value)
        elif key.startswith("agent."):
            name = key[len("agent."):]
            if not hasattr(cfg.agent, name):
                raise ValidationError(f"unknown config key {key!r}")
            agent_kwargs[name] = _coerce(value, getattr(cfg.agent, name))
        else:
            raise ValidationError(f"unknown config key {key!r}")

    if mf_kwargs:
        top_kwargs["mf"] = replace(cfg.mf, **mf_kwargs)
    if agent_kwargs:
        top_kwargs["agent"] = replace(cfg.agent, **agent_kwargs)
    if synth_kwargs:
        top_kwargs["synthetic"] = SyntheticConfig(
            num_users=synth_kwargs.pop("num_users"),
            num_items=synth_kwargs.pop("num_items"),
            num_clusters=synth_kwargs.pop("num_clusters", 1),
            interactions_per_user=synth_kwargs.pop("interactions_per_user", 20),
            noise_rate=synth_kwargs.pop("noise_rate", 0.0),
            return_rate=synth_kwargs.pop("return_rate", 0.0),
        )
        if synth_kwargs:
            raise ValidationError(f"unknown synthetic keys {sorted(synth_kwargs)}")
    config = replace(cfg, **top_kwargs)
    config.validate()
    return config


def load_config(path, **overrides) -> ExperimentConfig:
    config = config_from_mapping(parse_config_file(path))
    if overrides:
        config = replace(config, **overrides)
        config.validate()
    return config


# ---------------------------------------------------------------------------
# Experiment preparation (dataset, split, model, pool, cold-user split)


@dataclass
class Prepared:
    data: Dataset
    warm: Dataset
    model: FactorModel
    pool: np.ndarray
    train_users: list
    test_users: list


@lru_cache(maxsize=4)
def prepare(config: ExperimentConfig) -> Prepared:
    """Deterministic experiment setup, cached per process."""
    config.validate()
    if config.synthetic is not None:
        data = ds.generate_synthetic(config.synthetic, config.data_seed)
    else:
        data = ds.load_interactions(config.dataset_path)
    split = ds.split_cold_warm(data, config.cold_fraction, config.data_seed)
    model = train_mf(split.warm, config.mf, config.data_seed)
    pool = build_pool(split.warm, config.pool_size)

    eligible = [cu for cu in split.cold_users if len(cu[1]) >= 2]
    if not eligible:
        raise ValidationError("no cold user has enough hidden feedback")
    rng = np.random.default_rng(np.random.SeedSequence((config.data_seed, 0xC01D)))
    order = rng.permutation(len(eligible))
    n_test = max(1, math.floor(config.cold_test_fraction * len(eligible) + 0.5))
    test_users = [eligible[int(i)] for i in order[:n_test]]
    train_users = [eligible[int(i)] for i in order[n_test:]] or test_users
    return Prepared(data, split.warm, model, pool, train_users, test_users)


def make_env(config: ExperimentConfig, prepared: Prepared, k: int) -> InterviewEnv:
    fold_reg = (
        config.mf.regularization
        if config.fold_regularization is None
        else config.fold_regularization
    )
    return InterviewEnv(
        prepared.model,
        prepared.pool,
        k,
        fold_regularization=fold_reg,
        rmse_floor=config.rmse_floor,
        terminal_reward=config.terminal_reward,
        full_retrain=config.full_retrain,
        warm_data=prepared.warm if config.full_retrain else None,
        mf_hyper=config.mf if config.full_retrain else None,
        retrain_seed=config.data_seed,
    )


def agent_config_for(config: ExperimentConfig, variant: str, k: int) -> AgentConfig:
    decay = config.epsilon_decay_steps
    if decay is None:
        decay = max(1, int(round(config.epsilon_decay_fraction * config.episodes * k)))
    return replace(config.agent, variant=Variant(variant), epsilon_decay_steps=decay)


def checkpoint_path(out_dir, variant: str, k: int, seed: int) -> str:
    return str(Path(out_dir) / "checkpoints" / f"{variant}-k{k}-s{seed}")


# ---------------------------------------------------------------------------
# Training


def run_training(
    config: ExperimentConfig,
    variant: str,
    display_size: int,
    seed: int,
    prepared: Prepared | None = None,
) -> str:
    """Train one agent cell and persist its checkpoint and training log."""
    prepared = prepared or prepare(config)
    env = make_env(config, prepared, display_size)
    acfg = agent_config_for(config, variant, display_size)
    agent = QAgent(acfg, state_dim=env.pool_size, n_actions=env.pool_size, seed=seed)

    episode_rng = np.random.default_rng(np.random.SeedSequence((seed, 11)))
    queue: list[int] = []
    log_rows = []
    global_step = 0
    for episode in range(config.episodes):
        if not queue:
            queue = [int(i) for i in episode_rng.permutation(len(prepared.train_users))]
        user = prepared.train_users[queue.pop()]
        # Reveal/validation splits are keyed by (data_seed, user), not by
        # episode: a user's episode reward is then stationary across the run,
        # which keeps replay targets comparable. Training and test users are
        # disjoint, so the fixed splits leak nothing into evaluation.
        state = env.reset(user, np.random.SeedSequence((config.data_seed, user[0])))
        losses = []
        rewards = []
        done = False
        while not done:
            eps = epsilon_at(acfg, global_step)
            action = agent.act(state.shown, eps)
            next_state, reward, done = env.step(state, action)
            agent.observe(Transition(state.shown, action, reward, next_state.shown, done))
            loss = agent.train_from_buffer()
            global_step += 1
            agent.maybe_sync_target(global_step)
            if loss is not None:
                losses.append(loss)
            rewards.append(reward)
            state = next_state
        log_rows.append(
            (
                episode,
                global_step,
                float(np.mean(losses)) if losses else float("nan"),
                float(np.mean(rewards)),
                env.validation_rmse(state),
            )
        )
    agent.global_step = global_step

    ckpt = checkpoint_path(config.out_dir, variant, display_size, seed)
    Path(ckpt).parent.mkdir(parents=True, exist_ok=True)
    agent.save(ckpt)
    log_dir = Path(config.out_dir) / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    log_path = log_dir / f"{variant}-k{display_size}-s{seed}.csv"
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("episode,global_step,mean_loss,mean_reward,final_rmse\n")
        for row in log_rows:
            fh.write(f"{row[0]},{row[1]},{row[2]:.6f},{row[3]:.6f},{row[4]:.6f}\n")
    return ckpt


def _train_cell(args) -> str:
    config, variant, display_size, seed = args
    return run_training(config, variant, display_size, seed)


def job_parallelism() -> int:
    value = os.environ.get("COLDSTART_RL_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise ValidationError("COLDSTART_RL_THREADS must be an integer") from None


def train_all(config: ExperimentConfig, prepared: Prepared | None = None) -> list[str]:
    """Train every (variant, display size, seed) cell, optionally in parallel."""
    jobs = [
        (config, variant, k, seed)
        for variant in config.variants
        for k in config.display_sizes
        for seed in config.seeds
    ]
    workers = job_parallelism()
    if workers == 1 or len(jobs) == 1:
        prepared = prepared or prepare(config)
        return [run_training(c, v, k, s, prepared) for c, v, k, s in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_train_cell, jobs))


# ---------------------------------------------------------------------------
# Evaluation and results


@dataclass
class Cell:
    samples: tuple[float, ...] = ()

    @property
    def missing(self) -> bool:
        return not self.samples

    @property
    def mean(self) -> float | None:
        return float(np.mean(self.samples)) if self.samples else None


@dataclass
class ResultsTable:
    display_sizes: tuple[int, ...]
    rows: tuple[str, ...]
    cells: dict[tuple[str, int], Cell] = field(default_factory=dict)

    def cell(self, row: str, k: int) -> Cell:
        return self.cells.get((row, k), Cell())

    def row_mean(self, row: str) -> float | None:
        means = [
            self.cell(row, k).mean for k in self.display_sizes if not self.cell(row, k).missing
        ]
        return float(np.mean(means)) if means else None

    def to_jsonable(self) -> dict:
        return {
            "display_sizes": list(self.display_sizes),
            "rows": list(self.rows),
            "cells": {
                f"{row}|{k}": list(self.cell(row, k).samples)
                for row in self.rows
                for k in self.display_sizes
            },
        }

    @classmethod
    def from_jsonable(cls, payload: dict) -> "ResultsTable":
        table = cls(
            tuple(payload["display_sizes"]),
            tuple(payload["rows"]),
        )
        for key, samples in payload["cells"].items():
            row, k = key.rsplit("|", 1)
            table.cells[(row, int(k))] = Cell(tuple(float(x) for x in samples))
        return table


def run_evaluation(config: ExperimentConfig, prepared: Prepared | None = None) -> ResultsTable:
    """Fill the strategy x display-size grid on the held-out test users.

    Agent cells with no stored checkpoint are marked missing and the run
    continues.
    """
    prepared = prepared or prepare(config)
    table = ResultsTable(tuple(config.display_sizes), config.rows)
    for k in config.display_sizes:
        env = make_env(config, prepared, k)
        for variant in config.variants:
            samples: list[float] = []
            for seed in config.seeds:
                ckpt = checkpoint_path(config.out_dir, variant, k, seed)
                if not Path(ckpt + ".meta.json").exists():
                    continue
                agent = QAgent.load(ckpt)
                samples.extend(
                    evaluate_strategy(env, prepared.test_users, agent, config.data_seed)
                )
            table.cells[(variant, k)] = Cell(tuple(samples))
        for name in config.strategies:
            if name == "random":
                samples = []
                for seed in config.seeds:
                    items = random_strategy(prepared.pool, k, seed)
                    samples.extend(
                        evaluate_strategy(env, prepared.test_users, items, config.data_seed)
                    )
            else:
                ranked = rank_items(
                    StrategyKind(name),
                    prepared.warm,
                    prepared.pool,
                    k,
                    w1=config.strategy_w1,
                    w2=config.strategy_w2,
                    smoothing=config.strategy_smoothing,
                )
                samples = evaluate_strategy(env, prepared.test_users, ranked, config.data_seed)
            table.cells[(name, k)] = Cell(tuple(samples))
    return table


# ---------------------------------------------------------------------------
# Statistics


@dataclass
class PValueGrid:
    rows: tuple[str, ...]
    p: np.ndarray
    degenerate: np.ndarray


def t_test_matrix(results: ResultsTable, per_user: bool = False) -> PValueGrid:
    """One-tailed pooled-variance two-sample t-tests on mean RMSE.

    p[row, col] tests H1: mu_row < mu_col. Samples per strategy are the
    per-display-size mean RMSEs (one per column) unless `per_user`, which
    pools the raw per-user RMSEs instead. Zero pooled variance is reported
    as p = 0.5 and flagged.
    """
    samples: dict[str, np.ndarray] = {}
    for row in results.rows:
        if per_user:
            values = [
                x for k in results.display_sizes for x in results.cell(row, k).samples
            ]
        else:
            values = [
                results.cell(row, k).mean
                for k in results.display_sizes
                if not results.cell(row, k).missing
            ]
        if len(values) < 2:
            raise ValidationError(f"strategy {row!r} has fewer than 2 RMSE samples")
        samples[row] = np.asarray(values, dtype=np.float64)

    n = len(results.rows)
    p = np.full((n, n), 0.5)
    degenerate = np.zeros((n, n), dtype=bool)
    for a in range(n):
        for b in range(a + 1, n):
            xs, ys = samples[results.rows[a]], samples[results.rows[b]]
            n1, n2 = len(xs), len(ys)
            # pooled variance is zero exactly when both samples are constant
            if (xs == xs[0]).all() and (ys == ys[0]).all():
                degenerate[a, b] = degenerate[b, a] = True
                continue
            pooled = ((n1 - 1) * xs.var(ddof=1) + (n2 - 1) * ys.var(ddof=1)) / (n1 + n2 - 2)
            t = (xs.mean() - ys.mean()) / np.sqrt(pooled * (1 / n1 + 1 / n2))
            p_ab = float(stats.t.cdf(t, df=n1 + n2 - 2))
            p[a, b] = p_ab
            p[b, a] = 1.0 - p_ab
    return PValueGrid(results.rows, p, degenerate)


def testable_subtable(results: ResultsTable, per_user: bool = False) -> ResultsTable:
    """Drop rows without enough samples for a t-test (e.g. missing agents)."""
    def enough(row: str) -> bool:
        if per_user:
            count = sum(len(results.cell(row, k).samples) for k in results.display_sizes)
        else:
            count = sum(not results.cell(row, k).missing for k in results.display_sizes)
        return count >= 2

    keep = tuple(row for row in results.rows if enough(row))
    sub = ResultsTable(results.display_sizes, keep)
    for row in keep:
        for k in results.display_sizes:
            sub.cells[(row, k)] = results.cell(row, k)
    return sub


def significance_stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


# ---------------------------------------------------------------------------
# Emission


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=10,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def emit_tables(
    results: ResultsTable,
    p_values: PValueGrid,
    out_dir,
    config: ExperimentConfig | None = None,
    wall_clock_s: float | None = None,
) -> dict[str, str]:
    """Write rmse.{csv,md}, pvalues.{csv,md}, results.json and manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sizes = results.display_sizes
    labels = {row: DISPLAY_NAMES.get(row, row) for row in results.rows}

    def fmt(value: float | None, digits: int) -> str:
        return "" if value is None else f"{value:.{digits}f}"

    # rmse.csv: 6-decimal fixed point, empty field for missing cells.
    rmse_csv = out / "rmse.csv"
    with open(rmse_csv, "w", encoding="utf-8") as fh:
        fh.write("strategy," + ",".join(str(k) for k in sizes) + ",mean\n")
        for row in results.rows:
            cells = [fmt(results.cell(row, k).mean, 6) for k in sizes]
            fh.write(",".join([labels[row], *cells, fmt(results.row_mean(row), 6)]) + "\n")

    # rmse.md: bold the column minimum (mean column included).
    col_min: dict[object, float] = {}
    for k in sizes:
        present = [results.cell(r, k).mean for r in results.rows if not results.cell(r, k).missing]
        if present:
            col_min[k] = min(present)
    row_means = {r: results.row_mean(r) for r in results.rows}
    present_means = [m for m in row_means.values() if m is not None]
    if present_means:
        col_min["mean"] = min(present_means)

    def md_cell(value: float | None, key) -> str:
        if value is None:
            return "--"
        text = f"{value:.3f}"
        return f"**{text}**" if value == col_min.get(key) else text

    rmse_md = out / "rmse.md"
    with open(rmse_md, "w", encoding="utf-8") as fh:
        fh.write("| Strategy | " + " | ".join(str(k) for k in sizes) + " | Mean |\n")
        fh.write("|" + " --- |" * (len(sizes) + 2) + "\n")
        for row in results.rows:
            cells = [md_cell(results.cell(row, k).mean, k) for k in sizes]
            cells.append(md_cell(row_means[row], "mean"))
            fh.write("| " + " | ".join([labels[row], *cells]) + " |\n")

    pvalues_csv = out / "pvalues.csv"
    with open(pvalues_csv, "w", encoding="utf-8") as fh:
        fh.write("strategy," + ",".join(labels[r] for r in p_values.rows) + "\n")
        for a, row in enumerate(p_values.rows):
            fh.write(labels[row] + "," + ",".join(f"{x:.6f}" for x in p_values.p[a]) + "\n")

    pvalues_md = out / "pvalues.md"
    with open(pvalues_md, "w", encoding="utf-8") as fh:
        fh.write("| Strategy | " + " | ".join(labels[r] for r in p_values.rows) + " |\n")
        fh.write("|" + " --- |" * (len(p_values.rows) + 1) + "\n")
        for a, row in enumerate(p_values.rows):
            cells = []
            for b in range(len(p_values.rows)):
                if a == b:
                    cells.append("--")
                    continue
                p = p_values.p[a, b]
                flag = "(zero variance)" if p_values.degenerate[a, b] else significance_stars(p)
                cells.append(f"{p:.3f}{flag}")
            fh.write("| " + " | ".join([labels[row], *cells]) + " |\n")
        fh.write("\n*Note*: \\* p<0.10, \\*\\* p<0.05, \\*\\*\\* p<0.01.\n")

    results_json = out / "results.json"
    payload = results.to_jsonable()
    if config is not None:
        payload["config"] = dataclasses.asdict(config)
    with open(results_json, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)

    manifest = out / "manifest.json"
    with open(manifest, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "config": dataclasses.asdict(config) if config is not None else None,
                "seeds": list(config.seeds) if config is not None else None,
                "git_describe": _git_describe(),
                "wall_clock_s": wall_clock_s,
                "created_unix": time.time(),
            },
            fh,
            indent=2,
            sort_keys=True,
        )
    return {
        "rmse_csv": str(rmse_csv),
        "rmse_md": str(rmse_md),
        "pvalues_csv": str(pvalues_csv),
        "pvalues_md": str(pvalues_md),
        "results_json": str(results_json),
        "manifest": str(manifest),
    }


def run_sweep(config: ExperimentConfig, per_user_samples: bool = False) -> dict[str, str]:
    """Full grid: train every agent cell, evaluate everything, emit tables."""
    started = time.perf_counter()
    prepared = prepare(config)
    train_all(config, prepared)
    results = run_evaluation(config, prepared)
    grid = t_test_matrix(testable_subtable(results, per_user_samples), per_user_samples)
    return emit_tables(
        results, grid, config.out_dir, config, wall_clock_s=time.perf_counter() - started
    )
