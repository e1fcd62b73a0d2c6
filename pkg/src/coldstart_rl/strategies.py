"""Non-personalized item-ranking strategies for cold-user interviews.

Five single heuristics score an item i from warm data:

    popularity   pop(i), interaction count
    entropy      -sum_j p(j|i) log2 p(j|i)      (j in {purchase, return})
    gini         1 - sum_j p(j|i)^2
    variance     mean over observed signals of (r_ui - rbar_i)^2
    error        1 - max_j p(j|i)

Four combined heuristics blend log-popularity with a single score:
w1 * ln(pop(i)) + w2 * single(i). Natural log for the popularity term (the
base only rescales w1); log2 inside entropy so it tops out at 1 for two
outcomes. Items with pop(i) = 0 get -inf under combined strategies and rank
last.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .dataset import Dataset, signal_counts
from .errors import ValidationError


class StrategyKind(str, Enum):
    POPULARITY = "popularity"
    ENTROPY = "entropy"
    GINI = "gini"
    VARIANCE = "variance"
    ERROR = "error"
    POP_ENT = "popent"
    POP_GINI = "popgini"
    POP_VAR = "popvar"
    POP_ERROR = "poperror"


COMBINED_BASE = {
    StrategyKind.POP_ENT: StrategyKind.ENTROPY,
    StrategyKind.POP_GINI: StrategyKind.GINI,
    StrategyKind.POP_VAR: StrategyKind.VARIANCE,
    StrategyKind.POP_ERROR: StrategyKind.ERROR,
}


def entropy_of(p_pos: np.ndarray, p_neg: np.ndarray) -> np.ndarray:
    """Binary entropy in bits, with 0 * log 0 = 0 by continuity."""
    out = np.zeros_like(np.asarray(p_pos, dtype=np.float64))
    for p in (np.asarray(p_pos, dtype=np.float64), np.asarray(p_neg, dtype=np.float64)):
        nz = p > 0
        out = out - np.where(nz, p * np.log2(np.where(nz, p, 1.0)), 0.0)
    return out


def gini_of(p_pos: np.ndarray, p_neg: np.ndarray) -> np.ndarray:
    return 1.0 - np.asarray(p_pos, dtype=np.float64) ** 2 - np.asarray(p_neg, dtype=np.float64) ** 2


def error_of(p_pos: np.ndarray, p_neg: np.ndarray) -> np.ndarray:
    return 1.0 - np.maximum(p_pos, p_neg)


def score_items(
    kind: StrategyKind,
    data: Dataset,
    items: np.ndarray,
    w1: float = 1.0,
    w2: float = 1.0,
    smoothing: float = 1.0,
) -> np.ndarray:
    """Strategy scores for a batch of item ids (one shared code path)."""
    kind = StrategyKind(kind)
    items = np.asarray(items, dtype=np.int64)
    if items.size and (items.min() < 0 or items.max() >= data.num_items):
        raise ValidationError("item id out of range")
    if smoothing < 0:
        raise ValidationError("smoothing must be non-negative")

    pos_all, neg_all = signal_counts(data)
    pos = pos_all[items].astype(np.float64)
    neg = neg_all[items].astype(np.float64)
    total = pos + neg

    if kind is StrategyKind.POPULARITY:
        return total

    if kind is StrategyKind.VARIANCE:
        # Signals are +-1, so E[r^2] = 1 and var = 1 - rbar^2 over observed
        # entries. Items without observations carry no diversity: 0.
        with np.errstate(divide="ignore", invalid="ignore"):
            mean = np.where(total > 0, (pos - neg) / np.where(total > 0, total, 1.0), 0.0)
        return np.where(total > 0, 1.0 - mean**2, 0.0)

    if kind in COMBINED_BASE:
        base = score_items(COMBINED_BASE[kind], data, items, smoothing=smoothing)
        with np.errstate(divide="ignore"):
            log_pop = np.where(total > 0, np.log(np.where(total > 0, total, 1.0)), -np.inf)
        return np.where(total > 0, w1 * log_pop + w2 * base, -np.inf)

    # Distribution-based single heuristics need a defined p(j|i).
    if smoothing == 0 and (total == 0).any():
        raise ValidationError("item has no interactions and smoothing is 0")
    denom = total + 2.0 * smoothing
    p_pos = (pos + smoothing) / denom
    p_neg = (neg + smoothing) / denom
    if kind is StrategyKind.ENTROPY:
        return entropy_of(p_pos, p_neg)
    if kind is StrategyKind.GINI:
        return gini_of(p_pos, p_neg)
    if kind is StrategyKind.ERROR:
        return error_of(p_pos, p_neg)
    raise ValidationError(f"unknown strategy kind {kind!r}")


def score_item(
    kind: StrategyKind,
    data: Dataset,
    item: int,
    w1: float = 1.0,
    w2: float = 1.0,
    smoothing: float = 1.0,
) -> float:
    return float(score_items(kind, data, np.array([item]), w1, w2, smoothing)[0])


def rank_items(
    kind: StrategyKind,
    data: Dataset,
    pool,
    k: int,
    w1: float = 1.0,
    w2: float = 1.0,
    smoothing: float = 1.0,
) -> list[int]:
    """Top-k of the pool by descending score, ties broken by lower item id."""
    pool = np.asarray(pool, dtype=np.int64)
    if k > pool.size:
        raise ValidationError(f"k={k} exceeds pool size {pool.size}")
    if k < 0:
        raise ValidationError("k must be >= 0")
    scores = score_items(kind, data, pool, w1, w2, smoothing)
    order = np.lexsort((pool, -scores))
    return [int(i) for i in pool[order][:k]]


def random_strategy(pool, k: int, seed: int) -> list[int]:
    """k items sampled uniformly without replacement, deterministic per seed.

    Implemented as a prefix of a seeded permutation, so rankings for growing
    k nest like the deterministic strategies' do.
    """
    pool = np.asarray(pool, dtype=np.int64)
    if k > pool.size:
        raise ValidationError(f"k={k} exceeds pool size {pool.size}")
    if k < 0:
        raise ValidationError("k must be >= 0")
    rng = np.random.default_rng(seed)
    return [int(i) for i in rng.permutation(pool)[:k]]
