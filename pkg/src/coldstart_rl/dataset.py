"""Implicit-feedback interaction data: loading, synthesis, splitting, statistics.

Interactions carry a ternary signal: +1 (purchase), -1 (return). A pair that
never occurs means "no interaction" (signal 0); zeros are never stored, so a
``Dataset`` is a sparse view of the full user x item signal matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ParseError, ValidationError

CSV_HEADER = ("user_id", "item_id", "signal")


class Interaction(NamedTuple):
    user_id: int
    item_id: int
    signal: int  # -1 or +1


@dataclass(frozen=True)
class Dataset:
    """Deduplicated interactions with contiguous user/item ids.

    ``users``, ``items`` and ``signals`` are parallel arrays. ``user_ids`` /
    ``item_ids`` map the contiguous internal index back to the original id
    from the source file (None when the data was born contiguous).
    """

    users: np.ndarray
    items: np.ndarray
    signals: np.ndarray
    num_users: int
    num_items: int
    user_ids: tuple[int, ...] | None = None
    item_ids: tuple[int, ...] | None = None

    def __post_init__(self):
        for arr in (self.users, self.items, self.signals):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.users)

    @property
    def interactions(self) -> list[Interaction]:
        return [
            Interaction(int(u), int(i), int(s))
            for u, i, s in zip(self.users, self.items, self.signals)
        ]

    @classmethod
    def from_interactions(
        cls,
        interactions: Iterable[tuple[int, int, int]],
        num_users: int | None = None,
        num_items: int | None = None,
        user_ids: tuple[int, ...] | None = None,
        item_ids: tuple[int, ...] | None = None,
    ) -> "Dataset":
        """Build a dataset, deduplicating (user, item) pairs keep-last.

        Implicit-feedback logs are chronological, so the last occurrence of a
        pair is its current signal.
        """
        dedup: dict[tuple[int, int], int] = {}
        for u, i, s in interactions:
            if s not in (-1, 1):
                raise ValidationError(f"signal must be -1 or +1, got {s}")
            if u < 0 or i < 0:
                raise ValidationError(f"negative id in interaction ({u}, {i})")
            dedup[(u, i)] = s
        if not dedup:
            raise ValidationError("empty dataset: no interactions")
        users = np.fromiter((u for u, _ in dedup), dtype=np.int64, count=len(dedup))
        items = np.fromiter((i for _, i in dedup), dtype=np.int64, count=len(dedup))
        signals = np.fromiter(dedup.values(), dtype=np.int8, count=len(dedup))
        n_users = int(users.max()) + 1 if num_users is None else num_users
        n_items = int(items.max()) + 1 if num_items is None else num_items
        if users.max() >= n_users or items.max() >= n_items:
            raise ValidationError("interaction id out of declared range")
        return cls(users, items, signals, n_users, n_items, user_ids, item_ids)


@dataclass(frozen=True)
class SplitResult:
    """Warm training data plus the held-out cold users.

    ``cold_users`` holds ``(user_id, hidden)`` pairs where ``hidden`` is the
    user's full interaction list as ``(item_id, signal)`` tuples. Cold
    candidates without any interaction are dropped (nothing to hide or test).
    """

    warm: Dataset
    cold_users: tuple[tuple[int, tuple[tuple[int, int], ...]], ...]
    seed: int


@dataclass(frozen=True)
class SyntheticConfig:
    num_users: int
    num_items: int
    num_clusters: int
    interactions_per_user: int
    noise_rate: float
    return_rate: float

    def validate(self) -> None:
        for name in ("num_users", "num_items", "num_clusters", "interactions_per_user"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        for name in ("noise_rate", "return_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {value}")
        if self.num_clusters > self.num_items:
            raise ValidationError("num_clusters cannot exceed num_items")


def load_interactions(path) -> Dataset:
    """Load a `user_id,item_id,signal` CSV and re-index ids contiguously.

    Duplicate (user, item) pairs keep the last occurrence. The original ids
    are retained on the returned dataset for reporting.
    """
    rows: list[tuple[int, int, int]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: empty file, expected header {','.join(CSV_HEADER)}")
        if tuple(field.strip() for field in header) != CSV_HEADER:
            raise ParseError(1, f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ParseError(line_no, f"expected 3 fields, got {len(row)}")
            try:
                u, i, s = (int(field.strip()) for field in row)
            except ValueError:
                raise ParseError(line_no, f"non-integer field in {row!r}") from None
            if s not in (-1, 1):
                raise ValidationError(f"line {line_no}: signal must be -1 or +1, got {s}")
            if u < 0 or i < 0:
                raise ValidationError(f"line {line_no}: negative id")
            rows.append((u, i, s))
    if not rows:
        raise ValidationError(f"{path}: no interactions (empty dataset)")

    user_index: dict[int, int] = {}
    item_index: dict[int, int] = {}
    remapped = []
    for u, i, s in rows:
        ui = user_index.setdefault(u, len(user_index))
        ii = item_index.setdefault(i, len(item_index))
        remapped.append((ui, ii, s))
    return Dataset.from_interactions(
        remapped,
        num_users=len(user_index),
        num_items=len(item_index),
        user_ids=tuple(user_index),
        item_ids=tuple(item_index),
    )


def split_cold_warm(data: Dataset, cold_fraction: float, seed: int) -> SplitResult:
    """Hide a random fraction of users (with all their interactions).

    The cold candidate count is round-half-up of ``cold_fraction * num_users``
    and never drops below one. Candidates without interactions are excluded
    from the returned cold list.
    """
    if not 0.0 < cold_fraction < 1.0:
        raise ValidationError(f"cold_fraction must be in (0, 1), got {cold_fraction}")
    if len(data) == 0:
        raise ValidationError("cannot split an empty dataset")

    rng = np.random.default_rng(seed)
    n_cold = max(1, math.floor(cold_fraction * data.num_users + 0.5))
    cold_ids = np.sort(rng.permutation(data.num_users)[:n_cold])
    cold_set = set(int(u) for u in cold_ids)

    hidden: dict[int, list[tuple[int, int]]] = {u: [] for u in cold_set}
    warm_rows = []
    for u, i, s in zip(data.users, data.items, data.signals):
        u = int(u)
        if u in cold_set:
            hidden[u].append((int(i), int(s)))
        else:
            warm_rows.append((u, int(i), int(s)))
    if not warm_rows:
        raise ValidationError("split left no warm interactions; lower cold_fraction")

    warm = Dataset.from_interactions(
        warm_rows,
        num_users=data.num_users,
        num_items=data.num_items,
        user_ids=data.user_ids,
        item_ids=data.item_ids,
    )
    cold_users = tuple(
        (u, tuple(hidden[u])) for u in sorted(cold_set) if hidden[u]
    )
    return SplitResult(warm=warm, cold_users=cold_users, seed=seed)


def generate_synthetic(cfg: SyntheticConfig, seed: int) -> Dataset:
    """Generate clustered interactions for desk-scale experiments.

    Users belong to cluster ``user_id % num_clusters``; items are partitioned
    into contiguous per-cluster blocks. Each draw comes from the user's block
    with probability ``1 - noise_rate``, otherwise uniformly from all items.
    Within a block the draw is long-tailed (weight 1/(1 + position), like
    retail popularity), so low-positioned items are genuinely more popular.
    Each interaction is a return (-1) with probability ``return_rate``.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    blocks = np.array_split(np.arange(cfg.num_items), cfg.num_clusters)
    block_weights = []
    for block in blocks:
        w = 1.0 / (1.0 + np.arange(len(block)))
        block_weights.append(w / w.sum())

    rows: list[tuple[int, int, int]] = []
    target = min(cfg.interactions_per_user, cfg.num_items)
    for u in range(cfg.num_users):
        cluster = u % cfg.num_clusters
        block = blocks[cluster]
        weights = block_weights[cluster]
        chosen: set[int] = set()
        attempts = 0
        while len(chosen) < target and attempts < 200 * target:
            attempts += 1
            if cfg.noise_rate > 0 and rng.random() < cfg.noise_rate:
                item = int(rng.integers(cfg.num_items))
            else:
                item = int(block[rng.choice(len(block), p=weights)])
            if item in chosen:
                continue
            chosen.add(item)
            signal = -1 if (cfg.return_rate > 0 and rng.random() < cfg.return_rate) else 1
            rows.append((u, item, signal))
    return Dataset.from_interactions(rows, num_users=cfg.num_users, num_items=cfg.num_items)


def item_popularity(data: Dataset) -> np.ndarray:
    """Interaction count per item (any signal), indexed by item id."""
    return np.bincount(data.items, minlength=data.num_items).astype(np.int64)


def popularity_ranking(data: Dataset) -> np.ndarray:
    """Item ids ordered by descending count, ties broken by lower id."""
    counts = item_popularity(data)
    ids = np.arange(data.num_items)
    return ids[np.lexsort((ids, -counts))]


def signal_counts(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """(purchase count, return count) per item."""
    pos = np.bincount(data.items[data.signals == 1], minlength=data.num_items)
    neg = np.bincount(data.items[data.signals == -1], minlength=data.num_items)
    return pos.astype(np.int64), neg.astype(np.int64)


def feedback_distribution(
    data: Dataset, item: int, smoothing: float = 1.0
) -> tuple[float, float]:
    """Smoothed (p_purchase, p_return) over the item's observed signals.

    Add-k smoothing with k = ``smoothing``; the two probabilities always sum
    to one. With smoothing 0 an item without interactions has no defined
    distribution and raises.
    """
    if not 0 <= item < data.num_items:
        raise ValidationError(f"item {item} out of range [0, {data.num_items})")
    if smoothing < 0:
        raise ValidationError("smoothing must be non-negative")
    mask = data.items == item
    total = int(mask.sum())
    if total == 0 and smoothing == 0:
        raise ValidationError(f"item {item} has no interactions and smoothing is 0")
    pos = int((data.signals[mask] == 1).sum())
    neg = total - pos
    denom = total + 2.0 * smoothing
    return (pos + smoothing) / denom, (neg + smoothing) / denom


def save_interactions(data: Dataset, path) -> None:
    """Write the canonical CSV; inverse of :func:`load_interactions`."""
    user_ids = data.user_ids or tuple(range(data.num_users))
    item_ids = data.item_ids or tuple(range(data.num_items))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for u, i, s in zip(data.users, data.items, data.signals):
            writer.writerow([user_ids[u], item_ids[i], int(s)])


