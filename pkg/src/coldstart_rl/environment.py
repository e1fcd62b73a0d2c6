"""Cold-user interview MDP.

An episode shows k items from a fixed pool (the most popular warm-training
items) to one cold user. The state is the binary shown-vector over the pool.
Each step reveals the user's true signal for the shown item (0 when the user
never touched it), refits the user's latent vector from everything revealed
so far, and rewards the reciprocal of the RMSE on a held-back validation
half of the user's hidden feedback.

The user's hidden interactions are split once per episode (seeded) into a
reveal source and a validation half; the two never mix, so the reward is
measured on feedback the fold-in has not seen.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import mf
from .dataset import Dataset, popularity_ranking
from .errors import SkipUser, ValidationError
from .mf import FactorModel, MFHyper

POOL_SIZE = 200

ColdUser = tuple[int, Sequence[tuple[int, int]]]


def build_pool(data: Dataset, size: int = POOL_SIZE) -> np.ndarray:
    """The `size` most interacted-with items; smaller catalogs use them all."""
    ranking = popularity_ranking(data)
    if len(ranking) < size:
        warnings.warn(
            f"catalog has {len(ranking)} items, below the requested pool size {size}",
            stacklevel=2,
        )
    return ranking[: min(size, len(ranking))].copy()


@dataclass(frozen=True)
class EnvState:
    """Episode-local state; `shown` over pool indices is the MDP state proper."""

    user_id: int
    shown: np.ndarray
    revealed: tuple[tuple[int, int], ...]
    steps: int
    user_vec: np.ndarray
    reveal_source: dict[int, int]
    validation: tuple[tuple[int, int], ...]
    model: FactorModel | None = None  # set only in full-retrain mode

    def __post_init__(self):
        self.shown.setflags(write=False)


class InterviewEnv:
    """Simulated interview over a fixed item pool for one display size k."""

    def __init__(
        self,
        model: FactorModel,
        pool: np.ndarray,
        k: int,
        fold_regularization: float = 0.01,
        rmse_floor: float = 1e-3,
        terminal_reward: bool = False,
        full_retrain: bool = False,
        warm_data: Dataset | None = None,
        mf_hyper: MFHyper | None = None,
        retrain_seed: int = 0,
    ):
        pool = np.asarray(pool, dtype=np.int64)
        if pool.size == 0:
            raise ValidationError("empty action pool")
        if len(np.unique(pool)) != pool.size:
            raise ValidationError("pool contains duplicate items")
        if not 1 <= k <= pool.size:
            raise ValidationError(f"k must be in [1, {pool.size}], got {k}")
        if rmse_floor <= 0:
            raise ValidationError("rmse_floor must be > 0")
        if full_retrain and (warm_data is None or mf_hyper is None):
            raise ValidationError("full_retrain needs warm_data and mf_hyper")
        self.model = model
        self.pool = pool
        self.k = k
        self.fold_regularization = fold_regularization
        self.rmse_floor = rmse_floor
        self.terminal_reward = terminal_reward
        self.full_retrain = full_retrain
        self.warm_data = warm_data
        self.mf_hyper = mf_hyper
        self.retrain_seed = retrain_seed
        self.trace = None  # optional writable text stream for step records

    @property
    def pool_size(self) -> int:
        return int(self.pool.size)

    def reset(self, cold_user: ColdUser, seed) -> EnvState:
        """Start an episode; raises SkipUser below 2 hidden interactions."""
        user_id, hidden = cold_user
        hidden = list(hidden)
        if len(hidden) < 2:
            raise SkipUser(f"user {user_id} has {len(hidden)} hidden interaction(s)")
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(hidden))
        half = len(hidden) // 2
        reveal = {int(hidden[j][0]): int(hidden[j][1]) for j in order[:half]}
        validation = tuple(
            (int(hidden[j][0]), int(hidden[j][1])) for j in order[half:]
        )
        return EnvState(
            user_id=int(user_id),
            shown=np.zeros(self.pool_size, dtype=np.int8),
            revealed=(),
            steps=0,
            user_vec=np.zeros(self.model.d),
            reveal_source=reveal,
            validation=validation,
        )

    def step(self, state: EnvState, action: int) -> tuple[EnvState, float, bool]:
        """Show pool item `action`; returns (next state, reward, done)."""
        if not 0 <= action < self.pool_size:
            raise ValidationError(f"action {action} out of range [0, {self.pool_size})")
        if state.shown[action]:
            raise ValidationError(f"action {action} was already shown")
        if state.steps >= self.k:
            raise ValidationError("episode is already done")

        item = int(self.pool[action])
        signal = state.reveal_source.get(item, 0)
        shown = state.shown.copy()
        shown[action] = 1
        revealed = state.revealed + ((item, signal),)

        retrained = None
        if self.full_retrain:
            retrained = self._retrain(state.user_id, revealed)
            user_vec = retrained.user_factors[state.user_id].copy()
        else:
            user_vec = mf.fold_in_user(self.model, revealed, self.fold_regularization)

        next_state = replace(
            state,
            shown=shown,
            revealed=revealed,
            steps=state.steps + 1,
            user_vec=user_vec,
            model=retrained,
        )
        done = next_state.steps == self.k
        rmse = self.validation_rmse(next_state)
        if self.terminal_reward and not done:
            reward = 0.0
        else:
            reward = 1.0 / max(rmse, self.rmse_floor)
        if self.trace is not None:
            record = {
                "user": state.user_id,
                "step": next_state.steps,
                "action": int(action),
                "item": item,
                "signal": signal,
                "rmse": rmse,
                "reward": reward,
            }
            self.trace.write(json.dumps(record) + "\n")
        return next_state, reward, done

    def validation_rmse(self, state: EnvState) -> float:
        """RMSE of the current user vector on the episode's validation half."""
        model = state.model or self.model
        items = np.array([i for i, _ in state.validation], dtype=np.int64)
        truth = np.array([r for _, r in state.validation], dtype=np.float64)
        preds = mf.predict_items(state.user_vec, model.item_factors[items])
        return float(np.sqrt(np.mean((preds - truth) ** 2)))

    def _retrain(self, user_id: int, revealed) -> FactorModel:
        # Fidelity mode: refit the whole model on warm data plus the cold
        # user's observed (non-zero) reveals. Orders of magnitude slower
        # than fold-in; intended for small fidelity experiments only.
        rows = list(zip(self.warm_data.users, self.warm_data.items, self.warm_data.signals))
        rows.extend((user_id, i, s) for i, s in revealed if s != 0)
        augmented = Dataset.from_interactions(
            rows, num_users=self.warm_data.num_users, num_items=self.warm_data.num_items
        )
        return mf.train_mf(augmented, self.mf_hyper, self.retrain_seed)


def evaluate_strategy(
    env: InterviewEnv,
    cold_users: Sequence[ColdUser],
    source,
    seed: int,
) -> list[float]:
    """Final-step validation RMSE per eligible cold user, greedy policy.

    `source` is either an agent (acts epsilon=0 on the shown-vector) or a
    ranked list of item ids drawn from the pool (the first k are shown in
    order to every user). Users without enough hidden feedback are skipped.
    The per-user reveal/validation split depends only on (seed, user), so
    every strategy sees identical episodes.
    """
    fixed_actions = None
    if not hasattr(source, "act"):
        index_of = {int(item): idx for idx, item in enumerate(env.pool)}
        try:
            fixed_actions = [index_of[int(item)] for item in list(source)[: env.k]]
        except KeyError as exc:
            raise ValidationError(f"ranked item {exc.args[0]} is not in the pool") from None
        if len(fixed_actions) < env.k:
            raise ValidationError("ranked list shorter than the display size")

    rmses: list[float] = []
    for user in cold_users:
        try:
            state = env.reset(user, np.random.SeedSequence((seed, user[0])))
        except SkipUser:
            continue
        done = False
        t = 0
        while not done:
            if fixed_actions is not None:
                action = fixed_actions[t]
            else:
                action = source.act(state.shown, epsilon=0.0)
            state, _, done = env.step(state, action)
            t += 1
        rmses.append(env.validation_rmse(state))
    if not rmses:
        raise ValidationError("no eligible cold users to evaluate")
    return rmses
