"""Q-learning agents: standard, double, and dueling variants.

All variants share replay, epsilon-greedy exploration with action masking,
and a periodically hard-copied target network. The double variant changes
only the TD target (online net selects the next action, target net evaluates
it); the dueling variant changes only the network head.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from . import neural
from .errors import ValidationError
from .neural import HeadKind, MLPParams, OptimizerState

_META_MAGIC = b"CSRLAGT1\n"


class Variant(str, Enum):
    STANDARD = "dqn"
    DOUBLE = "double"
    DUELING = "dueling"


class Transition(NamedTuple):
    state: np.ndarray       # binary shown-vector
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass(frozen=True)
class AgentConfig:
    variant: Variant = Variant.STANDARD
    gamma: float = 0.99
    learning_rate: float = 4e-4
    batch_size: int = 32
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay_steps: int = 1000
    target_update_every: int = 100
    buffer_capacity: int = 100
    huber_delta: float = 1.0
    hidden: tuple[int, ...] = (64, 32)
    # Extension switch: pair the dueling head with the double target.
    double_dueling: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValidationError("gamma must be in [0, 1)")
        if self.epsilon_start < self.epsilon_end:
            raise ValidationError("epsilon_start must be >= epsilon_end")
        if not 0.0 <= self.epsilon_end <= 1.0 or self.epsilon_start > 1.0:
            raise ValidationError("epsilons must be probabilities")
        if self.epsilon_decay_steps < 1:
            raise ValidationError("epsilon_decay_steps must be >= 1")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValidationError("need buffer_capacity >= batch_size >= 1")
        if self.target_update_every < 1:
            raise ValidationError("target_update_every must be >= 1")
        if self.learning_rate <= 0 or self.huber_delta <= 0:
            raise ValidationError("learning_rate and huber_delta must be > 0")


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions; eviction is strictly oldest-first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValidationError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def __len__(self) -> int:
        return len(self._items)

    def snapshot(self) -> list[Transition]:
        """Contents oldest to newest."""
        return list(self._items)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValidationError("not enough transitions to sample")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        items = self._items
        return [items[int(j)] for j in idx]


def epsilon_at(config: AgentConfig, step: int) -> float:
    """Linear decay from epsilon_start to epsilon_end, flat afterwards."""
    if step < 0:
        raise ValidationError("step must be >= 0")
    frac = min(1.0, step / config.epsilon_decay_steps)
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start)


def select_action(
    q: np.ndarray, shown_mask: np.ndarray, epsilon: float, rng: np.random.Generator
) -> int:
    """Epsilon-greedy over unshown actions; greedy ties go to the lowest index."""
    free = np.flatnonzero(np.asarray(shown_mask) == 0)
    if free.size == 0:
        raise ValidationError("no unshown action available (episode already over)")
    if epsilon > 0 and rng.random() < epsilon:
        return int(free[rng.integers(free.size)])
    q = np.asarray(q)
    return int(free[np.argmax(q[free])])


def _masked_max(values: np.ndarray, shown_mask: np.ndarray) -> float:
    free = np.flatnonzero(np.asarray(shown_mask) == 0)
    if free.size == 0:
        raise ValidationError("no unshown action in next state of a non-terminal transition")
    return float(np.max(values[free]))


def _masked_argmax(values: np.ndarray, shown_mask: np.ndarray) -> int:
    free = np.flatnonzero(np.asarray(shown_mask) == 0)
    if free.size == 0:
        raise ValidationError("no unshown action in next state of a non-terminal transition")
    return int(free[np.argmax(values[free])])


def td_target_standard(
    reward: float,
    next_q_target: np.ndarray,
    done: bool,
    gamma: float,
    next_mask: np.ndarray,
) -> float:
    """r + gamma * max over unshown actions of the target net's values."""
    if done:
        return float(reward)
    return float(reward) + gamma * _masked_max(np.asarray(next_q_target), next_mask)


def td_target_double(
    reward: float,
    next_q_online: np.ndarray,
    next_q_target: np.ndarray,
    done: bool,
    gamma: float,
    next_mask: np.ndarray,
) -> float:
    """r + gamma * Q_target[argmax of Q_online], decoupling pick from score."""
    if done:
        return float(reward)
    best = _masked_argmax(np.asarray(next_q_online), next_mask)
    return float(reward) + gamma * float(np.asarray(next_q_target)[best])


class QAgent:
    """One agent instance: online/target networks, replay, exploration state."""

    def __init__(self, config: AgentConfig, state_dim: int, n_actions: int, seed: int):
        config.validate()
        self.config = config
        self.state_dim = state_dim
        self.n_actions = n_actions
        self.seed = seed
        init_ss, act_ss, sample_ss = np.random.SeedSequence(seed).spawn(3)
        self._act_rng = np.random.default_rng(act_ss)
        self._sample_rng = np.random.default_rng(sample_ss)
        head = HeadKind.DUELING if config.variant is Variant.DUELING else HeadKind.STANDARD
        self.online: MLPParams = neural.init_params(
            state_dim, config.hidden, n_actions, head, init_ss
        )
        self.target: MLPParams = neural.clone_into_target(self.online)
        self.opt: OptimizerState = OptimizerState.for_params(self.online, config.learning_rate)
        self.buffer = ReplayBuffer(config.buffer_capacity)
        self.global_step = 0

    @property
    def _use_double_target(self) -> bool:
        if self.config.variant is Variant.DOUBLE:
            return True
        return self.config.variant is Variant.DUELING and self.config.double_dueling

    def act(self, shown_mask: np.ndarray, epsilon: float) -> int:
        """Pick an action for the current shown-vector (the MDP state)."""
        q = neural.forward(self.online, np.asarray(shown_mask, dtype=np.float64))
        return select_action(q, shown_mask, epsilon, self._act_rng)

    def observe(self, transition: Transition) -> None:
        self.buffer.push(transition)

    def train_step(self, batch: Sequence[Transition]) -> float:
        """One gradient step on a batch; returns the mean Huber loss."""
        if not batch:
            raise ValidationError("empty batch")
        cfg = self.config
        states = np.stack([np.asarray(t.state, dtype=np.float64) for t in batch])
        next_states = np.stack([np.asarray(t.next_state, dtype=np.float64) for t in batch])
        actions = np.array([t.action for t in batch], dtype=np.int64)
        rewards = np.array([t.reward for t in batch], dtype=np.float64)
        dones = np.array([t.done for t in batch], dtype=bool)

        next_q_target = neural.forward(self.target, next_states)
        blocked = next_states != 0
        open_rows = ~blocked.all(axis=1)
        if not (dones | open_rows).all():
            raise ValidationError("non-terminal transition with no unshown action")
        masked_target = np.where(blocked, -np.inf, next_q_target)
        if self._use_double_target:
            next_q_online = neural.forward(self.online, next_states)
            best = np.argmax(np.where(blocked, -np.inf, next_q_online), axis=1)
            future = next_q_target[np.arange(len(batch)), best]
        else:
            future = masked_target.max(axis=1)
        targets = np.where(dones, rewards, rewards + cfg.gamma * np.where(open_rows, future, 0.0))

        q_all = neural.forward(self.online, states)
        q_sa = q_all[np.arange(len(batch)), actions]
        losses, dloss = neural.huber_loss(q_sa, targets, cfg.huber_delta)
        mean_loss = float(np.mean(losses))
        if not np.isfinite(mean_loss):
            raise ValidationError("non-finite training loss")
        grads = neural.backward(self.online, states, actions, dloss / len(batch))
        neural.optimizer_step(self.online, grads, self.opt)
        return mean_loss

    def train_from_buffer(self) -> float | None:
        """Sample and train once the buffer can fill a batch; else no-op."""
        if len(self.buffer) < self.config.batch_size:
            return None
        batch = self.buffer.sample(self.config.batch_size, self._sample_rng)
        return self.train_step(batch)

    def maybe_sync_target(self, global_step: int) -> bool:
        """Hard-copy online -> target every target_update_every steps."""
        if global_step > 0 and global_step % self.config.target_update_every == 0:
            self.target = neural.clone_into_target(self.online)
            return True
        return False

    def save(self, path) -> None:
        """Metadata record plus both networks, delegating layer layout."""
        meta = {
            "variant": self.config.variant.value,
            "double_dueling": self.config.double_dueling,
            "gamma": self.config.gamma,
            "learning_rate": self.config.learning_rate,
            "batch_size": self.config.batch_size,
            "epsilon_start": self.config.epsilon_start,
            "epsilon_end": self.config.epsilon_end,
            "epsilon_decay_steps": self.config.epsilon_decay_steps,
            "target_update_every": self.config.target_update_every,
            "buffer_capacity": self.config.buffer_capacity,
            "huber_delta": self.config.huber_delta,
            "hidden": list(self.config.hidden),
            "state_dim": self.state_dim,
            "n_actions": self.n_actions,
            "seed": self.seed,
            "global_step": self.global_step,
        }
        path = str(path)
        with open(path + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
        neural.save_params(self.online, path + ".online.net")
        neural.save_params(self.target, path + ".target.net")

    @classmethod
    def load(cls, path) -> "QAgent":
        path = str(path)
        with open(path + ".meta.json", encoding="utf-8") as fh:
            meta = json.load(fh)
        config = AgentConfig(
            variant=Variant(meta["variant"]),
            gamma=meta["gamma"],
            learning_rate=meta["learning_rate"],
            batch_size=meta["batch_size"],
            epsilon_start=meta["epsilon_start"],
            epsilon_end=meta["epsilon_end"],
            epsilon_decay_steps=meta["epsilon_decay_steps"],
            target_update_every=meta["target_update_every"],
            buffer_capacity=meta["buffer_capacity"],
            huber_delta=meta["huber_delta"],
            hidden=tuple(meta["hidden"]),
            double_dueling=meta["double_dueling"],
        )
        agent = cls(config, meta["state_dim"], meta["n_actions"], meta["seed"])
        agent.online = neural.load_params(path + ".online.net")
        agent.target = neural.load_params(path + ".target.net")
        agent.opt = OptimizerState.for_params(agent.online, config.learning_rate)
        agent.global_step = meta["global_step"]
        return agent
