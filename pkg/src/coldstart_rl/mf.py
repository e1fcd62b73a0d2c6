"""Latent-factor model: SGD training, prediction, fold-in, RMSE.

The model approximates each observed signal r_ui by the dot product
p_u . q_i of a user and an item vector, trained by per-sample stochastic
gradient descent on the regularized squared error

    sum_(u,i observed) (r_ui - p_u . q_i)^2  +  reg * (|p_u|^2 + |q_i|^2).

Predictions are clamped to [-1, +1], the signal domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import sgd_pass
from .dataset import Dataset
from .errors import SingularSystem, TrainingDiverged, ValidationError

INIT_SCALE = 0.05
_MAGIC = b"CSRLMF1\n"


@dataclass(frozen=True)
class MFHyper:
    latent_factors: int = 10
    learning_rate: float = 0.001
    regularization: float = 0.01
    iterations: int = 100

    def validate(self) -> None:
        if self.latent_factors < 1:
            raise ValidationError("latent_factors must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.regularization < 0:
            raise ValidationError("regularization must be >= 0")
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")


@dataclass(frozen=True)
class FactorModel:
    user_factors: np.ndarray  # (num_users, d)
    item_factors: np.ndarray  # (num_items, d)

    def __post_init__(self):
        self.user_factors.setflags(write=False)
        self.item_factors.setflags(write=False)

    @property
    def d(self) -> int:
        return self.user_factors.shape[1]

    @property
    def num_users(self) -> int:
        return self.user_factors.shape[0]

    @property
    def num_items(self) -> int:
        return self.item_factors.shape[0]


def train_mf(data: Dataset, hyper: MFHyper, seed: int) -> FactorModel:
    """Fit factors by SGD over the observed interactions.

    Runs ``hyper.iterations`` full passes, reshuffling the sample order each
    pass. Factors start uniform in [-0.05, 0.05]. Raises
    :class:`TrainingDiverged` if any factor goes non-finite.
    """
    hyper.validate()
    if len(data) == 0:
        raise ValidationError("cannot train on an empty dataset")

    rng = np.random.default_rng(seed)
    d = hyper.latent_factors
    user_factors = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(data.num_users, d))
    item_factors = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(data.num_items, d))

    users = np.ascontiguousarray(data.users, dtype=np.int64)
    items = np.ascontiguousarray(data.items, dtype=np.int64)
    signals = np.ascontiguousarray(data.signals, dtype=np.int8)

    for pass_index in range(hyper.iterations):
        order = rng.permutation(len(data)).astype(np.int64)
        sgd_pass(
            user_factors,
            item_factors,
            users,
            items,
            signals,
            order,
            hyper.learning_rate,
            hyper.regularization,
        )
        if not (np.isfinite(user_factors).all() and np.isfinite(item_factors).all()):
            raise TrainingDiverged(pass_index)
    return FactorModel(user_factors, item_factors)


def predict(model: FactorModel, u: int, i: int) -> float:
    """p_u . q_i clamped to [-1, +1]."""
    if not 0 <= u < model.num_users:
        raise IndexError(f"user {u} out of range [0, {model.num_users})")
    if not 0 <= i < model.num_items:
        raise IndexError(f"item {i} out of range [0, {model.num_items})")
    score = float(model.user_factors[u] @ model.item_factors[i])
    return min(1.0, max(-1.0, score))


def predict_items(user_vec: np.ndarray, item_factors: np.ndarray) -> np.ndarray:
    """Clamped scores of one user vector against a block of item vectors."""
    return np.clip(item_factors @ user_vec, -1.0, 1.0)


def fold_in_user(
    model: FactorModel,
    revealed: Sequence[tuple[int, int]],
    regularization: float,
) -> np.ndarray:
    """Ridge-regression user vector against fixed item factors.

    Solves min_p sum_(i,r) (r - p . q_i)^2 + reg * |p|^2 in closed form.
    Empty evidence yields the zero vector (predicting 0 everywhere).
    """
    if regularization < 0:
        raise ValidationError("regularization must be >= 0")
    d = model.d
    if not revealed:
        return np.zeros(d)
    item_ids = np.fromiter((i for i, _ in revealed), dtype=np.int64, count=len(revealed))
    targets = np.fromiter((r for _, r in revealed), dtype=np.float64, count=len(revealed))
    q = model.item_factors[item_ids]
    normal = q.T @ q + regularization * np.eye(d)
    rhs = q.T @ targets
    try:
        solution = np.linalg.solve(normal, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.isfinite(solution).all():
        raise SingularSystem("non-finite fold-in solution")
    return solution


def mf_rmse(model: FactorModel, test: Sequence[tuple[int, int, int]]) -> float:
    """Root mean square error of clamped predictions over (u, i, r) triples."""
    test = list(test)
    if not test:
        raise ValidationError("empty test set")
    users = np.array([t[0] for t in test], dtype=np.int64)
    items = np.array([t[1] for t in test], dtype=np.int64)
    truth = np.array([t[2] for t in test], dtype=np.float64)
    preds = np.clip(
        np.einsum("ij,ij->i", model.user_factors[users], model.item_factors[items]),
        -1.0,
        1.0,
    )
    return float(np.sqrt(np.mean((preds - truth) ** 2)))


def training_rmse(model: FactorModel, data: Dataset) -> float:
    """RMSE over the dataset's own observed entries."""
    return mf_rmse(model, list(zip(data.users, data.items, data.signals)))


def save_model(model: FactorModel, path) -> None:
    """Flat binary dump: magic, JSON header line, then both matrices.

    Layout: ``CSRLMF1\\n``, one JSON line with d/num_users/num_items, then
    user_factors followed by item_factors as row-major little-endian float64.
    """
    header = {
        "d": model.d,
        "num_users": model.num_users,
        "num_items": model.num_items,
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(model.user_factors, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.item_factors, dtype="<f8").tobytes())


def load_model(path) -> FactorModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValidationError(f"{path}: not a factor-model checkpoint")
        header = json.loads(fh.readline().decode("utf-8"))
        d, nu, ni = header["d"], header["num_users"], header["num_items"]
        payload = fh.read()
    expected = (nu + ni) * d * 8
    if len(payload) != expected:
        raise ValidationError(f"{path}: truncated checkpoint")
    flat = np.frombuffer(payload, dtype="<f8")
    user_factors = flat[: nu * d].reshape(nu, d).copy()
    item_factors = flat[nu * d :].reshape(ni, d).copy()
    return FactorModel(user_factors, item_factors)
