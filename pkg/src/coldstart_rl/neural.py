"""Minimal feed-forward Q-network with hand-rolled backprop.

Architecture: input -> tanh hidden layers -> linear head(s). The standard
head emits one Q-value per action. The dueling head splits into a scalar
state value V and per-action advantages A, recombined as

    q_a = V + A_a - mean_a'(A_a')

so the advantages are mean-centered and V is identifiable (mean_a q_a = V).

Everything operates on float64 numpy arrays; weights use the convention
h = x @ W + b with W of shape (fan_in, fan_out).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import UpdateRejected, ValidationError

_MAGIC = b"CSRLNET1\n"


class HeadKind(str, Enum):
    STANDARD = "standard"
    DUELING = "dueling"


@dataclass
class MLPParams:
    """Weight/bias arrays keyed by layer name, in forward order.

    Trunk layers are ``w0/b0, w1/b1, ...``; the standard head is ``wq/bq``;
    the dueling head is ``wv/bv`` (value) plus ``wa/ba`` (advantage).
    """

    layers: dict[str, np.ndarray]
    input_dim: int
    hidden: tuple[int, ...]
    n_actions: int
    head: HeadKind


def init_params(
    input_dim: int,
    hidden: tuple[int, ...],
    n_actions: int,
    head: HeadKind,
    seed,
) -> MLPParams:
    """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    if input_dim < 1 or n_actions < 1 or any(h < 1 for h in hidden):
        raise ValidationError("all layer widths must be >= 1")
    rng = np.random.default_rng(seed)
    layers: dict[str, np.ndarray] = {}

    def linear(name: str, fan_in: int, fan_out: int) -> None:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        layers[f"w{name}"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        layers[f"b{name}"] = np.zeros(fan_out)

    widths = (input_dim, *hidden)
    for idx in range(len(hidden)):
        linear(str(idx), widths[idx], widths[idx + 1])
    head = HeadKind(head)
    if head is HeadKind.STANDARD:
        linear("q", widths[-1], n_actions)
    else:
        linear("v", widths[-1], 1)
        linear("a", widths[-1], n_actions)
    return MLPParams(layers, input_dim, tuple(hidden), n_actions, head)


def _as_batch(state: np.ndarray, input_dim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(state, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != input_dim:
        raise ValidationError(f"state must have width {input_dim}, got shape {x.shape}")
    return x, single


def _forward_cached(params: MLPParams, x: np.ndarray):
    activations = [x]
    h = x
    for idx in range(len(params.hidden)):
        h = np.tanh(h @ params.layers[f"w{idx}"] + params.layers[f"b{idx}"])
        activations.append(h)
    if params.head is HeadKind.STANDARD:
        q = h @ params.layers["wq"] + params.layers["bq"]
    else:
        v = h @ params.layers["wv"] + params.layers["bv"]
        a = h @ params.layers["wa"] + params.layers["ba"]
        q = v + a - a.mean(axis=1, keepdims=True)
    return q, activations


def forward(params: MLPParams, state: np.ndarray) -> np.ndarray:
    """Q-values for one state (1-D in, 1-D out) or a batch (2-D in/out)."""
    x, single = _as_batch(state, params.input_dim)
    q, _ = _forward_cached(params, x)
    return q[0] if single else q


def backward(params: MLPParams, state, action, dloss_dq) -> dict[str, np.ndarray]:
    """Gradients of sum_b dloss_dq[b] * q[b, action[b]] w.r.t. every layer.

    Accepts a single (state, action index, scalar) or batched arrays;
    gradients over a batch accumulate by summation.
    """
    x, single = _as_batch(state, params.input_dim)
    actions = np.atleast_1d(np.asarray(action, dtype=np.int64))
    gs = np.atleast_1d(np.asarray(dloss_dq, dtype=np.float64))
    if single and actions.size == 1:
        actions = actions.reshape(1)
        gs = gs.reshape(1)
    if actions.shape[0] != x.shape[0] or gs.shape[0] != x.shape[0]:
        raise ValidationError("state, action, dloss_dq batch sizes differ")
    if actions.min() < 0 or actions.max() >= params.n_actions:
        raise ValidationError("action index out of range")

    q, activations = _forward_cached(params, x)
    n = x.shape[0]
    dq = np.zeros_like(q)
    dq[np.arange(n), actions] = gs

    grads: dict[str, np.ndarray] = {}
    h_last = activations[-1]
    if params.head is HeadKind.STANDARD:
        grads["wq"] = h_last.T @ dq
        grads["bq"] = dq.sum(axis=0)
        dh = dq @ params.layers["wq"].T
    else:
        # q = v + a - mean(a): value sees the full row sum, each advantage
        # column gets the -1/|A| correction from the mean path.
        dv = dq.sum(axis=1, keepdims=True)
        da = dq - dq.mean(axis=1, keepdims=True)
        grads["wv"] = h_last.T @ dv
        grads["bv"] = dv.sum(axis=0)
        grads["wa"] = h_last.T @ da
        grads["ba"] = da.sum(axis=0)
        dh = dv @ params.layers["wv"].T + da @ params.layers["wa"].T

    for idx in reversed(range(len(params.hidden))):
        dz = dh * (1.0 - activations[idx + 1] ** 2)  # tanh'
        grads[f"w{idx}"] = activations[idx].T @ dz
        grads[f"b{idx}"] = dz.sum(axis=0)
        if idx > 0:
            dh = dz @ params.layers[f"w{idx}"].T
    return grads


def huber_loss(pred, target, delta: float = 1.0):
    """(loss, dloss/dpred); quadratic inside |e| <= delta, linear outside."""
    if delta <= 0:
        raise ValidationError("delta must be > 0")
    e = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    abs_e = np.abs(e)
    loss = np.where(abs_e <= delta, 0.5 * e**2, delta * (abs_e - 0.5 * delta))
    grad = np.clip(e, -delta, delta)
    if loss.ndim == 0:
        return float(loss), float(grad)
    return loss, grad


@dataclass
class OptimizerState:
    """Adam accumulators (decay 0.9/0.999, stabilizer 1e-8 by default)."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: MLPParams, learning_rate: float) -> "OptimizerState":
        state = cls(learning_rate=learning_rate)
        for name, arr in params.layers.items():
            state.m[name] = np.zeros_like(arr)
            state.v[name] = np.zeros_like(arr)
        return state


def optimizer_step(
    params: MLPParams, grads: dict[str, np.ndarray], opt: OptimizerState
) -> None:
    """One bias-corrected adaptive-moment update, in place.

    Rejects the entire update (mutating nothing) if any gradient entry is
    non-finite, naming the offending layer.
    """
    for name in params.layers:
        g = grads.get(name)
        if g is None:
            raise ValidationError(f"missing gradient for layer {name!r}")
        if not np.isfinite(g).all():
            raise UpdateRejected(name)
    opt.step += 1
    t = opt.step
    for name, arr in params.layers.items():
        g = grads[name]
        opt.m[name] = opt.beta1 * opt.m[name] + (1 - opt.beta1) * g
        opt.v[name] = opt.beta2 * opt.v[name] + (1 - opt.beta2) * g**2
        m_hat = opt.m[name] / (1 - opt.beta1**t)
        v_hat = opt.v[name] / (1 - opt.beta2**t)
        arr -= opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.eps)


def clone_into_target(online: MLPParams) -> MLPParams:
    """Deep copy; later updates to the online network leave it untouched."""
    return MLPParams(
        {name: arr.copy() for name, arr in online.layers.items()},
        online.input_dim,
        online.hidden,
        online.n_actions,
        online.head,
    )


def save_params(params: MLPParams, path) -> None:
    """Layer-ordered flat dump: magic, JSON shape header, raw float64 data."""
    header = {
        "input_dim": params.input_dim,
        "hidden": list(params.hidden),
        "n_actions": params.n_actions,
        "head": params.head.value,
        "layers": [{"name": n, "shape": list(a.shape)} for n, a in params.layers.items()],
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for arr in params.layers.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_params(path) -> MLPParams:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValidationError(f"{path}: not a network checkpoint")
        header = json.loads(fh.readline().decode("utf-8"))
        layers: dict[str, np.ndarray] = {}
        for entry in header["layers"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape))
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise ValidationError(f"{path}: truncated checkpoint")
            layers[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return MLPParams(
        layers,
        header["input_dim"],
        tuple(header["hidden"]),
        header["n_actions"],
        HeadKind(header["head"]),
    )
