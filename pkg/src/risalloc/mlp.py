"""Dense network with hand-written backpropagation, on plain numpy.

Architecture: a chain of hidden blocks (affine -> ReLU -> batch norm ->
dropout) feeding two heads, one sigmoid head scaled to [0, pi] for element
phases and one sigmoid head for raw per-user column shares. Training mode
normalizes with batch statistics and applies inverted dropout; eval mode
uses the running statistics and no dropout, so outputs are deterministic
and feasible by construction.

Backward passes are exact: every formula here is checked against central
finite differences in the test suite.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .features import PcaModel
from .serial import decode_named_arrays, encode_named_arrays

BN_EPS = 1e-8
# running = (1 - momentum) * running + momentum * batch, biased batch variance
BN_MOMENTUM = 0.1

CHECKPOINT_MAGIC = b"RISM"
CHECKPOINT_VERSION = 1


class CheckpointError(RuntimeError):
    """Unreadable, foreign, or corrupted model checkpoint."""


@dataclass
class MlpArch:
    """Layer sizing: input width, hidden widths, and the two head widths."""

    input_dim: int
    phase_dim: int       # number of surface elements
    alloc_users: int
    alloc_cols: int
    hidden: tuple = (500, 450, 400, 300)
    dropout_rate: float = 0.5

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)

    @property
    def alloc_dim(self) -> int:
        return self.alloc_users * self.alloc_cols

    def validate(self) -> "MlpArch":
        if self.input_dim < 1 or self.phase_dim < 1:
            raise ValueError("input and phase dimensions must be >= 1")
        if self.alloc_users < 1 or self.alloc_cols < 1:
            raise ValueError("allocation head dimensions must be >= 1")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")
        return self

    def to_dict(self) -> dict:
        return {"input_dim": self.input_dim, "phase_dim": self.phase_dim,
                "alloc_users": self.alloc_users, "alloc_cols": self.alloc_cols,
                "hidden": list(self.hidden), "dropout_rate": self.dropout_rate}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpArch":
        return cls(input_dim=int(d["input_dim"]), phase_dim=int(d["phase_dim"]),
                   alloc_users=int(d["alloc_users"]), alloc_cols=int(d["alloc_cols"]),
                   hidden=tuple(d["hidden"]), dropout_rate=float(d["dropout_rate"]))


@dataclass
class MlpModel:
    """Parameter tensors: per-layer affine weights/biases (hidden layers
    first, then the phase head, then the allocation head) and per-hidden-
    layer batch-norm scale/shift plus running statistics."""

    arch: MlpArch
    weights: list
    biases: list
    bn_scale: list
    bn_shift: list
    bn_mean: list
    bn_var: list


def init_model(arch: MlpArch, seed: int = 0) -> MlpModel:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases, unit batch
    norm scale, zero shift, fresh running statistics."""
    arch.validate()
    rng = np.random.default_rng(seed)
    dims = [arch.input_dim, *arch.hidden]
    shapes = [(dims[i], dims[i + 1]) for i in range(len(arch.hidden))]
    shapes.append((arch.hidden[-1], arch.phase_dim))
    shapes.append((arch.hidden[-1], arch.alloc_dim))
    weights, biases = [], []
    for fan_in, fan_out in shapes:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(
        arch=arch,
        weights=weights,
        biases=biases,
        bn_scale=[np.ones(h) for h in arch.hidden],
        bn_shift=[np.zeros(h) for h in arch.hidden],
        bn_mean=[np.zeros(h) for h in arch.hidden],
        bn_var=[np.ones(h) for h in arch.hidden],
    )


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def mlp_forward(model: MlpModel, z_batch, train_mode: bool, dropout_seed=0):
    """Run the network on an (Q, D) batch (a single row is promoted).

    Returns (theta, xi, cache): theta is (Q, L2) in [0, pi], xi is
    (Q, K, L) in [0, 1]. Training mode updates the running statistics in
    place and needs Q >= 2 for batch variance; the cache feeds
    mlp_backward.
    """
    arch = model.arch
    z = np.atleast_2d(np.asarray(z_batch, dtype=float))
    if z.shape[1] != arch.input_dim:
        raise ValueError(f"expected {arch.input_dim} inputs, got {z.shape[1]}")
    Q = z.shape[0]
    if train_mode and Q < 2:
        raise ValueError("training mode needs at least 2 rows for batch statistics")
    rng = np.random.default_rng(dropout_seed) if (train_mode and arch.dropout_rate > 0) else None

    layers = []
    a = z
    for v in range(len(arch.hidden)):
        pre = a @ model.weights[v] + model.biases[v]
        r = np.maximum(pre, 0.0)
        if train_mode:
            mu = r.mean(axis=0)
            var = r.var(axis=0)
            model.bn_mean[v] = (1.0 - BN_MOMENTUM) * model.bn_mean[v] + BN_MOMENTUM * mu
            model.bn_var[v] = (1.0 - BN_MOMENTUM) * model.bn_var[v] + BN_MOMENTUM * var
        else:
            mu = model.bn_mean[v]
            var = model.bn_var[v]
        inv = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (r - mu) * inv
        y = model.bn_scale[v] * xhat + model.bn_shift[v]
        if rng is not None:
            mask = (rng.random(y.shape) >= arch.dropout_rate) / (1.0 - arch.dropout_rate)
            y = y * mask
        else:
            mask = None
        layers.append({"input": a, "pre": pre, "xhat": xhat, "inv": inv, "mask": mask})
        a = y

    phase_pre = a @ model.weights[-2] + model.biases[-2]
    alloc_pre = a @ model.weights[-1] + model.biases[-1]
    phase_sig = _sigmoid(phase_pre)
    alloc_sig = _sigmoid(alloc_pre)
    theta = np.pi * phase_sig
    xi = alloc_sig.reshape(Q, arch.alloc_users, arch.alloc_cols)

    cache = {"train_mode": train_mode, "layers": layers, "head_input": a,
             "phase_sig": phase_sig, "alloc_sig": alloc_sig, "batch": Q}
    return theta, xi, cache


def mlp_backward(model: MlpModel, cache: dict, dtheta, dxi) -> dict:
    """Exact parameter gradients from upstream head gradients.

    dtheta is (Q, L2) against the scaled phase output, dxi is (Q, K, L)
    against the share output. The cache must come from a train-mode
    forward pass. Returns lists matching the model's parameter layout.
    """
    if not cache["train_mode"]:
        raise ValueError("backward needs a train-mode forward cache")
    arch = model.arch
    Q = cache["batch"]
    sp = cache["phase_sig"]
    sa = cache["alloc_sig"]

    dphase_pre = np.asarray(dtheta, dtype=float).reshape(Q, -1) * np.pi * sp * (1.0 - sp)
    dalloc_pre = np.asarray(dxi, dtype=float).reshape(Q, -1) * sa * (1.0 - sa)

    grads = {"weights": [None] * len(model.weights),
             "biases": [None] * len(model.biases),
             "bn_scale": [None] * len(model.bn_scale),
             "bn_shift": [None] * len(model.bn_shift)}

    head_in = cache["head_input"]
    grads["weights"][-2] = head_in.T @ dphase_pre
    grads["biases"][-2] = dphase_pre.sum(axis=0)
    grads["weights"][-1] = head_in.T @ dalloc_pre
    grads["biases"][-1] = dalloc_pre.sum(axis=0)
    da = dphase_pre @ model.weights[-2].T + dalloc_pre @ model.weights[-1].T

    for v in reversed(range(len(arch.hidden))):
        layer = cache["layers"][v]
        if layer["mask"] is not None:
            da = da * layer["mask"]
        xhat, inv = layer["xhat"], layer["inv"]
        grads["bn_scale"][v] = (da * xhat).sum(axis=0)
        grads["bn_shift"][v] = da.sum(axis=0)
        dxhat = da * model.bn_scale[v]
        dr = (inv / Q) * (Q * dxhat - dxhat.sum(axis=0)
                          - xhat * (dxhat * xhat).sum(axis=0))
        dpre = dr * (layer["pre"] > 0)
        grads["weights"][v] = layer["input"].T @ dpre
        grads["biases"][v] = dpre.sum(axis=0)
        da = dpre @ model.weights[v].T
    return grads


# ---- optimizer ----

_PARAM_KEYS = ("weights", "biases", "bn_scale", "bn_shift")


def _param_lists(model: MlpModel) -> dict:
    return {"weights": model.weights, "biases": model.biases,
            "bn_scale": model.bn_scale, "bn_shift": model.bn_shift}


@dataclass
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: dict
    v: dict
    step: int = 0
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(model: MlpModel, learning_rate: float = 0.01) -> AdamState:
    zeros = lambda: {k: [np.zeros_like(p) for p in lst] for k, lst in _param_lists(model).items()}
    return AdamState(m=zeros(), v=zeros(), learning_rate=learning_rate)


def adam_step(model: MlpModel, grads: dict, state: AdamState):
    """One Adam update in place, standard 1 - beta^t bias correction.

    Gradients here point up the objective's descent direction (they come
    from a loss), so parameters move against them.
    """
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    params = _param_lists(model)
    for key in _PARAM_KEYS:
        for p, g, m, v in zip(params[key], grads[key], state.m[key], state.v[key]):
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * g * g
            p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return model, state


# ---- bookkeeping ----

def parameter_count(arch: MlpArch) -> int:
    """Learnable scalars: affine weights and biases plus batch-norm
    scale/shift pairs (running statistics are not parameters)."""
    arch.validate()
    dims = [arch.input_dim, *arch.hidden]
    total = 0
    for i in range(len(arch.hidden)):
        total += dims[i] * dims[i + 1] + dims[i + 1]
    total += arch.hidden[-1] * arch.phase_dim + arch.phase_dim
    total += arch.hidden[-1] * arch.alloc_dim + arch.alloc_dim
    total += 2 * sum(arch.hidden)
    return total


def first_layer_weight_count(arch: MlpArch) -> int:
    """Size of the input-facing weight matrix; scales linearly with the
    feature count, which is what dimensionality reduction buys back."""
    return arch.input_dim * arch.hidden[0]


# ---- checkpoints ----

def _model_arrays(model: MlpModel) -> dict:
    arrays = {}
    for key, lst in _param_lists(model).items():
        for i, arr in enumerate(lst):
            arrays[f"{key}.{i}"] = arr
    for i, arr in enumerate(model.bn_mean):
        arrays[f"bn_mean.{i}"] = arr
    for i, arr in enumerate(model.bn_var):
        arrays[f"bn_var.{i}"] = arr
    return arrays


def save_checkpoint(path, model: MlpModel, pca: PcaModel | None = None,
                    metadata: dict | None = None) -> None:
    """Write arch, parameters, optional PCA, and training metadata.

    The array payload is CRC-checked and stored with the shared codec, so
    a load returns bit-identical tensors.
    """
    arrays = _model_arrays(model)
    if pca is not None:
        arrays["pca.feature_mean"] = pca.feature_mean
        arrays["pca.feature_scale"] = pca.feature_scale
        arrays["pca.axes"] = pca.axes
        arrays["pca.eigenvalues"] = pca.eigenvalues
    meta = {"format_version": CHECKPOINT_VERSION,
            "arch": model.arch.to_dict(),
            "has_pca": pca is not None,
            "metadata": dict(metadata or {})}
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    payload = encode_named_arrays(arrays)
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", CHECKPOINT_VERSION, len(meta_bytes)))
        f.write(meta_bytes)
        f.write(struct.pack("<IQ", zlib.crc32(payload), len(payload)))
        f.write(payload)


def load_checkpoint(path):
    """Read a checkpoint back; returns (model, pca_or_None, metadata)."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError("not a model checkpoint file")
    version, meta_len = struct.unpack("<II", blob[4:12])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {version} unsupported (library writes {CHECKPOINT_VERSION})")
    pos = 12
    meta = json.loads(blob[pos:pos + meta_len].decode("utf-8"))
    pos += meta_len
    crc, payload_len = struct.unpack("<IQ", blob[pos:pos + 12])
    pos += 12
    payload = blob[pos:pos + payload_len]
    if len(payload) != payload_len:
        raise CheckpointError("checkpoint payload truncated")
    if zlib.crc32(payload) != crc:
        raise CheckpointError("checkpoint payload failed its checksum")
    arrays = decode_named_arrays(payload)

    arch = MlpArch.from_dict(meta["arch"])
    n_affine = len(arch.hidden) + 2
    model = MlpModel(
        arch=arch,
        weights=[arrays[f"weights.{i}"] for i in range(n_affine)],
        biases=[arrays[f"biases.{i}"] for i in range(n_affine)],
        bn_scale=[arrays[f"bn_scale.{i}"] for i in range(len(arch.hidden))],
        bn_shift=[arrays[f"bn_shift.{i}"] for i in range(len(arch.hidden))],
        bn_mean=[arrays[f"bn_mean.{i}"] for i in range(len(arch.hidden))],
        bn_var=[arrays[f"bn_var.{i}"] for i in range(len(arch.hidden))],
    )
    pca = None
    if meta["has_pca"]:
        pca = PcaModel(arrays["pca.feature_mean"], arrays["pca.feature_scale"],
                       arrays["pca.axes"], arrays["pca.eigenvalues"])
    return model, pca, meta["metadata"]
