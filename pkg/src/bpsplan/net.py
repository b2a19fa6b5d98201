"""Fully connected regression network with dense skip connections.

The network maps [world features, normalized start, normalized goal] to the
deviation of the path's interior waypoints from the straight line.  Blocks
of tapered dense layers feed forward; each block's output is concatenated
onto its input before the next block, and a final linear layer reads the
full concatenation.  Forward, backward, and the SGD-family update rules are
implemented directly on numpy arrays so training is deterministic given the
init and shuffle seeds.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import bps as bps_mod
from .errors import DataError, NumericError

_MAGIC = b"BPN1"


def _act(name):
    if name == "tanh":
        return np.tanh, lambda pre: 1.0 - np.tanh(pre) ** 2
    if name == "relu":
        return (lambda x: np.maximum(x, 0.0)), (lambda pre: (pre > 0.0).astype(np.float64))
    raise ValueError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 100
    optimizer: str = "sgd"  # "sgd" | "momentum" | "adam"
    momentum: float = 0.9
    shuffle_seed: int = 0
    # Final learning rate as a fraction of the initial one; 1.0 keeps the
    # rate constant, smaller values decay it cosine-shaped over the epochs.
    lr_final_fraction: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("hyperparameters must be positive")
        if not 0.0 < self.lr_final_fraction <= 1.0:
            raise ValueError("lr_final_fraction must lie in (0, 1]")
        if self.optimizer not in ("sgd", "momentum", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def lr_at(self, epoch: int) -> float:
        if self.lr_final_fraction >= 1.0:
            return self.learning_rate
        t = epoch / max(self.epochs - 1, 1)
        lo = self.learning_rate * self.lr_final_fraction
        return lo + 0.5 * (self.learning_rate - lo) * (1.0 + np.cos(np.pi * t))


class Mlp:
    """Dense blocks with concatenation skips and a linear output layer."""

    def __init__(self, in_width: int, out_width: int,
                 blocks=((512, 256), (256, 128), (128, 64)),
                 activation: str = "tanh", seed: int = 0):
        for widths in blocks:
            if any(b > a for a, b in zip(widths, widths[1:])):
                raise ValueError(f"layer widths must taper within a block, got {widths}")
        self.in_width = int(in_width)
        self.out_width = int(out_width)
        self.blocks = tuple(tuple(int(w) for w in b) for b in blocks)
        self.activation = activation
        self.seed = int(seed)

        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        width = self.in_width
        self._block_sizes = []
        for widths in self.blocks:
            fan = width
            for w in widths:
                self._init_layer(rng, fan, w)
                fan = w
            self._block_sizes.append(len(widths))
            width += widths[-1]
        self._init_layer(rng, width, self.out_width)
        self.concat_width = width

    def _init_layer(self, rng, n_in, n_out):
        limit = np.sqrt(6.0 / (n_in + n_out))
        self.weights.append(rng.uniform(-limit, limit, size=(n_in, n_out)))
        self.biases.append(np.zeros(n_out))

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self):
        return self.weights + self.biases

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        y = self._forward_cached(x[None] if single else x)[0]
        return y[0] if single else y

    def _forward_cached(self, x: np.ndarray):
        """Batch forward pass; the cache carries layer inputs and pre-activations."""
        if x.shape[1] != self.in_width:
            raise ValueError(f"expected input width {self.in_width}, got {x.shape[1]}")
        act, _ = _act(self.activation)
        cache = []
        z = x
        li = 0
        for n_layers in self._block_sizes:
            h = z
            for _ in range(n_layers):
                pre = h @ self.weights[li] + self.biases[li]
                cache.append((h, pre))
                h = act(pre)
                li += 1
            z = np.concatenate([z, h], axis=1)
        out = z @ self.weights[li] + self.biases[li]
        cache.append((z, out))
        return out, cache

    def backward(self, cache, dout: np.ndarray):
        """Gradients of all weights/biases given d(loss)/d(output)."""
        _, dact = _act(self.activation)
        gw = [None] * len(self.weights)
        gb = [None] * len(self.biases)

        z_final, _ = cache[-1]
        li = len(self.weights) - 1
        gw[li] = z_final.T @ dout
        gb[li] = dout.sum(axis=0)
        dz = dout @ self.weights[li].T

        ci = len(cache) - 2  # last block-layer cache entry
        for b in range(len(self._block_sizes) - 1, -1, -1):
            n_layers = self._block_sizes[b]
            width_in = cache[ci - n_layers + 1][0].shape[1]
            dz_prev, dh = dz[:, :width_in], dz[:, width_in:]
            for _ in range(n_layers):
                h_in, pre = cache[ci]
                li -= 1
                dpre = dh * dact(pre)
                gw[li] = h_in.T @ dpre
                gb[li] = dpre.sum(axis=0)
                dh = dpre @ self.weights[li].T
                ci -= 1
            dz = dz_prev + dh
        return gw, gb, dz


def train(net: Mlp, inputs: np.ndarray, targets: np.ndarray, config: TrainConfig,
          sample_weights: np.ndarray | None = None):
    """Mini-batch descent on weighted MSE; returns the per-epoch loss history.

    The per-sample loss is the mean squared error over output dimensions
    scaled by that sample's weight; batch gradients divide by the batch size,
    so doubling a weight matches duplicating the sample up to the overall
    dataset-size normalization.
    """
    X = np.asarray(inputs, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if X.shape[0] != Y.shape[0] or X.shape[0] == 0:
        raise ValueError("inputs and targets must be non-empty and aligned")
    if sample_weights is None:
        w = np.ones(X.shape[0])
    else:
        w = np.asarray(sample_weights, dtype=np.float64)
        if w.shape != (X.shape[0],):
            raise ValueError("sample_weights length mismatch")

    rng = np.random.default_rng(config.shuffle_seed)
    params = net.parameters()
    state = _OptState(config, params)
    n, out_dim = X.shape[0], Y.shape[1]
    history = []
    for epoch in range(config.epochs):
        state.lr = config.lr_at(epoch)
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            pred, cache = net._forward_cached(X[idx])
            diff = pred - Y[idx]
            losses = (diff * diff).mean(axis=1)
            epoch_loss += float((w[idx] * losses).sum())
            dout = diff * (2.0 * w[idx] / (out_dim * len(idx)))[:, None]
            gw, gb, _ = net.backward(cache, dout)
            state.step(net.weights + net.biases, gw + gb)
        epoch_loss /= n
        if not np.isfinite(epoch_loss):
            raise NumericError(f"training diverged (loss={epoch_loss}); lower the learning rate")
        history.append(epoch_loss)
    return history


class _OptState:
    def __init__(self, config: TrainConfig, params):
        self.cfg = config
        self.lr = config.learning_rate
        self.t = 0
        if config.optimizer == "momentum":
            self.vel = [np.zeros_like(p) for p in params]
        elif config.optimizer == "adam":
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        lr = self.lr
        if self.cfg.optimizer == "sgd":
            for p, g in zip(params, grads):
                p -= lr * g
        elif self.cfg.optimizer == "momentum":
            for p, g, v in zip(params, grads, self.vel):
                v *= self.cfg.momentum
                v += g
                p -= lr * v
        else:  # adam
            self.t += 1
            b1, b2, eps = 0.9, 0.999, 1e-8
            corr1 = 1.0 - b1**self.t
            corr2 = 1.0 - b2**self.t
            for p, g, m, v in zip(params, grads, self.m, self.v):
                m *= b1
                m += (1 - b1) * g
                v *= b2
                v += (1 - b2) * g * g
                p -= lr * (m / corr1) / (np.sqrt(v / corr2) + eps)


# --- path encoding ----------------------------------------------------------


def straight_line(q_start: np.ndarray, q_goal: np.ndarray, n_t: int) -> np.ndarray:
    return np.linspace(np.asarray(q_start, dtype=np.float64),
                       np.asarray(q_goal, dtype=np.float64), n_t)


def path_to_delta(path: np.ndarray) -> np.ndarray:
    """Interior waypoints minus the straight-line interpolation, (n_t-2, dof)."""
    path = np.asarray(path, dtype=np.float64)
    return path[1:-1] - straight_line(path[0], path[-1], path.shape[0])[1:-1]


def delta_to_path(delta: np.ndarray, q_start: np.ndarray, q_goal: np.ndarray) -> np.ndarray:
    delta = np.asarray(delta, dtype=np.float64)
    n_t = delta.shape[0] + 2
    path = straight_line(q_start, q_goal, n_t)
    path[1:-1] += delta
    return path


# --- task-level inference -----------------------------------------------------


@dataclass
class Normalization:
    limits: np.ndarray  # (n_dof, 2)
    reach: float

    def joints(self, q: np.ndarray) -> np.ndarray:
        lo, hi = self.limits[:, 0], self.limits[:, 1]
        return 2.0 * (q - lo) / (hi - lo) - 1.0

    def features(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values / self.reach, -1.0, 1.0)


def build_input(norm: Normalization, feature_values: np.ndarray,
                q_start: np.ndarray, q_goal: np.ndarray) -> np.ndarray:
    return np.concatenate([norm.features(feature_values),
                           norm.joints(q_start), norm.joints(q_goal)])


@dataclass
class Checkpoint:
    """A trained network bound to the basis point set it was trained with."""

    net: Mlp
    bps: bps_mod.BasisPointSet
    robot_name: str
    norm: Normalization
    n_t: int
    n_dof: int

    def predict_paths(self, feature_matrix: np.ndarray, starts: np.ndarray,
                      goals: np.ndarray) -> np.ndarray:
        """Batched prediction: (B, n_b) features + (B, dof) endpoints -> (B, n_t, dof)."""
        B = feature_matrix.shape[0]
        X = np.concatenate([
            np.clip(feature_matrix / self.norm.reach, -1.0, 1.0),
            self.norm.joints(starts), self.norm.joints(goals)], axis=1)
        delta = self.net.forward(X).reshape(B, self.n_t - 2, self.n_dof)
        paths = np.empty((B, self.n_t, self.n_dof))
        for i in range(B):
            paths[i] = delta_to_path(delta[i], starts[i], goals[i])
        lo, hi = self.norm.limits[:, 0], self.norm.limits[:, 1]
        paths[:, 1:-1] = np.clip(paths[:, 1:-1], lo, hi)
        return paths

    def predict_path(self, feature_values: np.ndarray, q_start: np.ndarray,
                     q_goal: np.ndarray) -> np.ndarray:
        return self.predict_paths(np.asarray(feature_values, dtype=np.float64)[None],
                                  np.asarray(q_start, dtype=np.float64)[None],
                                  np.asarray(q_goal, dtype=np.float64)[None])[0]


def predict_path(checkpoint: Checkpoint, features: bps_mod.BpsFeatures,
                 q_start: np.ndarray, q_goal: np.ndarray) -> np.ndarray:
    return checkpoint.predict_path(features.values, q_start, q_goal)


# --- checkpoint file ----------------------------------------------------------
#
# Little-endian: magic "BPN1", u32 JSON architecture descriptor, f32 weight
# blobs in parameter order, u32-length-prefixed embedded basis point set,
# u32-length robot name, u32 JSON normalization constants.


def _write_block(fh, blob: bytes):
    fh.write(struct.pack("<I", len(blob)))
    fh.write(blob)


def _read_block(data: bytes, off: int):
    (n,) = struct.unpack_from("<I", data, off)
    return data[off + 4:off + 4 + n], off + 4 + n


def save_checkpoint(path, ckpt: Checkpoint):
    arch = {
        "in_width": ckpt.net.in_width,
        "out_width": ckpt.net.out_width,
        "blocks": [list(b) for b in ckpt.net.blocks],
        "activation": ckpt.net.activation,
        "seed": ckpt.net.seed,
        "n_t": ckpt.n_t,
        "n_dof": ckpt.n_dof,
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        _write_block(fh, json.dumps(arch, sort_keys=True).encode())
        for arr in ckpt.net.parameters():
            _write_block(fh, arr.astype("<f4").tobytes())
        _write_block(fh, bps_mod.bps_to_bytes(ckpt.bps))
        _write_block(fh, ckpt.robot_name.encode())
        norm = {"limits": ckpt.norm.limits.tolist(), "reach": ckpt.norm.reach}
        _write_block(fh, json.dumps(norm, sort_keys=True).encode())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise DataError(f"{path}: not a checkpoint (magic {data[:4]!r})")
    blob, off = _read_block(data, 4)
    arch = json.loads(blob.decode())
    net = Mlp(arch["in_width"], arch["out_width"],
              blocks=tuple(tuple(b) for b in arch["blocks"]),
              activation=arch["activation"], seed=arch["seed"])
    for i, tmpl in enumerate(net.parameters()):
        blob, off = _read_block(data, off)
        arr = np.frombuffer(blob, dtype="<f4").astype(np.float64).reshape(tmpl.shape)
        if i < len(net.weights):
            net.weights[i] = arr
        else:
            net.biases[i - len(net.weights)] = arr
    blob, off = _read_block(data, off)
    bset = bps_mod.bps_from_bytes(blob)
    blob, off = _read_block(data, off)
    robot_name = blob.decode()
    blob, off = _read_block(data, off)
    norm_d = json.loads(blob.decode())
    norm = Normalization(np.asarray(norm_d["limits"]), float(norm_d["reach"]))
    return Checkpoint(net, bset, robot_name, norm, int(arch["n_t"]), int(arch["n_dof"]))
