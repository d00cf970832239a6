"""Fully connected update network and its parameter container.

The network maps a flattened gradient view to a precoder update of the
same length: ReLU hidden layers, linear output. The output layer starts
at exactly zero so an untrained network proposes the zero update and the
first candidate precoder equals the starting point. Training then moves
the proposal away from zero only as far as the objective rewards it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .linalg import RngStream

__all__ = ["MetaNetParams", "init_meta_net", "mlp_forward",
           "save_checkpoint", "load_checkpoint"]

_NET_FORMAT = "rsmeta-net-v1"


@dataclass
class MetaNetParams:
    """Layer weights (out, in) and biases (out,), input to output order."""

    weights: list
    biases: list

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must pair up layer by layer")
        if not self.weights:
            raise ValueError("network needs at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i} has inconsistent shapes "
                                 f"{w.shape} / {b.shape}")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i} input dim does not chain")

    @property
    def dims(self) -> tuple:
        """Layer sizes, input first."""
        return (self.weights[0].shape[1],
                *[w.shape[0] for w in self.weights])

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def to_vector(self) -> np.ndarray:
        """Flatten as w0, b0, w1, b1, ... (row-major weights)."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, vec: np.ndarray, dims) -> "MetaNetParams":
        vec = np.asarray(vec, dtype=float)
        dims = tuple(int(d) for d in dims)
        weights, biases, pos = [], [], 0
        for i in range(len(dims) - 1):
            nin, nout = dims[i], dims[i + 1]
            weights.append(vec[pos:pos + nout * nin].reshape(nout, nin).copy())
            pos += nout * nin
            biases.append(vec[pos:pos + nout].copy())
            pos += nout
        if pos != vec.size:
            raise ValueError(f"vector length {vec.size} does not match dims {dims}")
        return cls(weights=weights, biases=biases)


def init_meta_net(rng: RngStream, dim: int, hidden=(50, 50)) -> MetaNetParams:
    """Build a dim -> hidden... -> dim network.

    Hidden layers use fan-in scaled uniform weights and biases in
    (-1/sqrt(fan_in), 1/sqrt(fan_in)); the output layer is all zeros, so
    the freshly built network is exactly the zero map.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    dims = [int(dim), *[int(h) for h in hidden], int(dim)]
    if any(d < 1 for d in dims):
        raise ValueError(f"all layer sizes must be >= 1, got {dims}")
    weights, biases = [], []
    for i in range(len(dims) - 1):
        nin, nout = dims[i], dims[i + 1]
        if i == len(dims) - 2:
            weights.append(np.zeros((nout, nin)))
            biases.append(np.zeros(nout))
        else:
            bound = 1.0 / np.sqrt(nin)
            weights.append(rng.uniform(-bound, bound, (nout, nin)))
            biases.append(rng.uniform(-bound, bound, (nout,)))
    return MetaNetParams(weights=weights, biases=biases)


def mlp_forward(params: MetaNetParams, x: np.ndarray) -> np.ndarray:
    """Plain forward pass: ReLU on hidden layers, linear output."""
    h = np.asarray(x, dtype=float)
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = w @ h + b
        if i != last:
            h = np.maximum(h, 0.0)
    return h


def save_checkpoint(path, params: MetaNetParams, meta: dict = None) -> None:
    """Write network parameters (and optional run metadata) to .npz."""
    arrays = {"format": _NET_FORMAT,
              "n_layers": np.int64(len(params.weights)),
              "meta": json.dumps(meta or {})}
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    np.savez_compressed(path, **arrays)


def load_checkpoint(path):
    """Read back a checkpoint; returns (params, meta)."""
    with np.load(path) as data:
        fmt = str(data["format"]) if "format" in data.files else None
        if fmt != _NET_FORMAT:
            raise ValueError(f"unrecognized checkpoint format {fmt!r}")
        n = int(data["n_layers"])
        weights = [data[f"w{i}"] for i in range(n)]
        biases = [data[f"b{i}"] for i in range(n)]
        meta = json.loads(str(data["meta"]))
    return MetaNetParams(weights=weights, biases=biases), meta
