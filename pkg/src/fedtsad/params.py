"""Flat parameter vectors, their shape manifests, and SGD.

A :class:`ParamVector` is the unit of federated aggregation: a single
flat float64 array plus an ordered manifest of named shapes. Flattening
follows manifest order (model construction order), and
``restore(flatten(x)) == x`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ManifestError, ConfigError

Manifest = tuple[tuple[str, tuple[int, ...]], ...]


@dataclass(frozen=True)
class ParamVector:
    values: np.ndarray
    manifest: Manifest

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != 1:
            raise ManifestError("ParamVector values must be 1-D")
        expected = sum(int(np.prod(shape)) for _, shape in self.manifest)
        if self.values.size != expected:
            raise ManifestError(
                f"flat length {self.values.size} does not match manifest total {expected}")

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self.manifest)


def flatten_params(named: dict[str, np.ndarray]) -> ParamVector:
    """Flatten named arrays in insertion order into a ParamVector."""
    manifest = tuple((name, tuple(arr.shape)) for name, arr in named.items())
    if named:
        values = np.concatenate([np.asarray(arr, dtype=np.float64).reshape(-1)
                                 for arr in named.values()])
    else:
        values = np.zeros(0)
    return ParamVector(values, manifest)


def restore_params(pv: ParamVector) -> dict[str, np.ndarray]:
    """Invert :func:`flatten_params`; exact round trip."""
    out: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in pv.manifest:
        size = int(np.prod(shape))
        out[name] = pv.values[offset:offset + size].reshape(shape).copy()
        offset += size
    if offset != pv.values.size:
        raise ManifestError("manifest does not cover the flat vector")
    return out


def check_same_manifest(a: ParamVector, b: ParamVector):
    if a.manifest != b.manifest:
        raise ManifestError("parameter vectors have different manifests")


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float
    momentum: float = 0.0

    def __post_init__(self):
        # lr = 0 is allowed as a degenerate no-op optimizer (useful in tests)
        if not self.learning_rate >= 0.0:
            raise ConfigError(f"learning_rate must be nonnegative, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")


def sgd_step(params: ParamVector, grads: ParamVector, cfg: SgdConfig,
             velocity: ParamVector | None = None) -> tuple[ParamVector, ParamVector]:
    """One (momentum) SGD update: v' = mu*v + g, w' = w - lr*v'.

    Returns the updated parameters and the updated velocity buffer.
    """
    check_same_manifest(params, grads)
    if velocity is None:
        v = np.zeros_like(params.values)
    else:
        check_same_manifest(params, velocity)
        v = velocity.values
    v_new = cfg.momentum * v + grads.values
    w_new = params.values - cfg.learning_rate * v_new
    return ParamVector(w_new, params.manifest), ParamVector(v_new, params.manifest)


class SgdOptimizer:
    """Stateful wrapper keeping the momentum buffer across steps.

    Optimizer state is strictly local to its owner; federated
    aggregation averages parameters only.
    """

    def __init__(self, cfg: SgdConfig):
        self.cfg = cfg
        self.velocity: ParamVector | None = None

    def step(self, params: ParamVector, grads: ParamVector) -> ParamVector:
        new_params, self.velocity = sgd_step(params, grads, self.cfg, self.velocity)
        return new_params


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...],
                   fan_in: int | None = None, fan_out: int | None = None) -> np.ndarray:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out)) from a seeded generator."""
    if fan_in is None or fan_out is None:
        if len(shape) == 1:
            fan_in = fan_out = shape[0]
        else:
            fan_in = int(np.prod(shape[:-1]))
            fan_out = shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
