"""Adam with global-norm gradient clipping.

Parameters live in named float64 arrays; gradients are dicts over the same
names, and names missing from a gradient dict mean zero gradient.  Frozen
parameters are skipped entirely (no moment updates), which keeps their bytes
bit-identical through a frozen phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np


def clip_global_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so their global L2 norm is <= max_norm."""
    total = math.fsum(float(np.sum(g * g)) for g in grads.values())
    norm = math.sqrt(total)
    if norm > max_norm > 0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


@dataclass
class Adam:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def step(
        self,
        arrays: Mapping[str, np.ndarray],
        grads: Mapping[str, np.ndarray],
        lr: float,
        skip: Iterable[str] = (),
    ) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        skip = set(skip)
        for name, param in arrays.items():
            if name in skip:
                continue
            grad = grads.get(name)
            if grad is None:
                grad = np.zeros_like(param)
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(param)
                self.v[name] = np.zeros_like(param)
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
