"""Pointwise nonlinearity tags shared by the hyperboloid and ball operations.

Only positively homogeneous activations are admitted (relu and leaky_relu):
the cross-model equivalence of the lifted pointwise maps relies on
sigma(l * x) = l * sigma(x) for l > 0, which fails for e.g. tanh or sigmoid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Nonlinearity:
    """Validated activation tag: kind 'relu' or 'leaky_relu' (slope in (0,1))."""

    kind: str
    slope: float = 0.0

    def __post_init__(self):
        if self.kind == "relu":
            if self.slope != 0.0:
                raise ValueError("relu takes no slope")
        elif self.kind == "leaky_relu":
            if not 0.0 < self.slope < 1.0:
                raise ValueError(f"leaky_relu slope must be in (0,1), got {self.slope}")
        else:
            raise ValueError(f"unsupported nonlinearity {self.kind!r}; use relu or leaky_relu")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.where(x > 0.0, x, self.slope * x)


RELU = Nonlinearity("relu")


def leaky_relu(slope: float) -> Nonlinearity:
    return Nonlinearity("leaky_relu", float(slope))


def parse_nonlinearity(tag: str) -> Nonlinearity:
    """Parse 'relu' or 'leaky_relu:<slope>' config strings."""
    tag = tag.strip()
    if tag == "relu":
        return RELU
    if tag.startswith("leaky_relu"):
        _, _, slope = tag.partition(":")
        return leaky_relu(float(slope) if slope else 0.01)
    raise ValueError(f"unknown nonlinearity tag {tag!r}")
