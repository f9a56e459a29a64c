"""Scalar activation functions with the metadata the kernel quadrature needs.

An activation is a vectorized scalar map plus a declared name (used for
provenance in output files) and a flag saying whether it has a kink at the
origin. The flag lets the generic-activation quadrature split its angular
integral exactly at the kink rays, which is what restores spectral accuracy
for ReLU-family nonlinearities.

Custom activations are registered by name so that configs stay serializable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Activation:
    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    kink_at_zero: bool = False

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.fn(x)


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


RELU = Activation("relu", _relu, kink_at_zero=True)
TANH = Activation("tanh", np.tanh)

_REGISTRY: Dict[str, Activation] = {RELU.name: RELU, TANH.name: TANH}


def register_activation(act: Activation) -> Activation:
    """Register a custom activation under its declared name."""
    if not act.name or not act.name.isidentifier():
        raise ConfigError(f"activation name {act.name!r} is not a valid identifier")
    _REGISTRY[act.name] = act
    return act


def get_activation(name: str) -> Activation:
    try:
        return _REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise ConfigError(f"unknown activation {name!r} (known: {known})") from None
