"""Roof functions ``phi: Y -> [2, inf)``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .models import MarkovModel


@dataclass(frozen=True, eq=False)
class RoofFunction:
    """A roof given by a vectorised callable on the global coordinate of ``Y``.

    ``tail_weight`` is the exponent ``delta_0`` of the exponential-tail sum.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    tail_weight: float = 1.0
    params: dict = field(default_factory=dict)

    def __call__(self, y) -> np.ndarray:
        return self.func(np.asarray(y, dtype=float))

    def describe(self) -> dict:
        return {"name": self.name, "tail_weight": self.tail_weight, **self.params}


def cosine_roof(base: float = 2.5, amplitude: float = 0.5, frequency: int = 1) -> RoofFunction:
    """``phi(y) = base + amplitude * cos(2 pi frequency y)``."""

    def func(y):
        return base + amplitude * np.cos(2.0 * np.pi * frequency * y)

    return RoofFunction("cosine", func, params={"base": base, "amplitude": amplitude,
                                                 "frequency": frequency})


def constant_roof(value: float = 2.0) -> RoofFunction:
    def func(y):
        return np.full(np.shape(y), float(value))

    return RoofFunction("constant", func, params={"value": value})


def affine_roof(offset: float = 1.9, slope: float = 1.0) -> RoofFunction:
    """``phi(y) = offset + slope*y``; mostly useful for rejection tests."""

    def func(y):
        return offset + slope * y

    return RoofFunction("affine", func, params={"offset": offset, "slope": slope})


def branch_index_roof(model: MarkovModel, base: float = 2.0, step: float = 0.25,
                      amplitude: float = 0.0, tail_weight: float = 1.0) -> RoofFunction:
    """Unbounded roof ``phi = base + step*j + amplitude*sin(pi*F y)`` on ``Y_j``.

    Used with truncated countable models to exercise exponential tails.
    """

    def func(y):
        j = model.branch_of(y)
        return base + step * j + amplitude * np.sin(np.pi * model.forward(y))

    return RoofFunction("branch_index", func, tail_weight=tail_weight,
                        params={"base": base, "step": step, "amplitude": amplitude})


def build_roof(spec: dict, model: MarkovModel) -> RoofFunction:
    spec = dict(spec)
    name = spec.pop("name")
    if name == "cosine":
        return cosine_roof(**spec)
    if name == "constant":
        return constant_roof(**spec)
    if name == "affine":
        return affine_roof(**spec)
    if name == "branch_index":
        return branch_index_roof(model, **spec)
    raise ValueError(f"unknown roof {name!r}")
