"""Full-branch Gibbs-Markov base maps on an interval.

Only piecewise-linear full-branch maps are built in: the branch ``Y_j`` is an
interval of length ``l_j`` mapped affinely onto ``Y``. Lebesgue measure is then
invariant and the inverse Jacobian on ``Y_j`` is the constant ``l_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class MarkovModel:
    """A finite (or truncated countable) full-branch Gibbs-Markov map.

    Attributes
    ----------
    edges : ndarray, shape (J+1,)
        Branch endpoints; ``Y_j = [edges[j], edges[j+1])``.
    inverse_branch : callable ``(j, y) -> psi_j(y)``
    branch_weight : callable ``(j, y) -> g(psi_j(y))``
    branch_measure : ndarray, shape (J,)
        ``mu(Y_j)``.
    density : callable
        Density of ``mu`` with respect to Lebesgue on ``Y``.
    """

    name: str
    edges: np.ndarray
    inverse_branch: Callable[[int, np.ndarray], np.ndarray]
    branch_weight: Callable[[int, np.ndarray], np.ndarray]
    branch_measure: np.ndarray
    density: Callable[[np.ndarray], np.ndarray]
    expansion: float
    eta: float = 0.5
    truncation_tail_mass: float = 0.0
    tail_bound: float = 1e-10
    params: dict = field(default_factory=dict)

    @property
    def branch_count(self) -> int:
        return len(self.edges) - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])

    def branch_of(self, y) -> np.ndarray:
        """Index of the branch containing each point (right end folded into the last branch)."""
        y = np.asarray(y, dtype=float)
        j = np.searchsorted(self.edges, y, side="right") - 1
        return np.clip(j, 0, self.branch_count - 1)

    def forward(self, y) -> np.ndarray:
        """The map ``F`` itself (affine on each branch)."""
        y = np.asarray(y, dtype=float)
        j = self.branch_of(y)
        lo = self.edges[j]
        length = self.edges[j + 1] - lo
        y0, y1 = self.domain
        return y0 + (y - lo) / length * (y1 - y0)

    def preimages(self, y) -> np.ndarray:
        """All first preimages, shape ``(J,) + y.shape``."""
        y = np.asarray(y, dtype=float)
        return np.stack([self.inverse_branch(j, y) for j in range(self.branch_count)])

    def weights(self, y) -> np.ndarray:
        """``g(psi_j y)`` for every branch, shape ``(J,) + y.shape``."""
        y = np.asarray(y, dtype=float)
        return np.stack([self.branch_weight(j, y) for j in range(self.branch_count)])

    def describe(self) -> dict:
        return {"name": self.name, "branch_count": self.branch_count, **self.params}


def linear_full_branch(lengths, weights=None, *, name="linear", eta=0.5,
                       truncation_tail_mass=0.0, tail_bound=1e-10, params=None) -> MarkovModel:
    """Piecewise-affine full-branch map with branch lengths ``lengths``.

    ``weights`` overrides ``g`` on each branch (default: the Lebesgue-preserving
    choice ``g = length``). Overriding is only useful to build invalid models
    for validator tests.
    """
    lengths = np.asarray(lengths, dtype=float)
    edges = np.concatenate([[0.0], np.cumsum(lengths)])
    total = edges[-1]
    g = lengths if weights is None else np.asarray(weights, dtype=float)
    if g.shape != lengths.shape:
        raise ValueError("one weight per branch required")

    def inverse_branch(j, y):
        return edges[j] + lengths[j] * (np.asarray(y, dtype=float) / total)

    def branch_weight(j, y):
        return np.full(np.shape(y), g[j])

    def density(y):
        return np.ones(np.shape(y))

    return MarkovModel(
        name=name,
        edges=edges,
        inverse_branch=inverse_branch,
        branch_weight=branch_weight,
        branch_measure=lengths.copy(),
        density=density,
        expansion=float(total / lengths.max()),
        eta=eta,
        truncation_tail_mass=truncation_tail_mass,
        tail_bound=tail_bound,
        params=dict(params or {}),
    )


def doubling_map(eta: float = 0.5) -> MarkovModel:
    """``F(y) = 2y mod 1`` with Lebesgue measure: two branches, ``g = 1/2``."""
    return linear_full_branch([0.5, 0.5], name="doubling", eta=eta)


def geometric_branches(branch_count: int = 40, eta: float = 0.5,
                       tail_bound: float = 1e-10) -> MarkovModel:
    """Truncation of the countable map with ``mu(Y_j) = 2**-j``, ``j = 1..J``.

    The discarded tail has mass ``2**-J`` and is carried in the model.
    """
    lengths = 0.5 ** np.arange(1, branch_count + 1)
    tail = 0.5 ** branch_count
    # branches are rescaled onto Y = [0, 1 - tail) so that psi_j maps Y onto Y_j
    return linear_full_branch(
        lengths, name="geometric", eta=eta, truncation_tail_mass=tail,
        tail_bound=tail_bound, params={"branch_count": branch_count},
    )


BUILTIN_MODELS = {
    "doubling": doubling_map,
    "geometric": geometric_branches,
}


def build_model(spec: dict) -> MarkovModel:
    """Construct a builtin model from a ``{"name": ..., **params}`` mapping."""
    spec = dict(spec)
    name = spec.pop("name")
    if name == "linear":
        return linear_full_branch(spec.pop("lengths"), spec.pop("weights", None), **spec)
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}") from None
    return factory(**spec)
