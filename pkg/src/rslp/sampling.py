"""Random and category-aware subspace generation.

Each subspace draw has its own generator keyed by (seed, draw_id), so
draws can be materialised in any order, or in parallel, without changing
their contents. Duplicate subspaces across draws are permitted, as usual
for ensembles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._seeding import STAGE_DRAW, rng_for
from .errors import ConfigError

__all__ = ["Subspace", "CategoryScheme", "draw_uniform_subspaces",
           "draw_stratified_subspaces"]


@dataclass(frozen=True)
class Subspace:
    """Sorted index set into the high-dimensional control block.

    An empty index set is the sentinel used by benchmarks for a design
    with no high-dimensional controls; samplers always produce k >= 1.
    """

    indices: tuple[int, ...]
    draw_id: int = 0

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(i < 0 for i in idx):
            raise ValueError("subspace indices must be nonnegative")
        if list(idx) != sorted(set(idx)):
            raise ValueError("subspace indices must be sorted and distinct")

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class CategoryScheme:
    """Category labels over control indices plus per-category minimum quotas."""

    categories: tuple[str, ...]
    membership: dict[int, str]
    quotas: dict[str, int]

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        bad = sorted(set(self.membership.values()) - set(self.categories))
        if bad:
            raise ConfigError(f"membership uses unlisted categories: {bad}")
        unknown = sorted(set(self.quotas) - set(self.categories))
        if unknown:
            raise ConfigError(f"quotas for unknown categories: {unknown}")
        if any(q < 0 for q in self.quotas.values()):
            raise ConfigError("quotas must be nonnegative")

    @classmethod
    def from_panel(cls, panel, roles=None, quotas=None, default_quota: int = 1):
        """Build a scheme from a panel's category labels.

        Indices are positions within the high-dimensional block. Every
        high-dimensional control must carry a label. ``quotas`` defaults to
        ``default_quota`` per category.
        """
        roles = roles if roles is not None else panel.roles
        if roles is None:
            raise ConfigError("category scheme needs variable roles")
        if panel.categories is None:
            raise ConfigError("panel carries no category labels")
        membership = {}
        for pos, name in enumerate(roles.high_dimensional):
            label = panel.categories.get(name)
            if label is None:
                raise ConfigError(f"high-dimensional control {name!r} has no category label")
            membership[pos] = label
        categories = tuple(dict.fromkeys(membership[i] for i in sorted(membership)))
        if quotas is None:
            quotas = {c: default_quota for c in categories}
        return cls(categories, membership, dict(quotas))

    def members(self, category: str) -> np.ndarray:
        return np.array(sorted(i for i, c in self.membership.items() if c == category),
                        dtype=int)

    def n_variables(self) -> int:
        return len(self.membership)

    def validate_feasible(self, k: int) -> None:
        total_quota = sum(self.quotas.get(c, 0) for c in self.categories)
        if total_quota > k:
            raise ConfigError(
                f"quota total {total_quota} exceeds subspace size k={k}")
        for c in self.categories:
            quota = self.quotas.get(c, 0)
            size = len(self.members(c))
            if quota > size:
                raise ConfigError(
                    f"category {c!r} has {size} members, below its quota {quota}")


def _check_draw_args(q: int, k: int, n_draws: int) -> None:
    if q < 1:
        raise ValueError("q must be at least 1")
    if not 1 <= k <= q:
        raise ValueError(f"subspace size k={k} must satisfy 1 <= k <= q={q}")
    if n_draws < 1:
        raise ValueError("n_draws must be at least 1")


def draw_uniform_subspaces(q: int, k: int, n_draws: int, seed: int) -> list[Subspace]:
    """``n_draws`` uniform without-replacement draws of k indices from 0..q-1."""
    _check_draw_args(q, k, n_draws)
    out = []
    for j in range(n_draws):
        rng = rng_for(seed, STAGE_DRAW, j)
        idx = np.sort(rng.choice(q, size=k, replace=False))
        out.append(Subspace(tuple(idx), draw_id=j))
    return out


def draw_stratified_subspaces(scheme: CategoryScheme, k: int, n_draws: int,
                              seed: int) -> list[Subspace]:
    """Quota-constrained draws: sample each category's minimum first, then
    fill the remaining slots uniformly from all unused indices.

    With all quotas zero this collapses to the uniform sampler (same law,
    and with the same seed the same realisations)."""
    q = scheme.n_variables()
    _check_draw_args(q, k, n_draws)
    scheme.validate_feasible(k)
    members = {c: scheme.members(c) for c in scheme.categories}
    out = []
    for j in range(n_draws):
        rng = rng_for(seed, STAGE_DRAW, j)
        chosen = []
        for c in scheme.categories:
            quota = scheme.quotas.get(c, 0)
            if quota > 0:
                chosen.extend(rng.choice(members[c], size=quota, replace=False))
        rest = k - len(chosen)
        if rest > 0:
            pool = np.setdiff1d(np.arange(q), np.array(chosen, dtype=int))
            chosen.extend(rng.choice(pool, size=rest, replace=False))
        out.append(Subspace(tuple(np.sort(np.array(chosen, dtype=int))), draw_id=j))
    return out
