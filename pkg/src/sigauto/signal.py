"""Append-only buffer of d-dimensional observations.

Instants are implicit: the observation appended k-th lives at instant k.
Observations are immutable once stored and random access is O(1), which the
incremental model updates rely on.
"""

from __future__ import annotations

import math
from typing import Iterable

from .errors import EmptyInputError, RejectedInputError


def as_observation(value, dim: int | None = None) -> tuple[float, ...]:
    """Coerce a scalar or sequence into a validated observation tuple."""
    if isinstance(value, (int, float)):
        coords = (float(value),)
    else:
        try:
            coords = tuple(float(x) for x in value)
        except (TypeError, ValueError) as exc:
            raise RejectedInputError(f"observation is not numeric: {value!r}") from exc
    if not coords:
        raise RejectedInputError("observation has no coordinates")
    if dim is not None and len(coords) != dim:
        raise RejectedInputError(
            f"observation has {len(coords)} coordinates, expected {dim}"
        )
    for x in coords:
        if not math.isfinite(x):
            raise RejectedInputError(f"observation contains a non-finite value: {coords}")
    return coords


class Signal:
    """Growing sequence of observations with constant-time random access."""

    __slots__ = ("_obs", "_dim")

    def __init__(self, observations: Iterable | None = None):
        self._obs: list[tuple[float, ...]] = []
        self._dim: int | None = None
        if observations is not None:
            for obs in observations:
                self.append(obs)

    def append(self, obs) -> int:
        """Append one observation, returning its instant."""
        coords = as_observation(obs, self._dim)
        if self._dim is None:
            self._dim = len(coords)
        self._obs.append(coords)
        return len(self._obs) - 1

    def __len__(self) -> int:
        return len(self._obs)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return tuple(self._obs[index])
        return self._obs[index]

    def __iter__(self):
        return iter(self._obs)

    @property
    def dim(self) -> int:
        if self._dim is None:
            raise EmptyInputError("signal is empty, dimension unknown")
        return self._dim

    @property
    def last_instant(self) -> int:
        return len(self._obs) - 1

    def require_nonempty(self) -> None:
        if not self._obs:
            raise EmptyInputError("signal is empty")

    def __repr__(self) -> str:
        return f"Signal(n={len(self._obs) - 1}, dim={self._dim})"
