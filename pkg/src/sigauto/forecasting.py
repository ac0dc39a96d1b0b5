"""Horizon forecasting, sampling, scoring and parameter fitting.

A forecast for horizon h is the sequence of event distributions obtained by
propagating the initial state indicator j times through the transition matrix
and applying the emissions, for j = 1..h.  The matrix power is never
materialized: each step is one sparse row-vector product.

When the model's current state is new (no outgoing instants), no forecast is
possible and every step is the point mass on the dummy event.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyInputError, RejectedInputError
from .hmm import DUMMY_STATE, Hmm, HmmContinuous, _TransitionCore
from .plugins import DUMMY_EVENT, Kernel, PluginParams, default_bandwidth
from .signal import Signal


@dataclass
class Forecast:
    """Per-step event distributions; ``is_dummy`` marks the no-forecast case."""

    horizon: int
    steps: list[dict[str, float]]
    is_dummy: bool

    def step(self, j: int) -> dict[str, float]:
        """Distribution for step j (1-based)."""
        return self.steps[j - 1]


def state_occupancies(model: _TransitionCore, horizon: int) -> list[dict[str, float]]:
    """State distributions after 1..horizon transition steps."""
    occ: dict[str, float] = model.alpha()
    out = []
    for _ in range(horizon):
        nxt: dict[str, float] = {}
        for s, w in occ.items():
            for q, t in model.transition_row(s).items():
                nxt[q] = nxt.get(q, 0.0) + w * t
        occ = nxt
        out.append(occ)
    return out


def event_distribution(hmm: Hmm, occupancy: dict[str, float]) -> dict[str, float]:
    """Project a state distribution through the emission rows."""
    dist: dict[str, float] = {}
    for s, w in occupancy.items():
        if w == 0.0:
            continue
        for c, e in hmm.emission_row(s).items():
            dist[c] = dist.get(c, 0.0) + w * e
    return dist


def forecast(hmm: Hmm, horizon: int) -> Forecast:
    if horizon < 0:
        raise ConfigError(f"horizon must be nonnegative, got {horizon}")
    if horizon == 0:
        return Forecast(0, [], False)
    if hmm.current_is_new:
        return Forecast(horizon, [{DUMMY_EVENT: 1.0} for _ in range(horizon)], True)
    steps = [event_distribution(hmm, occ) for occ in state_occupancies(hmm, horizon)]
    return Forecast(horizon, steps, False)


def forecast_density_at(hmm_c: HmmContinuous, signal: Signal, j: int, x,
                        kernel: Kernel | None = None) -> float:
    """Forecast density at point ``x`` for step ``j`` of the continuous model.

    The dummy state's point mass lives off the observation space, so it
    contributes zero at any finite x.
    """
    if j < 1:
        raise ConfigError(f"forecast step must be >= 1, got {j}")
    kern = kernel or hmm_c.kernel or Kernel(default_bandwidth(signal))
    if len(x) != kern.d:
        raise ConfigError(f"point has dimension {len(x)}, kernel has {kern.d}")
    occupancy = state_occupancies(hmm_c, j)[-1]
    total = 0.0
    for q, w in occupancy.items():
        if q == DUMMY_STATE or w == 0.0:
            continue
        total += w * hmm_c.density(q, x, kern)
    return total


def sample_event(dist: dict[str, float], seed) -> str:
    """Inverse-CDF draw over the sparse support in sorted key order.

    Deterministic for a given seed; accepts int or string seeds.
    """
    if not dist:
        raise EmptyInputError("cannot sample from an empty distribution")
    u = random.Random(seed).random()
    cumulative = 0.0
    last = None
    for label in sorted(dist):
        p = dist[label]
        if p <= 0.0:
            continue
        cumulative += p
        last = label
        if u < cumulative:
            return label
    if last is None:
        raise EmptyInputError("distribution has no positive mass")
    return last


def sample_observation(hmm_c: HmmContinuous, j: int, seed: int,
                       kernel: Kernel | None = None):
    """Sample an observation from the continuous forecast at step ``j``.

    Draws a state from the propagated occupancy, then a mixture center
    uniformly, then adds kernel noise.  Returns None when the dummy state is
    drawn (no observation can represent the dummy event).
    """
    kern = kernel or hmm_c.kernel
    if kern is None:
        raise ConfigError("no kernel configured; pass one explicitly")
    occupancy = state_occupancies(hmm_c, j)[-1]
    rng = np.random.default_rng(seed)
    u = float(rng.random())
    cumulative = 0.0
    state = None
    for q in sorted(occupancy):
        p = occupancy[q]
        if p <= 0.0:
            continue
        cumulative += p
        state = q
        if u < cumulative:
            break
    if state is None or state == DUMMY_STATE:
        return None
    centers, _ = hmm_c.mixture(state)
    center = hmm_c.signal[centers[int(rng.integers(len(centers)))]]
    noise = rng.multivariate_normal(np.zeros(kern.d), kern.h_matrix)
    return tuple(float(c + e) for c, e in zip(center, noise))


# ---------------------------------------------------------------------------
# Scoring and fitting


def score(params: PluginParams, signal: Signal, start: int, stop: int,
          floor: float = 1e-12) -> float:
    """Mean one-step-ahead log-likelihood over instants [start, stop).

    At each instant i the probability the current model assigns to the cluster
    of the next observation is scored; dummy forecasts (and zero-probability
    events) contribute log(floor), so refusing to forecast stays costly but
    finite.
    """
    n = signal.last_instant
    if not (0 <= start < stop <= n):
        raise RejectedInputError(
            f"scoring window [{start}, {stop}) out of range for signal at {n}"
        )
    from .pipeline import StreamPipeline

    pipe = StreamPipeline(params, seed=0, score_floor=floor)
    total = 0.0
    scored = 0
    for i in range(stop):
        pipe.advance(signal[i])
        if i >= start:
            fc = forecast(pipe.hmm, 1)
            if fc.is_dummy:
                p = 0.0
            else:
                next_cluster = pipe.clusterer.label_of(signal[i + 1])
                p = fc.steps[0].get(next_cluster, 0.0)
            total += math.log(max(p, floor))
            scored += 1
    return total / scored


@dataclass
class FitReport:
    """Grid-search outcome: held-out score per parameter tuple."""

    grid: list[PluginParams]
    scores: list[float]
    best_index: int
    split: int
    best: PluginParams = field(init=False)

    def __post_init__(self):
        self.best = self.grid[self.best_index]


def fit(grid: list[PluginParams], signal: Signal, split: int,
        floor: float = 1e-12) -> FitReport:
    """Evaluate every parameter tuple on the held-out window [split, n).

    Each evaluation streams an independent pipeline warm-started on
    [0, split).  Ties break toward the earlier grid entry.
    """
    if not grid:
        raise EmptyInputError("parameter grid is empty")
    n = signal.last_instant
    if not (0 < split < n):
        raise RejectedInputError(f"split {split} out of range (0, {n})")
    scores = [score(params, signal, split, n, floor) for params in grid]
    best_index = max(range(len(scores)), key=lambda k: (scores[k], -k))
    return FitReport(grid=list(grid), scores=scores, best_index=best_index, split=split)
