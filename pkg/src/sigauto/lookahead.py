"""Lookahead forecasting with estimated future observations.

With a lookahead classifier the automaton state at instant i depends on the
next ``h`` observations, so at present time n only instants up to n - h are
fully determined.  For each frontier instant i in (n - h, n] the missing
observations are replaced by estimates sampled from the previous frontier
model's (h+1)-step forecast, each estimate being the grid-cell center of the
sampled cluster.

If a frontier step samples the dummy event, or classifies to a word never
seen before (a new state), that entry and all later ones are poisoned:
no lookahead objects exist beyond that point until genuine data arrives.

When a genuine observation arrives, the oldest frontier entry becomes fully
determined.  If its estimated word matches the genuine one, every retained
object is already correct and only the newest entry has to be computed;
otherwise the frontier suffix is rebuilt.  Each frontier step draws from a
generator seeded by (run seed, absolute instant), so a rebuilt suffix is
identical to a fresh build over the extended signal.
"""

from __future__ import annotations

from dataclasses import dataclass

from .automaton import Isa, init_isa, is_new_state, next_isa
from .errors import ConfigError, InsufficientHistoryError
from .forecasting import (
    Forecast,
    event_distribution,
    forecast as model_forecast,
    sample_event,
    state_occupancies,
)
from .hmm import Hmm, isa_to_hmm, next_hmm
from .plugins import (
    DUMMY_EVENT,
    Clusterer,
    LookaheadWordClassifier,
    PluginParams,
    rho_fn,
    sigma_fn,
)
from .signal import Signal


class _ExtendedSignal:
    """Genuine observations followed by estimated ones; read-only view."""

    __slots__ = ("_base", "_extras")

    def __init__(self, base: Signal, extras: list):
        self._base = base
        self._extras = extras

    def __len__(self) -> int:
        n = len(self._base)
        for obs in self._extras:
            if obs is None:
                break
            n += 1
        return n

    def __getitem__(self, index: int):
        base_len = len(self._base)
        if index < base_len:
            return self._base[index]
        obs = self._extras[index - base_len]
        if obs is None:
            raise IndexError(f"instant {index} is beyond the estimated horizon")
        return obs


@dataclass
class FrontierEntry:
    """One lookahead automaton/model pair at a frontier instant."""

    isa: Isa
    hmm: Hmm


class LookaheadFrontier:
    """The family of lookahead objects for instants (n - h, n].

    ``entries[k]`` holds the pair for instant n - h + 1 + k, or None when
    poisoned; ``estimated[k]`` is the sampled observation for position
    n + 1 + k.  ``base_isa``/``base_hmm`` are the fully genuine objects at
    instant n - h.
    """

    def __init__(self, params: PluginParams, seed, signal: Signal,
                 classifier: LookaheadWordClassifier, clusterer: Clusterer,
                 sigma, rho):
        self.params = params
        self.h = params.horizon
        self.seed = seed
        self.signal = signal
        self.classifier = classifier
        self.clusterer = clusterer
        self.sigma = sigma
        self.rho = rho
        self.base_isa: Isa | None = None
        self.base_hmm: Hmm | None = None
        self.entries: list[FrontierEntry | None] = []
        self.estimated: list[tuple | None] = []

    @property
    def n(self) -> int:
        return self.signal.last_instant

    def poisoned_from(self) -> int | None:
        """Absolute instant of the first poisoned entry, if any."""
        for k, entry in enumerate(self.entries):
            if entry is None:
                return self.n - self.h + 1 + k
        return None

    def _window(self, i: int) -> tuple:
        """Observations at positions i+1 .. i+h, estimates past the present."""
        n = self.n
        out = []
        for pos in range(i + 1, i + self.h + 1):
            out.append(self.signal[pos] if pos <= n else self.estimated[pos - n - 1])
        return tuple(out)

    def _extend(self, i: int) -> None:
        """Append the entry for instant ``i`` (and the estimate for i + h)."""
        prev = self.entries[-1] if self.entries else FrontierEntry(self.base_isa, self.base_hmm)
        if prev is None:
            self.entries.append(None)
            self.estimated.append(None)
            return
        occupancy = state_occupancies(prev.hmm, self.h + 1)[-1]
        dist = event_distribution(prev.hmm, occupancy)
        label = sample_event(dist, seed=f"{self.seed}:{i}")
        if label == DUMMY_EVENT:
            self.entries.append(None)
            self.estimated.append(None)
            return
        self.estimated.append(self.clusterer.center(label))
        window = self._window(i)
        isa = prev.isa.copy()
        extended = _ExtendedSignal(self.signal, self.estimated)
        next_isa(isa, extended, self.classifier, future=window)
        if is_new_state(isa):
            self.entries.append(None)
            return
        hmm = prev.hmm.copy()
        next_hmm(hmm, isa, extended, self.sigma, self.rho, self.clusterer)
        self.entries.append(FrontierEntry(isa, hmm))

    def forecast(self, horizon: int | None = None) -> Forecast:
        """Forecast from the newest frontier model; dummy when poisoned."""
        h = self.h if horizon is None else horizon
        entry = self.entries[-1] if self.entries else None
        if entry is None:
            if h == 0:
                return Forecast(0, [], False)
            return Forecast(h, [{DUMMY_EVENT: 1.0} for _ in range(h)], True)
        return model_forecast(entry.hmm, h)

    def fingerprint(self) -> dict:
        """Canonical structure for exact equality comparisons."""
        return {
            "n": self.n,
            "h": self.h,
            "estimated": [list(e) if e is not None else None for e in self.estimated],
            "base": _pair_doc(self.base_isa, self.base_hmm),
            "entries": [
                _pair_doc(e.isa, e.hmm) if e is not None else None
                for e in self.entries
            ],
        }


def _isa_doc(isa: Isa) -> dict:
    return {
        "states": sorted(isa.states),
        "current": isa.current,
        "n": isa.n,
        "new_state_instants": list(isa.new_state_instants),
        "theta": sorted((p, q, list(c)) for p, q, c in isa.theta.cells()),
    }


def _model_doc(hmm: Hmm) -> dict:
    transitions = hmm.transition_matrix()
    emissions = hmm.emission_matrix()
    return {
        "n": hmm.n,
        "current": hmm.current,
        "current_is_new": hmm.current_is_new,
        "states": sorted(hmm.state_order),
        "events": sorted(hmm.clusterer.observed),
        "transitions": sorted(
            (p, q, w) for p, row in transitions.rows.items() for q, w in row.items()
        ),
        "emissions": sorted(
            (q, c, w) for q, row in emissions.rows.items() for c, w in row.items()
        ),
    }


def _pair_doc(isa: Isa, hmm: Hmm) -> tuple:
    return (_isa_doc(isa), _model_doc(hmm))


def lookahead_build(signal, params: PluginParams, seed=0) -> LookaheadFrontier:
    """Build the frontier over a signal with at least h + 1 observations.

    Instants 0 .. n - h run the plain pipeline with genuine future windows;
    the remaining instants are extended one by one, each sampling the next
    estimated observation from the previous frontier model.
    """
    h = params.horizon
    if h < 1:
        raise ConfigError("lookahead needs horizon >= 1")
    src = Signal(list(signal))
    n = src.last_instant
    if n < h:
        raise InsufficientHistoryError(
            f"lookahead with horizon {h} needs more than {h} observations, got {n + 1}"
        )
    classifier = LookaheadWordClassifier(params)
    clusterer = Clusterer(params.grid_width)
    frontier = LookaheadFrontier(
        params, seed, src, classifier, clusterer, sigma_fn(params), rho_fn(params)
    )
    isa = init_isa(src[0], classifier, future=src[1 : 1 + h])
    hmm = isa_to_hmm(isa, src, frontier.sigma, frontier.rho, clusterer)
    for i in range(1, n - h + 1):
        next_isa(isa, src, classifier, future=src[i + 1 : i + h + 1])
        next_hmm(hmm, isa, src, frontier.sigma, frontier.rho, clusterer)
    frontier.base_isa = isa
    frontier.base_hmm = hmm
    for i in range(n - h + 1, n + 1):
        frontier._extend(i)
    return frontier


def lookahead_advance(frontier: LookaheadFrontier, r_new) -> LookaheadFrontier:
    """Absorb one genuine observation, re-anchoring the frontier.

    The oldest frontier entry's window is now fully genuine.  If its stored
    word matches the genuine word, the entry is adopted as the new base and
    all deeper entries are reused unchanged; otherwise the suffix is rebuilt
    by the same induction (and identical per-instant seeds) as a fresh build.
    Always computes the newest entry.
    """
    h = frontier.h
    frontier.signal.append(r_new)
    n_new = frontier.signal.last_instant
    i0 = n_new - h
    genuine_window = frontier.signal[i0 + 1 : i0 + h + 1]
    genuine_word = frontier.classifier.step(frontier.signal[i0], genuine_window)
    old_first = frontier.entries[0] if frontier.entries else None
    if old_first is not None and old_first.isa.current == genuine_word:
        frontier.base_isa = old_first.isa
        frontier.base_hmm = old_first.hmm
        frontier.entries = frontier.entries[1:]
        frontier.estimated = frontier.estimated[1:]
    else:
        next_isa(frontier.base_isa, frontier.signal, frontier.classifier,
                 future=genuine_window)
        next_hmm(frontier.base_hmm, frontier.base_isa, frontier.signal,
                 frontier.sigma, frontier.rho, frontier.clusterer)
        frontier.entries = []
        frontier.estimated = []
        for i in range(i0 + 1, n_new):
            frontier._extend(i)
    frontier._extend(n_new)
    return frontier
