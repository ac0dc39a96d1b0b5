"""Streaming loop: classifier -> automaton -> model -> forecast record.

One pipeline owns one signal, one classifier, one clusterer and one model.
``advance`` performs the constant-time update path only; ``step`` also
produces the JSONL-ready forecast record for the new instant.
"""

from __future__ import annotations

from .automaton import Isa, build_isa, init_isa, next_isa
from .errors import ConfigError
from .forecasting import forecast, state_occupancies
from .hmm import (
    Hmm,
    HmmContinuous,
    isa_to_hmm,
    isa_to_hmm_continuous,
    next_hmm,
    next_hmm_continuous,
)
from .plugins import (
    Clusterer,
    EmaGridClassifier,
    Kernel,
    PluginParams,
    rho_fn,
    sigma_fn,
)
from .signal import Signal

EMISSION_MODES = ("discrete", "continuous")


class StreamPipeline:
    """Online model of a single stream with per-observation O(1) updates."""

    def __init__(self, params: PluginParams, emission: str = "discrete",
                 seed: int = 0, score_floor: float = 1e-12):
        if emission not in EMISSION_MODES:
            raise ConfigError(f"unknown emission mode {emission!r}")
        self.params = params
        self.emission = emission
        self.seed = seed
        self.score_floor = score_floor
        self.signal = Signal()
        self.classifier = EmaGridClassifier(params)
        self.clusterer = Clusterer(params.grid_width)
        self.sigma = sigma_fn(params)
        self.rho = rho_fn(params)
        self.kernel: Kernel | None = (
            Kernel(params.bandwidth) if params.bandwidth != "scott" else None
        )
        self.isa: Isa | None = None
        self.hmm: Hmm | HmmContinuous | None = None

    @property
    def n(self) -> int:
        return self.signal.last_instant

    def advance(self, obs) -> int:
        """Consume one observation; returns its instant."""
        instant = self.signal.append(obs)
        if instant == 0:
            self.isa = init_isa(self.signal[0], self.classifier)
            if self.emission == "discrete":
                self.hmm = isa_to_hmm(
                    self.isa, self.signal, self.sigma, self.rho, self.clusterer
                )
            else:
                self.hmm = isa_to_hmm_continuous(
                    self.isa, self.signal, self.sigma, self.kernel
                )
        else:
            next_isa(self.isa, self.signal, self.classifier)
            if self.emission == "discrete":
                next_hmm(self.hmm, self.isa, self.signal, self.sigma, self.rho,
                         self.clusterer)
            else:
                next_hmm_continuous(self.hmm, self.isa, self.signal, self.sigma,
                                    self.kernel)
        return instant

    def forecast_record(self) -> dict:
        """JSONL-ready forecast record for the current instant."""
        h = self.params.horizon
        if self.emission == "discrete":
            fc = forecast(self.hmm, h)
            steps = [
                {"j": j + 1, "dist": dist} for j, dist in enumerate(fc.steps)
            ]
            dummy = fc.is_dummy
        else:
            # The continuous forecast is a density; records carry the state
            # occupancies from which densities are evaluated on demand.
            dummy = self.hmm.current_is_new
            occupancies = state_occupancies(self.hmm, h) if h else []
            steps = [
                {"j": j + 1, "states": occ} for j, occ in enumerate(occupancies)
            ]
        return {"i": self.n, "dummy": dummy, "steps": steps, "seed": self.seed}

    def step(self, obs) -> dict:
        self.advance(obs)
        return self.forecast_record()

    def rebuild_from_scratch(self) -> tuple:
        """Reference build of the current state, ignoring all caches."""
        classifier = EmaGridClassifier(self.params)
        clusterer = Clusterer(self.params.grid_width)
        isa = build_isa(self.signal, classifier)
        if self.emission == "discrete":
            model = isa_to_hmm(isa, self.signal, self.sigma, self.rho, clusterer)
        else:
            model = isa_to_hmm_continuous(isa, self.signal, self.sigma, self.kernel)
        return isa, model
