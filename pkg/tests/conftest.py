import random

import pytest

from sigauto import (
    Clusterer,
    EmaGridClassifier,
    PluginParams,
    Signal,
    build_isa,
    isa_to_hmm,
    rho_fn,
    sigma_fn,
)

# Worked example used throughout: unit grid, lam=1, count statistics.
E1 = (1.0, 1.0, 5.0, 1.0, 5.0)


@pytest.fixture
def e1_signal():
    return Signal(E1)


@pytest.fixture
def count_params():
    return PluginParams(lam=1.0, grid_width=1.0)


def random_walk(length, dim=1, seed=0, step=0.3):
    """Synthetic random-walk signal; the workload used by the oracle runs."""
    rng = random.Random(seed)
    values = [0.0] * dim
    out = []
    for _ in range(length):
        values = [v + rng.gauss(0.0, step) for v in values]
        out.append(tuple(values))
    return out


def build_plain(signal, params):
    """From-scratch automaton + model with fresh plugins."""
    classifier = EmaGridClassifier(params)
    clusterer = Clusterer(params.grid_width)
    isa = build_isa(signal, classifier)
    hmm = isa_to_hmm(isa, signal, sigma_fn(params), rho_fn(params), clusterer)
    return isa, hmm
