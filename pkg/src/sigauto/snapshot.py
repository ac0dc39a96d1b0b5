"""Persistence: pipeline snapshots and model documents.

Pipeline snapshots capture everything the streaming loop needs to continue
bit-identically after a restart: the signal, the classifier summary, the
automaton, and every model accumulator, all in live iteration order so that
restored dictionaries replay float arithmetic in the same order.

Model documents are a canonical (sorted) export of one model: states, events,
initial state, materialized transition and emission weights, and the instants
matrix.  Integer fields round-trip exactly; weights are written as shortest
round-trip decimals (at most 17 significant digits), so parsing returns the
identical double.
"""

from __future__ import annotations

import json

from .automaton import BOTTOM_STATE, Isa, InstantsMatrix
from .errors import SnapshotError
from .hmm import (
    Hmm,
    HmmContinuous,
    isa_to_hmm,
    isa_to_hmm_continuous,
)
from .plugins import (
    Clusterer,
    Kernel,
    PluginParams,
    StatAccumulator,
    default_bandwidth,
    rho_fn,
    sigma_fn,
)
from .signal import Signal

SNAPSHOT_VERSION = 1


def _acc_doc(acc: StatAccumulator) -> dict:
    return {"value": acc.value, "last_now": acc.last_now, "count": acc.raw_count}


def _acc_from(doc: dict) -> StatAccumulator:
    return StatAccumulator(
        value=float(doc["value"]), last_now=int(doc["last_now"]), raw_count=int(doc["count"])
    )


def _isa_state(isa: Isa) -> dict:
    return {
        "states": list(isa.states),
        "current": isa.current,
        "n": isa.n,
        "new_state_instants": list(isa.new_state_instants),
        "theta": [[p, q, list(c)] for p, q, c in isa.theta.cells()],
    }


def _isa_from(doc: dict) -> Isa:
    theta = InstantsMatrix()
    for p, q, instants in doc["theta"]:
        for i in instants:
            theta.append(p, q, int(i))
    return Isa(
        states={s: None for s in doc["states"]},
        current=doc["current"],
        theta=theta,
        n=int(doc["n"]),
        new_state_instants=[int(i) for i in doc["new_state_instants"]],
    )


def _model_state(hmm) -> dict:
    doc = {
        "kind": hmm.emission_kind,
        "n": hmm.n,
        "current": hmm.current,
        "current_is_new": hmm.current_is_new,
        "states": list(hmm.state_order),
        "trans": [
            [p, [[q, _acc_doc(acc)] for q, acc in cells.items()], _acc_doc(hmm._trow[p])]
            for p, cells in hmm._tcells.items()
        ],
    }
    if hmm.emission_kind == "discrete":
        doc["emit"] = [
            [q, [[c, _acc_doc(acc)] for c, acc in cells.items()], _acc_doc(hmm._edenom[q])]
            for q, cells in hmm._ecells.items()
        ]
    else:
        doc["mixtures"] = [[q, list(c)] for q, c in hmm.mixtures.items()]
    return doc


def _restore_transitions(hmm, doc: dict) -> None:
    hmm.state_order = {s: None for s in doc["states"]}
    hmm._tcells = {
        p: {q: _acc_from(acc) for q, acc in cells}
        for p, cells, _row in doc["trans"]
    }
    hmm._trow = {p: _acc_from(row) for p, _cells, row in doc["trans"]}


def pipeline_state(pipe) -> dict:
    """Serializable state of a live pipeline."""
    doc = {
        "version": SNAPSHOT_VERSION,
        "kind": "pipeline",
        "tau": pipe.params.to_dict(),
        "emission": pipe.emission,
        "seed": pipe.seed,
        "score_floor": pipe.score_floor,
        "signal": [list(obs) for obs in pipe.signal],
        "classifier": {"kind": pipe.classifier.kind, "summary": pipe.classifier.summary()},
        "clusterer": [[label, list(idx)] for label, idx in pipe.clusterer.observed.items()],
        "isa": _isa_state(pipe.isa) if pipe.isa is not None else None,
        "model": _model_state(pipe.hmm) if pipe.hmm is not None else None,
    }
    return doc


def restore_pipeline(doc: dict):
    """Rebuild a pipeline from :func:`pipeline_state` output."""
    from .pipeline import StreamPipeline

    try:
        version = doc["version"]
        if version != SNAPSHOT_VERSION:
            raise SnapshotError(
                f"snapshot version {version} not supported (expected {SNAPSHOT_VERSION})"
            )
        params = PluginParams.from_dict(doc["tau"])
        pipe = StreamPipeline(
            params,
            emission=doc["emission"],
            seed=doc["seed"],
            score_floor=doc["score_floor"],
        )
        for obs in doc["signal"]:
            pipe.signal.append(obs)
        pipe.classifier.restore(doc["classifier"]["summary"])
        pipe.clusterer.observed = {label: tuple(idx) for label, idx in doc["clusterer"]}
        if len(pipe.signal):
            pipe.clusterer.label_of(pipe.signal[0])  # resolve grid widths
        if doc["isa"] is not None:
            pipe.isa = _isa_from(doc["isa"])
        model_doc = doc["model"]
        if model_doc is not None:
            if model_doc["kind"] == "discrete":
                hmm = Hmm.__new__(Hmm)
                Hmm.__init__(
                    hmm, pipe.sigma, pipe.rho, pipe.clusterer,
                    int(model_doc["n"]), model_doc["current"],
                    bool(model_doc["current_is_new"]),
                )
                _restore_transitions(hmm, model_doc)
                hmm._ecells = {
                    q: {c: _acc_from(acc) for c, acc in cells}
                    for q, cells, _d in model_doc["emit"]
                }
                hmm._edenom = {q: _acc_from(d) for q, _c, d in model_doc["emit"]}
            else:
                hmm = HmmContinuous(
                    pipe.sigma, pipe.signal, pipe.kernel,
                    int(model_doc["n"]), model_doc["current"],
                    bool(model_doc["current_is_new"]),
                )
                _restore_transitions(hmm, model_doc)
                hmm.mixtures = {q: [int(i) for i in c] for q, c in model_doc["mixtures"]}
            pipe.hmm = hmm
        return pipe
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed snapshot: {exc}") from exc


def save_snapshot(pipe, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(pipeline_state(pipe), handle, separators=(",", ":"))
        handle.write("\n")


def load_snapshot(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SnapshotError("snapshot root must be an object")
    return restore_pipeline(doc)


# ---------------------------------------------------------------------------
# Model documents (canonical export of one model)


def model_document(hmm, params: PluginParams, isa: Isa) -> dict:
    """Canonical versioned export of a model snapshot.

    Weight lists are sorted, so two structurally equal models produce
    identical documents regardless of construction order.  The instants
    matrix of the automaton the model was derived from is embedded, which is
    what makes the document reconstructible.
    """
    transitions = hmm.transition_matrix()
    doc = {
        "version": SNAPSHOT_VERSION,
        "tau": params.to_dict(),
        "states": sorted(hmm.states),
        "alpha": hmm.current,
        "transitions": sorted(
            [p, q, w] for p, row in transitions.rows.items() for q, w in row.items()
        ),
        "instants_matrix": sorted(
            [p, q, list(c)] for p, q, c in isa.theta.cells()
        ),
    }
    if hmm.emission_kind == "discrete":
        emissions = hmm.emission_matrix()
        doc["events"] = sorted(hmm.events)
        doc["emissions"] = sorted(
            [q, c, w] for q, row in emissions.rows.items() for c, w in row.items()
        )
    else:
        bandwidth = hmm.kernel.h_matrix.tolist() if hmm.kernel is not None else None
        doc["events"] = None
        doc["mixtures"] = sorted(
            [q, list(c), bandwidth] for q, c in hmm.mixtures.items()
        )
    return doc


def save_model_document(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")


def load_model_document(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read model document {path}: {exc}") from exc
    version = doc.get("version")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"model document version {version} not supported (expected {SNAPSHOT_VERSION})"
        )
    for key in ("tau", "states", "alpha", "transitions", "instants_matrix"):
        if key not in doc:
            raise SnapshotError(f"model document misses key {key!r}")
    return doc


def hmm_from_document(doc: dict, signal: Signal):
    """Rebuild a live model from a document plus the originating signal.

    The automaton is reconstructed from the instants matrix, then converted
    with plugins configured from the stored parameters.  Weights agree with
    the document within float tolerance (exactly, for counting statistics).
    """
    if doc.get("instants_matrix") is None:
        raise SnapshotError("model document carries no instants matrix")
    params = PluginParams.from_dict(doc["tau"])
    theta = InstantsMatrix()
    first_seen: dict[str, int] = {}
    total = 0
    for p, q, instants in sorted(doc["instants_matrix"], key=lambda c: min(c[2])):
        for i in instants:
            theta.append(p, q, int(i))
        total += len(instants)
        first = min(instants)
        if q not in first_seen or first < first_seen[q]:
            first_seen[q] = int(first)
    order = sorted(first_seen, key=first_seen.get)
    isa = Isa(
        states={BOTTOM_STATE: None, **{s: None for s in order}},
        current=doc["alpha"],
        theta=theta,
        n=total - 1,
        new_state_instants=sorted(first_seen.values()),
    )
    if doc.get("mixtures") is not None:
        bandwidths = [m[2] for m in doc["mixtures"] if m[2] is not None]
        if bandwidths:
            kernel = Kernel(bandwidths[0])
        elif params.bandwidth != "scott":
            kernel = Kernel(params.bandwidth)
        else:
            kernel = Kernel(default_bandwidth(signal))
        return isa_to_hmm_continuous(isa, signal, sigma_fn(params), kernel)
    clusterer = Clusterer(params.grid_width)
    return isa_to_hmm(isa, signal, sigma_fn(params), rho_fn(params), clusterer)
