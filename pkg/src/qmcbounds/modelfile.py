"""Plain-text model files for the command-line interface.

A model file is a single JSON document describing one of three kinds of
model.  Complex numbers are written as two-element arrays ``[re, im]`` and
matrices as nested row-major arrays of those pairs, so fixtures stay
diffable under version control.

kind "kraus"::

    {"kind": "kraus",
     "labels": ["up", "down"],
     "kraus": [[[[0,0],[0.7,0]], [[0,0],[0,0]]], ...],
     "observation": {"up": 1.0, "down": -1.0},
     "unravellings": {"coarse": [{"label": "even", "kraus": [...]}, ...]},
     "schedule": [{"unravelling": "coarse", "observation": {...}}, ...],
     "observation_windows": [[["up", "up"], 1.0], ...],
     "parameter_grid": [0.0, 0.1], "family": "ring-asymmetry"}

    Only "labels" and "kraus" are required; the rest feed specific flavors.

kind "gkls"::

    {"kind": "gkls", "hamiltonian": [[...]], "jumps": [[...]],
     "labels": ["click"], "count_label": "click"}

kind "classical"::

    {"kind": "classical", "states": ["a", "b"],
     "transition": [[0.7, 0.3], [0.4, 0.6]],
     "flux": [["a", "b", 1.0], ...], "initial": [0.5, 0.5]}

Parse failures raise :class:`ModelParseError` with a field-precise path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .bounds import TimeStep, Unravelling
from .classical import MarkovChain
from .operators import GKLSGenerator, KrausChannel


class ModelParseError(ValueError):
    """Model file rejected; the message carries the offending field path."""


def _fail(path: str, message: str):
    raise ModelParseError(f"{path}: {message}")


def _get(obj: dict, key: str, path: str, required: bool = True):
    if key not in obj:
        if required:
            _fail(f"{path}.{key}", "missing field")
        return None
    return obj[key]


def _complex_entry(value, path: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) for v in value)):
        return complex(value[0], value[1])
    _fail(path, f"expected a number or [re, im] pair, got {value!r}")


def parse_complex_matrix(rows, path: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        _fail(path, "expected a non-empty list of rows")
    parsed = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(rows):
            _fail(f"{path}[{i}]", f"expected a row of length {len(rows)}")
        parsed.append([_complex_entry(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    return np.asarray(parsed, dtype=complex)


@dataclass
class Model:
    """A parsed model plus the optional sections specific flavors consume."""

    kind: str
    channel: KrausChannel | None = None
    generator: GKLSGenerator | None = None
    chain: MarkovChain | None = None
    observation: dict | None = None
    count_label: Any = None
    flux: dict | None = None
    initial: np.ndarray | None = None
    unravellings: dict = field(default_factory=dict)
    schedule: list = field(default_factory=list)
    observation_windows: dict | None = None
    parameter_grid: list | None = None
    family: str | None = None
    raw: dict = field(default_factory=dict)


def _parse_kraus(doc: dict, tol_channel: float) -> Model:
    labels = _get(doc, "labels", "$")
    matrices = _get(doc, "kraus", "$")
    if not isinstance(labels, list) or not isinstance(matrices, list):
        _fail("$.labels", "labels and kraus must be lists")
    if len(labels) != len(matrices):
        _fail("$.kraus", f"{len(matrices)} matrices for {len(labels)} labels")
    ops = [parse_complex_matrix(m, f"$.kraus[{i}]") for i, m in enumerate(matrices)]
    try:
        channel = KrausChannel(ops, labels, tol=tol_channel)
    except Exception as exc:
        _fail("$.kraus", str(exc))
    model = Model(kind="kraus", channel=channel, raw=doc)
    obs = _get(doc, "observation", "$", required=False)
    if obs is not None:
        if not isinstance(obs, dict):
            _fail("$.observation", "expected a label -> value mapping")
        missing = [l for l in labels if str(l) not in obs and l not in obs]
        if missing:
            _fail("$.observation", f"missing values for labels {missing}")
        model.observation = {l: float(obs.get(l, obs.get(str(l)))) for l in labels}
    unravellings = _get(doc, "unravellings", "$", required=False) or {}
    for name, outcomes in unravellings.items():
        maps, ulabels = [], []
        for i, entry in enumerate(outcomes):
            path = f"$.unravellings.{name}[{i}]"
            ulabels.append(_get(entry, "label", path))
            kraus = _get(entry, "kraus", path)
            maps.append(tuple(parse_complex_matrix(m, f"{path}.kraus[{j}]")
                              for j, m in enumerate(kraus)))
        try:
            model.unravellings[name] = Unravelling(maps, ulabels)
        except Exception as exc:
            _fail(f"$.unravellings.{name}", str(exc))
    schedule = _get(doc, "schedule", "$", required=False) or []
    for i, entry in enumerate(schedule):
        path = f"$.schedule[{i}]"
        name = _get(entry, "unravelling", path)
        if name not in model.unravellings:
            _fail(f"{path}.unravelling", f"unknown unravelling {name!r}")
        obs_k = _get(entry, "observation", path)
        unr = model.unravellings[name]
        fk = {l: float(obs_k.get(l, obs_k.get(str(l)))) for l in unr.labels}
        model.schedule.append(TimeStep(unravelling=unr, f=fk))
    windows = _get(doc, "observation_windows", "$", required=False)
    if windows is not None:
        parsed = {}
        for i, pair in enumerate(windows):
            path = f"$.observation_windows[{i}]"
            if not (isinstance(pair, list) and len(pair) == 2):
                _fail(path, "expected [[labels...], value]")
            parsed[tuple(pair[0])] = float(pair[1])
        model.observation_windows = parsed
    model.parameter_grid = _get(doc, "parameter_grid", "$", required=False)
    model.family = _get(doc, "family", "$", required=False)
    return model


def _parse_gkls(doc: dict) -> Model:
    h = parse_complex_matrix(_get(doc, "hamiltonian", "$"), "$.hamiltonian")
    jumps_doc = _get(doc, "jumps", "$")
    labels = _get(doc, "labels", "$")
    if len(labels) != len(jumps_doc):
        _fail("$.jumps", f"{len(jumps_doc)} jump operators for {len(labels)} labels")
    jumps = [parse_complex_matrix(m, f"$.jumps[{i}]") for i, m in enumerate(jumps_doc)]
    try:
        gen = GKLSGenerator(h, jumps, labels)
    except Exception as exc:
        _fail("$.hamiltonian", str(exc))
    count_label = _get(doc, "count_label", "$", required=False)
    if count_label is not None and count_label not in gen.labels:
        _fail("$.count_label", f"{count_label!r} is not a jump label")
    return Model(kind="gkls", generator=gen,
                 count_label=count_label if count_label is not None else gen.labels[0],
                 raw=doc)


def _parse_classical(doc: dict) -> Model:
    states = _get(doc, "states", "$")
    rows = _get(doc, "transition", "$")
    try:
        chain = MarkovChain(np.asarray(rows, dtype=float), states=states)
    except Exception as exc:
        _fail("$.transition", str(exc))
    model = Model(kind="classical", chain=chain, raw=doc)
    flux_doc = _get(doc, "flux", "$", required=False)
    if flux_doc is not None:
        flux = {}
        for i, entry in enumerate(flux_doc):
            if not (isinstance(entry, list) and len(entry) == 3):
                _fail(f"$.flux[{i}]", "expected [from, to, value]")
            flux[(entry[0], entry[1])] = float(entry[2])
        model.flux = flux
    initial = _get(doc, "initial", "$", required=False)
    if initial is not None:
        arr = np.asarray(initial, dtype=float)
        if arr.shape != (chain.size,) or abs(arr.sum() - 1.0) > 1e-9 or np.any(arr < 0):
            _fail("$.initial", "expected a probability vector over the states")
        model.initial = arr
    return model


def load_model(path: str, tol_channel: float = 1e-9) -> Model:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelParseError(f"$: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"$: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ModelParseError("$: top level must be an object")
    kind = _get(doc, "kind", "$")
    if kind == "kraus":
        return _parse_kraus(doc, tol_channel)
    if kind == "gkls":
        return _parse_gkls(doc)
    if kind == "classical":
        return _parse_classical(doc)
    _fail("$.kind", f"unknown model kind {kind!r}")


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]
