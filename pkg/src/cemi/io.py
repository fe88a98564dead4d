"""JSON container shared by state files and reports.

State documents::

    {"kind": "density", "labels": ["A", "B"], "dims": [2, 2],
     "matrix": [[[re, im], ...], ...]}            # row-major rows
    {"kind": "pure", "labels": [...], "dims": [...],
     "matrix": [[re, im], ...]}                   # flat amplitudes

Reports are JSON objects with their own ``kind`` (``bound_report``,
``suite_report``, ``route_report``, ...). Floats are written with ``repr``
precision so documents round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CemiError
from .tensor import DensityMatrix, KrausInstrument, PureStateVector, SubsystemLayout


def _pairs(a: np.ndarray):
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [_pairs(row) for row in a]


def _complex(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.shape[-1] != 2:
        raise CemiError("complex entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def state_to_dict(state) -> dict:
    lay = state.layout
    if isinstance(state, PureStateVector):
        return {"kind": "pure", "labels": list(lay.labels), "dims": list(lay.dims),
                "matrix": _pairs(state.amplitudes)}
    return {"kind": "density", "labels": list(lay.labels), "dims": list(lay.dims),
            "matrix": _pairs(state.matrix)}


def state_from_dict(doc: dict):
    """Parse and validate a state document; invariant failures name the defect."""
    try:
        kind = doc["kind"]
        lay = SubsystemLayout.from_lists(doc["labels"], doc["dims"])
        data = _complex(doc["matrix"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CemiError):
            raise
        raise CemiError(f"malformed state document: {exc}") from None
    if kind == "density":
        return DensityMatrix(lay, data)
    if kind == "pure":
        return PureStateVector(lay, data)
    raise CemiError(f"unknown state kind {kind!r}")


def instrument_to_dict(m: KrausInstrument) -> dict:
    return {"kind": "instrument", "target": m.target, "operators": [_pairs(a) for a in m.operators]}


def instrument_from_dict(doc: dict) -> KrausInstrument:
    return KrausInstrument(doc["target"], tuple(_complex(a) for a in doc["operators"]))


def unitary_to_dict(u: np.ndarray) -> dict:
    return {"kind": "unitary", "dim": int(u.shape[0]), "matrix": _pairs(u)}


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, allow_nan=True) + "\n"


def write(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc))


def read(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CemiError(f"{path}: not a JSON document ({exc})") from None


def load_state(path):
    return state_from_dict(read(path))


def save_state(state, path) -> None:
    write(state_to_dict(state), path)


__all__ = [
    "state_to_dict",
    "state_from_dict",
    "instrument_to_dict",
    "instrument_from_dict",
    "unitary_to_dict",
    "dumps",
    "write",
    "read",
    "load_state",
    "save_state",
]
