"""Canonical text form for models: stable bytes, exact round-trips.

Counts are stored sparsely (flat index, value) for cells that deviate
from the smoothing floor, so a freshly built model serializes small and
a trained one stays in the tens-of-kilobytes range.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .cpt import Cpt
from .model import SloIModel
from .structure import NetworkStructure, VariableSpec

_FORMAT = "slo-i-model/1"


def _structure_payload(structure: NetworkStructure) -> dict:
    return {
        "variables": [
            {
                "name": v.name,
                "states": list(v.states),
                "role": v.role,
                "edges": list(v.edges) if v.edges is not None else None,
            }
            for v in structure.variables
        ],
        "edges": [[p, c] for p, c in structure.edges],
    }


def model_to_text(model: SloIModel) -> str:
    counts = {}
    for name in sorted(model.cpts):
        cpt = model.cpts[name]
        flat = cpt.counts.ravel()
        cells = [[int(i), float(flat[i])]
                 for i in np.flatnonzero(flat != cpt.alpha)]
        counts[name] = {
            "alpha": cpt.alpha,
            "shape": list(cpt.counts.shape),
            "cells": cells,
        }
    payload = {
        "format": _FORMAT,
        "service_type": model.service_type,
        "device_type": model.device_type,
        "version": model.version,
        **_structure_payload(model.structure),
        "counts": counts,
    }
    return json.dumps(payload, indent=1, sort_keys=False) + "\n"


def model_from_text(text: str) -> SloIModel:
    payload = json.loads(text)
    if payload.get("format") != _FORMAT:
        raise ValueError(f"unsupported model format {payload.get('format')!r}")
    variables = tuple(
        VariableSpec(
            name=v["name"],
            states=tuple(v["states"]),
            role=v["role"],
            edges=tuple(v["edges"]) if v["edges"] is not None else None,
        )
        for v in payload["variables"]
    )
    structure = NetworkStructure(
        variables=variables,
        edges=tuple((p, c) for p, c in payload["edges"]),
    )
    cpts = {}
    for spec in variables:
        stored = payload["counts"][spec.name]
        parents = structure.parents(spec.name)
        counts = np.full(tuple(stored["shape"]), float(stored["alpha"]))
        flat = counts.ravel()
        for index, value in stored["cells"]:
            flat[index] = value
        cpts[spec.name] = Cpt(child=spec.name, parents=parents,
                              counts=flat.reshape(counts.shape),
                              alpha=float(stored["alpha"]))
    return SloIModel(
        service_type=payload["service_type"],
        device_type=payload["device_type"],
        structure=structure,
        cpts=cpts,
        version=int(payload["version"]),
    )


def model_fingerprint(model: SloIModel) -> str:
    return hashlib.sha256(model_to_text(model).encode()).hexdigest()


def structure_fingerprint(structure: NetworkStructure) -> str:
    text = json.dumps(_structure_payload(structure), sort_keys=False)
    return hashlib.sha256(text.encode()).hexdigest()
