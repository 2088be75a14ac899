"""Numerical tolerances, overridable per call site or from configuration files."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # validation of value types
    hermitian: float = 1e-12
    trace: float = 1e-12
    projector: float = 1e-10
    positivity: float = 1e-10
    unitary: float = 1e-10
    support: float = 1e-12
    # eigenvalue clustering is relative to the spectral scale
    degeneracy: float = 1e-9
    # generic operator-equation residuals (commutators, condition checks)
    operator: float = 1e-10
    # probability floor for selective updates
    probability: float = 1e-14

    def replace(self, **kw) -> "Tolerances":
        return dataclasses.replace(self, **kw)


DEFAULT = Tolerances()

# mapping from configuration keys to dataclass fields
_KEYS = {
    "tol.hermitian": "hermitian",
    "tol.trace": "trace",
    "tol.projector": "projector",
    "tol.positivity": "positivity",
    "tol.unitary": "unitary",
    "tol.support": "support",
    "tol.degeneracy": "degeneracy",
    "tol.operator": "operator",
    "tol.probability": "probability",
}


def with_overrides(overrides: dict | None, base: Tolerances = DEFAULT) -> Tolerances:
    """Apply a ``{"tol.<name>": value}`` mapping on top of ``base``."""
    if not overrides:
        return base
    kw = {}
    for key, value in overrides.items():
        if key not in _KEYS:
            raise KeyError(f"unknown tolerance key {key!r}")
        kw[_KEYS[key]] = float(value)
    return base.replace(**kw)


def from_file(path) -> Tolerances:
    with open(path, "r", encoding="utf-8") as fh:
        return with_overrides(json.load(fh))
