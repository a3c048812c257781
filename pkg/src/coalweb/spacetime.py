"""The compactified space-time plane and its metric.

Points carry extended-real coordinates.  Equality is taken in the quotient:
all points with ``t = +inf`` are one point, and likewise for ``t = -inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _tanh(v: float) -> float:
    if v == math.inf:
        return 1.0
    if v == -math.inf:
        return -1.0
    return math.tanh(v)


def _weight(t: float) -> float:
    return 0.0 if math.isinf(t) else 1.0 / (1.0 + abs(t))


@dataclass(frozen=True, eq=False)
class SpaceTimePoint:
    x: float
    t: float

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpaceTimePoint):
            return NotImplemented
        return rho(self, other) == 0.0

    def __hash__(self) -> int:
        c = compactify(self)
        return hash((c.phi, c.psi))


@dataclass(frozen=True)
class CompactCoords:
    phi: float
    psi: float

    def __post_init__(self):
        if not (-1.0 <= self.phi <= 1.0 and -1.0 <= self.psi <= 1.0):
            raise ValueError(f"compact coordinates out of range: {self}")


def phi(x: float, t: float) -> float:
    """Spatial compact coordinate ``tanh(x) / (1 + |t|)``; zero at ``t = +-inf``."""
    w = _weight(t)
    if w == 0.0:
        return 0.0
    return _tanh(x) * w


def psi(t: float) -> float:
    return _tanh(t)


def compactify(p: SpaceTimePoint) -> CompactCoords:
    return CompactCoords(phi(p.x, p.t), psi(p.t))


def rho(p1: SpaceTimePoint, p2: SpaceTimePoint) -> float:
    c1, c2 = compactify(p1), compactify(p2)
    return max(abs(c1.phi - c2.phi), abs(c1.psi - c2.psi))


def phi_array(x, t) -> np.ndarray:
    """Vectorised :func:`phi` (infinite ``x`` and ``t`` allowed)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(np.isinf(t), 0.0, 1.0 / (1.0 + np.abs(t)))
        out = np.tanh(x) * w
    return np.where(w == 0.0, 0.0, out)
