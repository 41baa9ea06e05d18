"""Occupation-number time series and their CSV form."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError

__all__ = ["OccupationPoint", "OccupationSeries", "CSV_HEADER", "evaluate_series"]

CSV_HEADER = ("t", "n0", "term_memory", "term_thermal", "term_vacuum")


@dataclass(frozen=True)
class OccupationPoint:
    """Occupation at one time with its breakdown.

    ``memory`` is the contribution carried by the initial particle state,
    ``thermal`` the Bose-weighted bath part and ``vacuum`` the
    temperature-independent remainder. ``error_estimate`` is the quadrature
    error bound on ``total`` (zero for finite sums).
    """

    t: float
    total: float
    memory: float
    thermal: float
    vacuum: float
    error_estimate: float = 0.0

    @classmethod
    def from_terms(cls, t, memory, thermal, vacuum, error_estimate=0.0) -> "OccupationPoint":
        return cls(float(t), float(memory) + float(thermal) + float(vacuum), float(memory),
                   float(thermal), float(vacuum), float(error_estimate))


@dataclass(frozen=True, eq=False)
class OccupationSeries:
    times: np.ndarray
    total: np.ndarray
    memory_term: np.ndarray
    thermal_term: np.ndarray
    vacuum_term: np.ndarray
    error_estimate: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.times)
        for name in ("total", "memory_term", "thermal_term", "vacuum_term"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"{name} length differs from times")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise DomainError("times must be strictly increasing")

    @classmethod
    def from_points(cls, points: Sequence[OccupationPoint]) -> "OccupationSeries":
        col = lambda attr: np.array([getattr(p, attr) for p in points], dtype=float)
        return cls(col("t"), col("total"), col("memory"), col("thermal"), col("vacuum"),
                   col("error_estimate"))

    def __len__(self) -> int:
        return len(self.times)

    def points(self) -> list[OccupationPoint]:
        err = self.error_estimate if self.error_estimate is not None else np.zeros(len(self))
        return [OccupationPoint(*map(float, row)) for row in
                zip(self.times, self.total, self.memory_term, self.thermal_term,
                    self.vacuum_term, err)]

    def decomposition_defect(self) -> float:
        """max |total - (memory + thermal + vacuum)|."""
        if len(self) == 0:
            return 0.0
        parts = self.memory_term + self.thermal_term + self.vacuum_term
        return float(np.max(np.abs(self.total - parts)))

    def to_csv(self, stream=None) -> str:
        """Write the canonical CSV (repr floats, LF line endings); returns the text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in zip(self.times, self.total, self.memory_term, self.thermal_term,
                       self.vacuum_term):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "OccupationSeries":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_HEADER:
            raise DomainError(f"expected header {','.join(CSV_HEADER)}")
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, 5)
        return cls(*(data[:, i].copy() for i in range(5)))


def evaluate_series(fn: Callable[[float], OccupationPoint],
                    times: Iterable[float]) -> OccupationSeries:
    """Evaluate a pointwise occupation function on a time grid."""
    pts = []
    for t in times:
        if not math.isfinite(t):
            raise DomainError("non-finite time")
        pts.append(fn(float(t)))
    return OccupationSeries.from_points(pts)
