"""Checked inequality instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

SLACK_TOL = 1e-9


def slack_tolerance(rhs: float) -> float:
    """Absolute 1e-9, switching to relative 1e-9 once |rhs| exceeds 1."""
    return SLACK_TOL * max(1.0, abs(rhs)) if math.isfinite(rhs) else SLACK_TOL


def _plain(value):
    # witnesses end up in JSON reports
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class BoundCertificate:
    """One instance of ``lhs <= rhs`` together with what is needed to replay it."""

    name: str
    lhs: float
    rhs: float
    witness: dict[str, Any] = field(default_factory=dict)
    # None: the default slack rule; otherwise an absolute tolerance
    tol: float | None = None

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        tol = slack_tolerance(self.rhs) if self.tol is None else self.tol
        return self.slack >= -tol

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "slack": float(self.slack),
            "pass": self.passed,
            "witness": _plain(self.witness),
        }


def worst(certs: Iterable[BoundCertificate]) -> BoundCertificate | None:
    """The certificate with the smallest slack (first one on ties)."""
    best = None
    for c in certs:
        if best is None or c.slack < best.slack:
            best = c
    return best


def from_vectors(name: str, lhs, rhs, witness: dict | None = None, index_name: str = "t") -> BoundCertificate:
    """Collapse an entrywise comparison to the entry with the least slack."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.broadcast_to(np.asarray(rhs, dtype=float), lhs.shape)
    slack = rhs - lhs
    i = int(np.argmin(slack)) if slack.size else 0
    info = dict(witness or {})
    if lhs.size:
        info[index_name] = np.unravel_index(i, lhs.shape)[0] if lhs.ndim == 1 else list(np.unravel_index(i, lhs.shape))
        return BoundCertificate(name, float(lhs.flat[i]), float(rhs.flat[i]), info)
    return BoundCertificate(name, 0.0, 0.0, info)
