"""Reading spaces, Orlicz specs and model specs from files or flags."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import InvalidSpec
from .metric import MetricSpace, ProbMeasure, SpaceFamilySpec, build_measure, build_metric_space, generate_space, uniform_measure
from .orlicz import OrliczFn, identity, piecewise, power

BUNDLED = ("two_point", "three_point_path")


def _load_json_arg(text: str) -> Any:
    """``text`` is inline JSON, a file path, or ``bundled:NAME``."""
    if text.startswith("bundled:"):
        name = text.split(":", 1)[1]
        if name not in BUNDLED:
            raise InvalidSpec(f"unknown bundled example {name!r}; choose from {BUNDLED}")
        return json.loads(resources.files("chainkit.data").joinpath(f"{name}.json").read_text())
    stripped = text.lstrip()
    if stripped.startswith(("{", "[")):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"bad inline JSON: {exc}") from None
    path = Path(text)
    if not path.exists():
        raise InvalidSpec(f"no such file: {text}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{text} is not valid JSON: {exc}") from None


def space_from_document(doc: Mapping) -> tuple[MetricSpace, ProbMeasure]:
    """``{"dist": ..., "measure": ...}`` or ``{"family": {...}}``; no measure means uniform."""
    if "family" in doc:
        return generate_space(SpaceFamilySpec.from_dict(doc["family"]))
    if "dist" not in doc:
        raise InvalidSpec("space document needs 'dist' or 'family'")
    space = build_metric_space(doc["dist"], labels=doc.get("labels"))
    measure = build_measure(doc["measure"], space.n) if doc.get("measure") is not None else uniform_measure(space.n)
    return space, measure


def load_space(text: str, measure_override: str | None = None) -> tuple[MetricSpace, ProbMeasure]:
    space, measure = space_from_document(_load_json_arg(text))
    if measure_override:
        if measure_override == "uniform":
            measure = uniform_measure(space.n)
        else:
            w = _load_json_arg(measure_override)
            measure = build_measure(w["measure"] if isinstance(w, Mapping) else w, space.n)
    return space, measure


def orlicz_from_spec(spec: Mapping) -> OrliczFn:
    kind = spec.get("kind")
    if kind == "identity":
        return identity()
    if kind == "power":
        if "p" not in spec:
            raise InvalidSpec("power spec needs 'p'")
        return power(spec["p"])
    if kind == "piecewise":
        if "knots" not in spec:
            raise InvalidSpec("piecewise spec needs 'knots'")
        return piecewise(spec["knots"])
    raise InvalidSpec(f"unknown Orlicz kind {kind!r}; expected identity, power or piecewise")


def parse_orlicz(text: str) -> OrliczFn:
    """Accepts JSON, a file, ``identity``, ``power:P`` or ``powerP``."""
    t = text.strip()
    if t == "identity":
        return identity()
    for prefix in ("power:", "power"):
        if t.startswith(prefix) and not t.startswith("{"):
            try:
                return power(float(t[len(prefix):]))
            except ValueError:
                break
    return orlicz_from_spec(_load_json_arg(t))


def parse_model(text: str) -> tuple[str, dict]:
    """``embed-euclidean``, ``brownian-path``, or a JSON/file ``{"kind": ..., ...}``."""
    t = text.strip()
    if t in ("embed-euclidean", "brownian-path"):
        return t, {}
    doc = _load_json_arg(t)
    if not isinstance(doc, Mapping) or "kind" not in doc:
        raise InvalidSpec("model spec needs a 'kind'")
    params = {k: v for k, v in doc.items() if k != "kind"}
    return doc["kind"], params
