"""Shared domain types, validation, and JSON serialization.

Everything downstream (samplers, adversarial stream generators, discrete
solvers, CLI) builds on the immutable value types defined here.  Times and
interval boundaries are ``fractions.Fraction`` throughout so that mistake
integrals and the blind-error arithmetic stay exact; JSON emits a plain
number whenever the value survives a decimal round trip and a
``{"num": p, "den": q}`` object otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any


class QstreamError(Exception):
    """Base class for contract violations raised by this package."""


class UnknownInstanceError(QstreamError):
    """An instance identifier is not part of the relevant instance space."""


class NonRealizableError(QstreamError):
    """A stream or sequence is inconsistent with every surviving concept."""


class MalformedTokenError(QstreamError):
    """A stream position expected to carry a reveal token does not."""


class BudgetViolationError(QstreamError):
    """A query placement or strategy exceeds its declared query budget."""


RationalLike = int | float | str | Fraction | dict


def as_fraction(value: RationalLike) -> Fraction:
    """Coerce a JSON-compatible number representation to an exact Fraction.

    Floats are read through their shortest decimal repr, so a JSON ``0.1``
    means one tenth rather than the nearest binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rational values")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, dict):
        return Fraction(int(value["num"]), int(value["den"]))
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def fraction_to_json(value: Fraction) -> Any:
    """Emit an int, a decimal-exact float, or a {num, den} object."""
    if value.denominator == 1:
        return int(value)
    f = float(value)
    if Fraction(repr(f)) == value:
        return f
    return {"num": value.numerator, "den": value.denominator}


Label = int

LabelVector = tuple[Label, ...]
"""Finite binary prediction/outcome vector (time-indexed from 1)."""


@dataclass(frozen=True)
class InstanceSpace:
    """Ordered alphabet of opaque instance identifiers.

    The declared order is the canonical tie-breaking order used everywhere
    determinism matters.
    """

    instances: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "instances", tuple(self.instances))

    def index_of(self, x: str) -> int:
        try:
            return self.instances.index(x)
        except ValueError:
            raise UnknownInstanceError(f"instance not in space: {x!r}") from None

    def __contains__(self, x: str) -> bool:
        return x in self.instances


@dataclass(frozen=True)
class ConceptClass:
    """Finite binary concept class: distinct label vectors over a space.

    ``concepts[i][j]`` is the label concept *i* assigns to instance *j* (in
    space order).  Empty classes are structurally allowed because they arise
    as restriction results; ``validate`` flags them for standalone values.
    """

    space: InstanceSpace
    concepts: tuple[tuple[Label, ...], ...]
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "concepts", tuple(tuple(c) for c in self.concepts))
        if not self.names:
            object.__setattr__(
                self, "names", tuple(f"h{i + 1}" for i in range(len(self.concepts)))
            )
        else:
            object.__setattr__(self, "names", tuple(self.names))

    @property
    def is_empty(self) -> bool:
        return not self.concepts

    def label(self, concept_index: int, x: str) -> Label:
        return self.concepts[concept_index][self.space.index_of(x)]

    def __len__(self) -> int:
        return len(self.concepts)


@dataclass(frozen=True)
class Segment:
    """Constant piece of a stream: value (x, y) on [start, end)."""

    start: Fraction
    end: Fraction
    x: str
    y: Label

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", as_fraction(self.start))
        object.__setattr__(self, "end", as_fraction(self.end))

    @property
    def width(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class PiecewiseStream:
    """Finite-horizon continuous stream as ordered constant segments.

    Valid streams cover [0, horizon) exactly, with disjoint contiguous
    segments of positive width.
    """

    horizon: Fraction
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "horizon", as_fraction(self.horizon))
        object.__setattr__(self, "segments", tuple(self.segments))

    def value_at(self, t: Fraction) -> tuple[str, Label]:
        """Return (x, y) for the segment containing time t."""
        if t < 0 or t >= self.horizon:
            raise ValueError(f"time {t} outside [0, {self.horizon})")
        lo, hi = 0, len(self.segments) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.segments[mid].end <= t:
                lo = mid + 1
            else:
                hi = mid
        seg = self.segments[lo]
        if not (seg.start <= t < seg.end):
            raise ValueError(f"stream does not cover time {t}")
        return seg.x, seg.y


@dataclass(frozen=True)
class DiscretePattern:
    """Finite discrete pattern: (x, y) pairs for rounds 1..len(steps)."""

    steps: tuple[tuple[str, Label], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple((x, y) for x, y in self.steps))

    @property
    def labels(self) -> LabelVector:
        return tuple(y for _, y in self.steps)

    @property
    def instances(self) -> tuple[str, ...]:
        return tuple(x for x, _ in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class PatternClass:
    """Finite set of equal-length patterns over a shared instance space."""

    space: InstanceSpace
    horizon: int
    patterns: tuple[DiscretePattern, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "patterns", tuple(self.patterns))

    @property
    def is_empty(self) -> bool:
        return not self.patterns

    def __len__(self) -> int:
        return len(self.patterns)


@dataclass(frozen=True)
class QueryBudgetPolicy:
    """Linear query budget: budget(t) = floor(slope * t), slope > 0."""

    slope: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "slope", as_fraction(self.slope))

    def budget(self, t: RationalLike) -> int:
        return math.floor(self.slope * as_fraction(t))

    def __call__(self, t: RationalLike) -> int:
        return self.budget(t)


# ---------------------------------------------------------------------------
# Validation


def _validate_space(space: InstanceSpace) -> list[str]:
    out = []
    if not space.instances:
        out.append("instance space is empty")
    if len(set(space.instances)) != len(space.instances):
        out.append("instance identifiers are not pairwise distinct")
    return out


def _validate_concept_class(cls: ConceptClass) -> list[str]:
    out = _validate_space(cls.space)
    if not cls.concepts:
        out.append("concept class is empty")
    n = len(cls.space.instances)
    for i, c in enumerate(cls.concepts):
        if len(c) != n:
            out.append(f"concept {i} has {len(c)} labels, expected {n}")
        for y in c:
            if y not in (0, 1):
                out.append(f"concept {i} has non-binary label {y!r}")
                break
    if len(set(cls.concepts)) != len(cls.concepts):
        out.append("concepts are not pairwise distinct as label vectors")
    if len(cls.names) != len(cls.concepts):
        out.append("concept names do not match concept count")
    return out


def _validate_stream(stream: PiecewiseStream) -> list[str]:
    out = []
    if stream.horizon < 0:
        out.append("horizon is negative")
    cursor = Fraction(0)
    for i, seg in enumerate(stream.segments):
        if seg.start >= seg.end:
            out.append(f"segment {i} has start >= end ({seg.start} >= {seg.end})")
        if seg.y not in (0, 1):
            out.append(f"segment {i} has non-binary label {seg.y!r}")
        if seg.start > cursor:
            out.append(f"gap [{cursor},{seg.start})")
        elif seg.start < cursor:
            out.append(f"overlap at {seg.start} (segment {i})")
        cursor = max(cursor, seg.end)
    if cursor < stream.horizon:
        out.append(f"gap [{cursor},{stream.horizon})")
    elif cursor > stream.horizon:
        out.append(f"segments extend to {cursor}, beyond horizon {stream.horizon}")
    return out


def _validate_pattern(p: DiscretePattern) -> list[str]:
    out = []
    if not p.steps:
        out.append("pattern is empty")
    for t, (_, y) in enumerate(p.steps, start=1):
        if y not in (0, 1):
            out.append(f"pattern step {t} has non-binary label {y!r}")
    return out


def _validate_pattern_class(P: PatternClass) -> list[str]:
    out = _validate_space(P.space)
    if P.horizon <= 0:
        out.append(f"horizon must be positive, got {P.horizon}")
    if not P.patterns:
        out.append("pattern class is empty")
    for i, p in enumerate(P.patterns):
        out.extend(f"pattern {i}: {v}" for v in _validate_pattern(p))
        if len(p) != P.horizon:
            out.append(f"pattern {i}: length mismatch ({len(p)} steps, horizon {P.horizon})")
        for x, _ in p.steps:
            if x not in P.space:
                out.append(f"pattern {i}: instance not in space: {x!r}")
    if len(set(P.patterns)) != len(P.patterns):
        out.append("patterns are not pairwise distinct")
    return out


def _validate_budget(b: QueryBudgetPolicy) -> list[str]:
    return [] if b.slope > 0 else [f"slope must be positive, got {b.slope}"]


def validate(obj: Any) -> list[str]:
    """Return every invariant violation of a core value; [] means ok.

    Violations are data, not failures: this never raises on a structurally
    well-formed value and is idempotent.
    """
    if isinstance(obj, InstanceSpace):
        return _validate_space(obj)
    if isinstance(obj, ConceptClass):
        return _validate_concept_class(obj)
    if isinstance(obj, PiecewiseStream):
        return _validate_stream(obj)
    if isinstance(obj, DiscretePattern):
        return _validate_pattern(obj)
    if isinstance(obj, PatternClass):
        return _validate_pattern_class(obj)
    if isinstance(obj, QueryBudgetPolicy):
        return _validate_budget(obj)
    raise TypeError(f"validate does not know type {type(obj).__name__}")


def project_labels(P: PatternClass) -> set[LabelVector]:
    """Project a pattern class to its set of distinct label vectors."""
    return {p.labels for p in P.patterns}


# ---------------------------------------------------------------------------
# JSON wire formats (canonical field names)


def concept_class_to_json(cls: ConceptClass) -> dict:
    return {
        "instances": list(cls.space.instances),
        "concepts": [
            {"name": name, "labels": list(labels)}
            for name, labels in zip(cls.names, cls.concepts)
        ],
    }


def concept_class_from_json(doc: dict) -> ConceptClass:
    space = InstanceSpace(tuple(doc["instances"]))
    concepts = tuple(tuple(int(y) for y in c["labels"]) for c in doc["concepts"])
    names = tuple(c.get("name", f"h{i + 1}") for i, c in enumerate(doc["concepts"]))
    return ConceptClass(space, concepts, names)


def pattern_class_to_json(P: PatternClass) -> dict:
    return {
        "instances": list(P.space.instances),
        "horizon": P.horizon,
        "patterns": [[[x, y] for x, y in p.steps] for p in P.patterns],
    }


def pattern_class_from_json(doc: dict) -> PatternClass:
    space = InstanceSpace(tuple(doc["instances"]))
    patterns = tuple(
        DiscretePattern(tuple((str(x), int(y)) for x, y in steps))
        for steps in doc["patterns"]
    )
    return PatternClass(space, int(doc["horizon"]), patterns)


def stream_to_json(stream: PiecewiseStream) -> dict:
    return {
        "horizon": fraction_to_json(stream.horizon),
        "segments": [
            {
                "start": fraction_to_json(s.start),
                "end": fraction_to_json(s.end),
                "x": s.x,
                "y": s.y,
            }
            for s in stream.segments
        ],
    }


def stream_from_json(doc: dict) -> PiecewiseStream:
    segments = tuple(
        Segment(as_fraction(s["start"]), as_fraction(s["end"]), str(s["x"]), int(s["y"]))
        for s in doc["segments"]
    )
    return PiecewiseStream(as_fraction(doc["horizon"]), segments)


def budget_to_json(b: QueryBudgetPolicy) -> dict:
    return {"slope": {"num": b.slope.numerator, "den": b.slope.denominator}}


def budget_from_json(doc: dict) -> QueryBudgetPolicy:
    return QueryBudgetPolicy(as_fraction(doc["slope"]))


_TO_JSON = {
    ConceptClass: concept_class_to_json,
    PatternClass: pattern_class_to_json,
    PiecewiseStream: stream_to_json,
    QueryBudgetPolicy: budget_to_json,
}


def dumps(obj: Any, **kwargs: Any) -> str:
    """Serialize a core value to its canonical JSON text."""
    for typ, fn in _TO_JSON.items():
        if isinstance(obj, typ):
            return json.dumps(fn(obj), **kwargs)
    raise TypeError(f"no JSON format for type {type(obj).__name__}")
