"""Adversarial stream constructions and the exact blind-error formula.

Three generators: the shattered-branch painting over [0, 4n), the two-point
random painting that defeats blind prediction, and self-revealing streams
whose segment-initial instance encodes the segment's full schedule plus the
next reveal time.  ``exact_blind_error`` evaluates the two-point expected
error analytically, with no sampling.
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .littlestone import VersionSpace, build_littlestone_tree
from .model import (
    BudgetViolationError,
    ConceptClass,
    Label,
    MalformedTokenError,
    PiecewiseStream,
    QstreamError,
    QueryBudgetPolicy,
    RationalLike,
    Segment,
    as_fraction,
)

_TOKEN_PREFIX = "SEG("
_TOKEN_JOINT = ")|next="


def _frac_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def encode_reveal_token(
    schedule: list[tuple[str, Label, Fraction, Fraction]], next_reveal: Fraction
) -> str:
    """Pack a segment's full (x, y, start, end) schedule into one instance id."""
    payload = [
        [x, y, _frac_str(as_fraction(start)), _frac_str(as_fraction(end))]
        for x, y, start, end in schedule
    ]
    return (
        _TOKEN_PREFIX
        + json.dumps(payload, separators=(",", ":"))
        + _TOKEN_JOINT
        + _frac_str(as_fraction(next_reveal))
    )


def decode_reveal_token(token: str) -> tuple[list[tuple[str, Label, Fraction, Fraction]], Fraction]:
    """Inverse of ``encode_reveal_token``; raises MalformedTokenError."""
    if not token.startswith(_TOKEN_PREFIX) or _TOKEN_JOINT not in token:
        raise MalformedTokenError("not a self-revealing stream")
    body, _, tail = token[len(_TOKEN_PREFIX):].rpartition(_TOKEN_JOINT)
    try:
        payload = json.loads(body)
        schedule = [
            (str(x), int(y), Fraction(start), Fraction(end))
            for x, y, start, end in payload
        ]
        next_reveal = Fraction(tail)
    except (ValueError, TypeError) as exc:
        raise MalformedTokenError(f"not a self-revealing stream: {exc}") from exc
    return schedule, next_reveal


def is_reveal_token(x: str) -> bool:
    return x.startswith(_TOKEN_PREFIX) and _TOKEN_JOINT in x


def gen_littlestone_branch_stream(
    H: ConceptClass,
    n: int,
    budget: QueryBudgetPolicy,
    seed,
    horizon: RationalLike | None = None,
) -> PiecewiseStream:
    """Paint [0, 4n) with a random root-to-leaf branch of a shattered tree.

    With k = budget(4n), the branch has 2k steps and each step occupies an
    interval of width 2n/k.  Beyond 4n (when a larger horizon is requested)
    the stream holds a fixed pair consistent with every surviving concept,
    so the whole stream stays realizable.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    k = budget.budget(4 * n)
    if k < 1:
        raise QstreamError(f"budget({4 * n}) = {k} < 1; nothing to paint against")
    tree = build_littlestone_tree(H, 2 * k)
    if tree is None:
        raise QstreamError(
            f"class too shallow: needs Littlestone dimension >= {2 * k}"
        )
    rng = np.random.default_rng(seed)
    path: list[tuple[str, Label]] = []
    node = tree
    while node is not None:
        b = int(rng.integers(0, 2))
        path.append((node.x, b))
        node = node.right if b else node.left

    width = Fraction(2 * n, k)
    segments = [
        Segment(width * j, width * (j + 1), x, y) for j, (x, y) in enumerate(path)
    ]

    total = as_fraction(horizon) if horizon is not None else Fraction(4 * n)
    if total < 4 * n:
        raise ValueError(f"horizon {total} shorter than the painted prefix {4 * n}")
    if total > 4 * n:
        segments.append(Segment(Fraction(4 * n), total, *_consistent_tail(H, path)))
    return PiecewiseStream(total, tuple(segments))


def _consistent_tail(H: ConceptClass, path: list[tuple[str, Label]]) -> tuple[str, Label]:
    """A pair every branch-consistent concept can extend: unanimous instance
    first (smallest token), else the first concept's label on the smallest
    instance."""
    V = VersionSpace(H)
    for x, y in path:
        V = V.restrict(x, y)
    assert not V.is_empty  # every tree branch is realizable
    survivors = V.concept_class()
    for x in sorted(H.space.instances):
        labels = {survivors.label(i, x) for i in range(len(survivors))}
        if len(labels) == 1:
            return x, labels.pop()
    x = sorted(H.space.instances)[0]
    first = min(survivors.concepts)
    return x, first[H.space.index_of(x)]


def gen_two_point_stream(
    x1: str,
    x2: str,
    units: int,
    budget: QueryBudgetPolicy,
    seed,
) -> PiecewiseStream:
    """Random (x1, 0) / (x2, 1) painting of each unit interval.

    Unit [n-1, n) splits into 2*budget(n) equal sub-intervals, each assigned
    independently and uniformly.  budget(n) = 0 degenerates to one random
    sub-interval covering the unit.
    """
    if x1 == x2:
        raise ValueError("the two instances must be distinct")
    if units < 1:
        raise ValueError(f"units must be a positive integer, got {units}")
    rng = np.random.default_rng(seed)
    pairs = ((x1, 0), (x2, 1))
    segments = []
    for n in range(1, units + 1):
        k = budget.budget(n)
        pieces = 2 * k if k >= 1 else 1
        width = Fraction(1, pieces)
        base = Fraction(n - 1)
        for j in range(pieces):
            x, y = pairs[int(rng.integers(0, 2))]
            segments.append(Segment(base + width * j, base + width * (j + 1), x, y))
    return PiecewiseStream(Fraction(units), tuple(segments))


def exact_blind_error(
    units: int,
    budget: QueryBudgetPolicy,
    query_times: set[RationalLike] | list[RationalLike],
) -> Fraction:
    """Expected mistake integral of any blind predictor vs the two-point law.

    Exact, no sampling: a sub-interval whose interior contains no query
    contributes half its width, because its label is a fair coin independent
    of every blind prediction.  Query placement must respect the per-unit
    cap |queries in [n-1, n)| <= budget(n).
    """
    times = sorted(as_fraction(t) for t in query_times)
    total = Fraction(0)
    for n in range(1, units + 1):
        lo_unit, hi_unit = Fraction(n - 1), Fraction(n)
        in_unit = [t for t in times if lo_unit <= t < hi_unit]
        k = budget.budget(n)
        if len(in_unit) > k:
            raise BudgetViolationError(
                f"{len(in_unit)} queries in [{n - 1}, {n}) exceed budget({n}) = {k}"
            )
        pieces = 2 * k if k >= 1 else 1
        width = Fraction(1, pieces)
        for j in range(pieces):
            lo = lo_unit + width * j
            hi = lo + width
            if not any(lo <= t < hi for t in in_unit):
                total += width / 2
    return total


def gen_self_revealing_stream(
    source: ConceptClass,
    reveal_times: list[RationalLike],
    horizon: RationalLike,
    seed,
) -> PiecewiseStream:
    """Stream whose segment-initial instances announce the segment's future.

    Each segment [q_i, q_{i+1}) carries an inner stream realizable in
    ``source`` (a fresh random depth-2 shattered branch when the class
    supports one, a random single concept otherwise); its first piece's
    instance is replaced by a token encoding the full inner schedule and the
    next reveal time.
    """
    total = as_fraction(horizon)
    reveals = [as_fraction(t) for t in reveal_times]
    if not reveals or reveals[0] != 0:
        raise ValueError("reveal times must start at 0")
    if any(b <= a for a, b in zip(reveals, reveals[1:])):
        raise ValueError("reveal times must be strictly increasing")
    if reveals[-1] >= total:
        raise ValueError("reveal times must lie inside [0, horizon)")
    if source.is_empty:
        raise QstreamError("source class is empty")

    rng = np.random.default_rng(seed)
    tree = build_littlestone_tree(source, 2)
    bounds = reveals + [total]
    segments: list[Segment] = []
    for a, b in zip(bounds, bounds[1:]):
        inner: list[tuple[str, Label, Fraction, Fraction]] = []
        if tree is not None:
            mid = (a + b) / 2
            node, cuts = tree, [(a, mid), (mid, b)]
            for lo, hi in cuts:
                bit = int(rng.integers(0, 2))
                inner.append((node.x, bit, lo, hi))
                node = node.right if bit else node.left
        else:
            h = int(rng.integers(0, len(source.concepts)))
            xi = int(rng.integers(0, len(source.space.instances)))
            x = source.space.instances[xi]
            inner.append((x, source.concepts[h][xi], a, b))
        token = encode_reveal_token(inner, b)
        first_x, first_y, lo, hi = inner[0]
        segments.append(Segment(lo, hi, token, first_y))
        for x, y, lo, hi in inner[1:]:
            segments.append(Segment(lo, hi, x, y))
    return PiecewiseStream(total, tuple(segments))
