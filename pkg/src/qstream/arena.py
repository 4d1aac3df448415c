"""Continuous-time game engine: exact integrals and the two samplers.

Mistake integrals are computed on the common refinement of segment
boundaries with Fraction arithmetic, never by quadrature.  Query times drawn
from the RNG are binary floats, converted exactly to Fractions, so a seeded
run has one well-defined exact mistake integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .adversaries import decode_reveal_token, is_reveal_token
from .littlestone import VersionSpace, soa_predict
from .model import (
    ConceptClass,
    Label,
    MalformedTokenError,
    NonRealizableError,
    PiecewiseStream,
    RationalLike,
    as_fraction,
    fraction_to_json,
)


@dataclass(frozen=True)
class PredictorTrace:
    """Realized predictions along a run: (start, end, label) covering [0, horizon)."""

    horizon: Fraction
    pieces: tuple[tuple[Fraction, Fraction, Label], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "horizon", as_fraction(self.horizon))
        object.__setattr__(
            self,
            "pieces",
            tuple((as_fraction(a), as_fraction(b), y) for a, b, y in self.pieces),
        )


@dataclass(frozen=True)
class QueryEvent:
    time: Fraction
    x: str
    y: Label
    success: bool  # deployed predictor disagreed with the revealed label

    def to_json(self) -> dict:
        return {
            "time": fraction_to_json(self.time),
            "x": self.x,
            "y": self.y,
            "success": self.success,
        }


@dataclass(frozen=True)
class EpochError:
    """Error accrued while waiting for the k-th successful query."""

    epoch: int
    error: Fraction

    def to_json(self) -> dict:
        return {"epoch": self.epoch, "error": fraction_to_json(self.error)}


@dataclass(frozen=True)
class RunReport:
    mistake_integral: Fraction
    query_events: tuple[QueryEvent, ...]
    epoch_errors: tuple[EpochError, ...]
    seed: object
    parameters: dict

    @property
    def successful_queries(self) -> int:
        return sum(1 for e in self.query_events if e.success)

    def to_json(self) -> dict:
        return {
            "mistake_integral": fraction_to_json(self.mistake_integral),
            "query_events": [e.to_json() for e in self.query_events],
            "epoch_errors": [e.to_json() for e in self.epoch_errors],
            "seed": self.seed,
            "parameters": self.parameters,
        }


def mistake_integral(stream: PiecewiseStream, trace: PredictorTrace) -> Fraction:
    """Exact measure of {t : prediction != label} over the shared horizon."""
    if stream.horizon != trace.horizon:
        raise ValueError(
            f"horizon mismatch: stream {stream.horizon}, trace {trace.horizon}"
        )
    total = Fraction(0)
    si = ti = 0
    cursor = Fraction(0)
    while cursor < stream.horizon:
        while si < len(stream.segments) and stream.segments[si].end <= cursor:
            si += 1
        while ti < len(trace.pieces) and trace.pieces[ti][1] <= cursor:
            ti += 1
        if si >= len(stream.segments) or ti >= len(trace.pieces):
            raise ValueError(f"coverage ends before horizon at {cursor}")
        seg = stream.segments[si]
        piece = trace.pieces[ti]
        if seg.start > cursor or piece[0] > cursor:
            raise ValueError(f"coverage gap at {cursor}")
        stop = min(seg.end, piece[1], stream.horizon)
        if piece[2] != seg.y:
            total += stop - cursor
        cursor = stop
    return total


def _float_to_fraction(t: float) -> Fraction:
    # exact binary value; keeps seeded runs reproducible to the bit
    return Fraction(t)


def run_uniform_sampler(
    H: ConceptClass,
    stream: PiecewiseStream,
    delta: RationalLike,
    seed,
    on_empty: str = "error",
) -> RunReport:
    """Uniformly-sampled querying with a standard-optimal predictor.

    The next query time is drawn from Unif[t, t + delta] where t is the
    previous query time (0 initially); each query observes the stream pair,
    is marked successful when the deployed prediction disagrees, and shrinks
    the version space.  Queries landing past the horizon are not executed.

    Instances outside H's space (reveal tokens) are predicted as 0 and do
    not restrict the version space.  ``on_empty`` decides what an
    observation inconsistent with every surviving concept means: ``error``
    raises NonRealizableError (concept-class contract), ``reset`` restores
    the full class and continues (pattern-class streams).
    """
    if on_empty not in ("error", "reset"):
        raise ValueError(f"on_empty must be 'error' or 'reset', got {on_empty!r}")
    delta_f = float(as_fraction(delta))
    if delta_f <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    rng = np.random.default_rng(seed)
    V = VersionSpace(H)

    def predict(x: str) -> Label:
        if x not in H.space:
            return 0
        return soa_predict(V, x)

    epoch_acc: list[Fraction] = [Fraction(0)]
    events: list[QueryEvent] = []
    cursor = Fraction(0)
    anchor = 0.0

    def accumulate(stop: Fraction) -> None:
        nonlocal cursor
        si = 0
        while cursor < stop:
            while stream.segments[si].end <= cursor:
                si += 1
            seg = stream.segments[si]
            piece_end = min(seg.end, stop)
            if predict(seg.x) != seg.y:
                epoch_acc[-1] += piece_end - cursor
            cursor = piece_end

    queried = False
    while True:
        t_float = float(rng.uniform(anchor, anchor + delta_f))
        while queried and t_float == anchor:
            # numpy's uniform includes the lower endpoint; query times must
            # strictly increase
            t_float = float(rng.uniform(anchor, anchor + delta_f))
        t_q = _float_to_fraction(t_float)
        if t_q >= stream.horizon:
            accumulate(stream.horizon)
            break
        accumulate(t_q)
        x, y = stream.value_at(t_q)
        success = predict(x) != y
        events.append(QueryEvent(t_q, x, y, success))
        if x in H.space:
            nxt = V.restrict(x, y)
            if nxt.is_empty:
                if on_empty == "error":
                    raise NonRealizableError(
                        f"stream not realizable: ({x!r}, {y}) at {t_q} empties the version space"
                    )
                nxt = VersionSpace(H)
            V = nxt
        if success:
            epoch_acc.append(Fraction(0))
        anchor = t_float
        queried = True

    # a trailing zero-error epoch carries no information and would push the
    # epoch count past LD(H) after the final successful query
    epochs = list(epoch_acc)
    if epochs and epochs[-1] == 0:
        epochs.pop()
    return RunReport(
        mistake_integral=sum(epoch_acc, Fraction(0)),
        query_events=tuple(events),
        epoch_errors=tuple(EpochError(k + 1, e) for k, e in enumerate(epochs)),
        seed=seed,
        parameters={"delta": str(as_fraction(delta)), "horizon": str(stream.horizon)},
    )


@dataclass
class EpochStats:
    epoch: int
    mean: float
    stderr: float
    count: int


@dataclass
class MonteCarloStats:
    trials: int
    mean: float
    stderr: float
    per_epoch: list[EpochStats]
    integrals: list[Fraction] = field(repr=False)

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "mean": self.mean,
            "stderr": self.stderr,
            "per_epoch": [
                {"epoch": s.epoch, "mean": s.mean, "stderr": s.stderr, "count": s.count}
                for s in self.per_epoch
            ],
        }


def monte_carlo_uniform(
    H: ConceptClass,
    stream_or_generator: PiecewiseStream | Callable[[np.random.SeedSequence], PiecewiseStream],
    delta: RationalLike,
    trials: int,
    seed,
    on_empty: str = "error",
) -> MonteCarloStats:
    """Independent seeded runs; mean and standard error of the integral.

    A callable adversary receives a child SeedSequence per trial, so stream
    randomness and sampler randomness never share a stream of bits.  The
    top-level seed fully determines every output.
    """
    if trials < 2:
        raise ValueError(f"need at least 2 trials, got {trials}")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    integrals: list[Fraction] = []
    epoch_values: dict[int, list[Fraction]] = {}
    for child in root.spawn(trials):
        stream_seed, run_seed = child.spawn(2)
        if callable(stream_or_generator):
            stream = stream_or_generator(stream_seed)
        else:
            stream = stream_or_generator
        report = run_uniform_sampler(H, stream, delta, run_seed, on_empty=on_empty)
        integrals.append(report.mistake_integral)
        for rec in report.epoch_errors:
            epoch_values.setdefault(rec.epoch, []).append(rec.error)

    values = np.array([float(v) for v in integrals])
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(trials))
    per_epoch = []
    for k in sorted(epoch_values):
        vals = np.array([float(v) for v in epoch_values[k]])
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        per_epoch.append(EpochStats(k, float(vals.mean()), se, len(vals)))
    return MonteCarloStats(trials, mean, stderr, per_epoch, integrals)


def run_adaptive_sampler(stream: PiecewiseStream) -> RunReport:
    """Decode-and-follow play on a self-revealing stream.

    Queries at t = 0, decodes the revealed schedule, predicts it verbatim
    until the announced next reveal, queries exactly then, and repeats.  On
    an honest self-revealing stream the mistake integral is exactly 0 and
    the query times equal the reveal times.
    """
    events: list[QueryEvent] = []
    pieces: list[tuple[Fraction, Fraction, Label]] = []
    t = Fraction(0)
    last_label: Label = 0  # stale-predictor output at the instant of a query
    while t < stream.horizon:
        x, y = stream.value_at(t)
        if not is_reveal_token(x):
            raise MalformedTokenError(f"not a self-revealing stream at t={t}")
        schedule, next_reveal = decode_reveal_token(x)
        events.append(QueryEvent(t, x, y, success=last_label != y))
        cursor = t
        for sx, sy, lo, hi in schedule:
            if lo != cursor:
                raise MalformedTokenError(f"decoded schedule has a gap at {cursor}")
            pieces.append((lo, hi, sy))
            cursor = hi
            last_label = sy
        if cursor != min(next_reveal, stream.horizon):
            raise MalformedTokenError(
                f"decoded schedule ends at {cursor}, expected {next_reveal}"
            )
        if next_reveal <= t:
            raise MalformedTokenError("next reveal does not advance time")
        t = next_reveal

    trace = PredictorTrace(stream.horizon, tuple(pieces))
    integral = mistake_integral(stream, trace)
    return RunReport(
        mistake_integral=integral,
        query_events=tuple(events),
        epoch_errors=(),
        seed=None,
        parameters={"horizon": str(stream.horizon)},
    )
