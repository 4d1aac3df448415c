from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qstream.arena import (
    PredictorTrace,
    mistake_integral,
    monte_carlo_uniform,
    run_adaptive_sampler,
    run_uniform_sampler,
)
from qstream.adversaries import gen_littlestone_branch_stream, gen_self_revealing_stream
from qstream.littlestone import littlestone_dimension
from qstream.model import (
    ConceptClass,
    InstanceSpace,
    MalformedTokenError,
    NonRealizableError,
    PiecewiseStream,
    QueryBudgetPolicy,
    Segment,
    validate,
)

AB = InstanceSpace(("a", "b"))
FULL_AB = ConceptClass(AB, tuple(product((0, 1), repeat=2)))
SINGLETON = ConceptClass(AB, ((0, 1),))


def trace(horizon, *pieces):
    return PredictorTrace(horizon, tuple((Fraction(a), Fraction(b), y) for a, b, y in pieces))


def test_integral_zero_when_trace_matches():
    stream = PiecewiseStream(2, (Segment(0, 1, "a", 0), Segment(1, 2, "b", 1)))
    assert mistake_integral(stream, trace(2, (0, 1, 0), (1, 2, 1))) == 0


def test_integral_width_arithmetic():
    stream = PiecewiseStream(2, (Segment(0, 2, "a", 0),))
    assert mistake_integral(stream, trace(2, (0, 1, 1), (1, 2, 0))) == 1


def test_integral_refined_quarters():
    # four quarter-width segments on [0,1); trace wrong on exactly two
    segs = tuple(
        Segment(Fraction(i, 4), Fraction(i + 1, 4), "a", i % 2) for i in range(4)
    )
    stream = PiecewiseStream(1, segs)
    t = trace(1, (0, Fraction(1, 4), 1), (Fraction(1, 4), Fraction(3, 4), 1), (Fraction(3, 4), 1, 1))
    # stream labels 0,1,0,1 vs constant 1 -> wrong on quarters 1 and 3
    assert mistake_integral(stream, t) == Fraction(1, 2)


def test_integral_horizon_mismatch():
    stream = PiecewiseStream(2, (Segment(0, 2, "a", 0),))
    with pytest.raises(ValueError, match="horizon mismatch"):
        mistake_integral(stream, trace(3, (0, 3, 0)))


@given(st.lists(st.integers(1, 4), min_size=1, max_size=5),
       st.lists(st.integers(1, 3), min_size=1, max_size=4), st.data())
@settings(max_examples=50)
def test_integral_invariant_under_resplitting(widths, cuts, data):
    cursor = Fraction(0)
    segs = []
    for i, w in enumerate(widths):
        segs.append(Segment(cursor, cursor + w, "a", i % 2))
        cursor += w
    stream = PiecewiseStream(cursor, tuple(segs))
    labels = [data.draw(st.integers(0, 1)) for _ in widths]
    t = PredictorTrace(cursor, tuple((s.start, s.end, y) for s, y in zip(segs, labels)))
    base = mistake_integral(stream, t)

    # re-split every stream segment into equal pieces with identical content
    refined = []
    for s, k in zip(segs, cuts * len(segs)):
        step = (s.end - s.start) / k
        for j in range(k):
            refined.append(Segment(s.start + step * j, s.start + step * (j + 1), s.x, s.y))
    stream2 = PiecewiseStream(cursor, tuple(refined))
    assert validate(stream2) == []
    assert mistake_integral(stream2, t) == base


# --- uniform sampler ---------------------------------------------------------

def branch_stream(seed, n=4, slope=Fraction(1, 16)):
    return gen_littlestone_branch_stream(FULL_AB, n, QueryBudgetPolicy(slope), seed)


def test_uniform_singleton_never_errs():
    stream = PiecewiseStream(4, (Segment(0, 2, "a", 0), Segment(2, 4, "b", 1)))
    report = run_uniform_sampler(SINGLETON, stream, 1, 0)
    assert report.mistake_integral == 0


def test_uniform_successes_bounded_by_dimension():
    dim = littlestone_dimension(FULL_AB)
    for seed in range(25):
        report = run_uniform_sampler(FULL_AB, branch_stream(seed), 1, seed)
        assert report.successful_queries <= dim
        assert 0 <= report.mistake_integral <= 16
        assert len(report.epoch_errors) <= dim


def test_uniform_deterministic_given_seed():
    a = run_uniform_sampler(FULL_AB, branch_stream(3), 1, 11)
    b = run_uniform_sampler(FULL_AB, branch_stream(3), 1, 11)
    assert a == b


def test_uniform_query_times_strictly_increase():
    report = run_uniform_sampler(FULL_AB, branch_stream(5), Fraction(1, 2), 9)
    times = [e.time for e in report.query_events]
    assert all(t1 < t2 for t1, t2 in zip(times, times[1:]))


def test_uniform_non_realizable_raises():
    # the stream shows (a,0) then (a,1); no single concept survives both
    stream = PiecewiseStream(2, (Segment(0, 1, "a", 0), Segment(1, 2, "a", 1)))
    with pytest.raises(NonRealizableError):
        run_uniform_sampler(ConceptClass(AB, ((0, 0),)), stream, Fraction(1, 4), 2)


def test_uniform_reset_mode_survives_inconsistency():
    stream = PiecewiseStream(2, (Segment(0, 1, "a", 0), Segment(1, 2, "a", 1)))
    report = run_uniform_sampler(ConceptClass(AB, ((0, 0),)), stream, Fraction(1, 4), 2, on_empty="reset")
    assert report.mistake_integral >= 0


def test_monte_carlo_singleton_zero():
    stream = PiecewiseStream(4, (Segment(0, 4, "a", 0),))
    stats = monte_carlo_uniform(SINGLETON, stream, 1, 20, 0)
    assert stats.mean == 0.0 and stats.stderr == 0.0


def test_monte_carlo_bounds_hold_smoke():
    stats = monte_carlo_uniform(FULL_AB, branch_stream, 1, 300, 123)
    dim = littlestone_dimension(FULL_AB)
    assert stats.mean <= dim * 1.0 + 3 * stats.stderr
    for es in stats.per_epoch:
        assert es.mean <= 1.0 + 3 * es.stderr


def test_monte_carlo_needs_two_trials():
    with pytest.raises(ValueError):
        monte_carlo_uniform(FULL_AB, branch_stream, 1, 1, 0)


def test_monte_carlo_deterministic():
    a = monte_carlo_uniform(FULL_AB, branch_stream, 1, 50, 77)
    b = monte_carlo_uniform(FULL_AB, branch_stream, 1, 50, 77)
    assert a.integrals == b.integrals


# --- adaptive sampler ----------------------------------------------------------

def test_adaptive_zero_error_and_exact_query_times():
    reveals = [Fraction(0), Fraction(3, 2), Fraction(3), Fraction(5)]
    stream = gen_self_revealing_stream(FULL_AB, reveals, 6, 21)
    report = run_adaptive_sampler(stream)
    assert report.mistake_integral == 0
    assert [e.time for e in report.query_events] == reveals
    assert len(report.query_events) <= 6  # slope-1 budget


def test_adaptive_rejects_plain_stream():
    stream = PiecewiseStream(2, (Segment(0, 2, "a", 0),))
    with pytest.raises(MalformedTokenError, match="not a self-revealing stream"):
        run_adaptive_sampler(stream)
