import random
from itertools import product

import pytest

import qstream.blind as blind_mod
from qstream.blind import (
    BlindStrategy,
    ConstantVectorStrategy,
    _weighted_one_center,
    blind_learning_dimension,
    bp_soa_strategy,
    game_value,
    qld,
    restrict_patterns,
    worst_case_mistakes,
)
from qstream.model import (
    BudgetViolationError,
    DiscretePattern,
    InstanceSpace,
    PatternClass,
    QstreamError,
)

AB = InstanceSpace(("a", "b"))


def make_class(labels_list, insts_list=None, space=None):
    L = len(labels_list[0])
    if insts_list is None:
        insts_list = [("a",) * L] * len(labels_list)
        space = space or InstanceSpace(("a",))
    space = space or AB
    pats = tuple(
        DiscretePattern(tuple(zip(xs, ys))) for xs, ys in zip(insts_list, labels_list)
    )
    return PatternClass(space, L, pats)


def random_class(rng, max_L=6, max_P=12, alphabet="ab"):
    L = rng.randint(2, max_L)
    want = rng.randint(1, max_P)
    pats = set()
    for _ in range(4 * want):
        pats.add(tuple((rng.choice(alphabet), rng.randint(0, 1)) for _ in range(L)))
        if len(pats) == want:
            break
    space = InstanceSpace(tuple(sorted(alphabet)))
    return PatternClass(space, L, tuple(DiscretePattern(p) for p in sorted(pats)))


def bld_naive(P, lo=None, hi=None):
    """Plain double loop, no bit packing: the independent oracle."""
    lo = lo or 1
    hi = hi or P.horizon
    vecs = {p.labels[lo - 1 : hi] for p in P.patterns}
    best = None
    for yhat in product((0, 1), repeat=hi - lo + 1):
        worst = max(sum(a != b for a, b in zip(yhat, v)) for v in vecs)
        if best is None or worst < best:
            best = worst
    return best


# --- restrict_patterns -----------------------------------------------------------

FOUR = make_class([(0, 0), (0, 1), (1, 0), (1, 1)])


def test_restrict_no_constraints_is_identity():
    assert restrict_patterns(FOUR).patterns == FOUR.patterns


def test_restrict_by_label():
    out = restrict_patterns(FOUR, label_constraints={1: 0})
    assert {p.labels for p in out.patterns} == {(0, 0), (0, 1)}


def test_restrict_by_instance_can_empty():
    out = restrict_patterns(FOUR, instance_constraints={2: "b"})
    assert out.is_empty


def test_restrict_time_out_of_range():
    with pytest.raises(ValueError):
        restrict_patterns(FOUR, label_constraints={3: 0})


# --- blind learning dimension -----------------------------------------------------

def test_bld_singleton():
    P = make_class([(0, 1, 0)])
    w = blind_learning_dimension(P)
    assert w.value == 0
    assert tuple(w.witness["prediction"]) == (0, 1, 0)


def test_bld_pair_distance_three():
    # exhaustive over all 8 candidates: every vector sits at distance >= 2
    # from one of {000, 111}, and e.g. 100 achieves exactly 2
    P = make_class([(0, 0, 0), (1, 1, 1)])
    assert blind_learning_dimension(P).value == 2


def test_bld_all_vectors_is_horizon():
    for L in (1, 2, 3, 4):
        P = make_class(list(product((0, 1), repeat=L)))
        assert blind_learning_dimension(P).value == L


def test_bld_matches_naive_oracle():
    rng = random.Random(5)
    for _ in range(40):
        L = rng.randint(1, 10)
        n = rng.randint(1, 8)
        labels = list({tuple(rng.randint(0, 1) for _ in range(L)) for _ in range(n)})
        P = make_class(labels)
        assert blind_learning_dimension(P).value == bld_naive(P)


def test_bld_invariant_under_order_and_relabeling():
    labels = [(0, 1, 1), (1, 0, 1), (1, 1, 0)]
    insts = [("a", "b", "a"), ("b", "a", "a"), ("a", "a", "b")]
    P1 = make_class(labels, insts)
    P2 = make_class(list(reversed(labels)), [tuple("b" if c == "a" else "a" for c in xs) for xs in reversed(insts)])
    assert blind_learning_dimension(P1).value == blind_learning_dimension(P2).value


def test_bld_window():
    P = make_class([(0, 0, 0), (0, 1, 1)])
    assert blind_learning_dimension(P, window=(1, 1)).value == 0
    assert blind_learning_dimension(P, window=(2, 3)).value == 1


def test_bld_empty_class_errors():
    with pytest.raises(QstreamError):
        blind_learning_dimension(PatternClass(AB, 2, ()))


def test_bld_witness_replay_matches_value():
    rng = random.Random(9)
    for _ in range(20):
        P = random_class(rng, max_L=5, max_P=8)
        w = blind_learning_dimension(P)
        assert worst_case_mistakes(w.to_strategy(), P, 0) == w.value


def test_weighted_one_center_branch_and_bound_agrees(monkeypatch):
    rng = random.Random(3)
    cases = []
    for _ in range(60):
        width = rng.randint(1, 8)
        n = rng.randint(1, 6)
        vectors = [rng.getrandbits(width) for _ in range(n)]
        weights = [rng.randint(0, 3) for _ in range(n)]
        cases.append((vectors, weights, width))
    expected = [_weighted_one_center(v, w, width) for v, w, width in cases]
    monkeypatch.setattr(blind_mod, "_EXHAUSTIVE_BITS", 0)
    got = [_weighted_one_center(v, w, width) for v, w, width in cases]
    for (ev, _), (gv, _) in zip(expected, got):
        assert ev == gv


# --- qld ----------------------------------------------------------------------------

def test_qld_singleton_any_budget_zero():
    P = make_class([(0, 1, 1, 0)])
    for Q in (0, 1, 3):
        assert qld(P, Q).value == 0


def test_qld_two_constants():
    P = make_class([(0, 0, 0, 0), (1, 1, 1, 1)])
    assert qld(P, 0).value == 2
    assert qld(P, 1).value == 1


def test_qld_free_labels_one_query_saves_nothing():
    P = make_class([(0, 0), (0, 1), (1, 0), (1, 1)])
    assert qld(P, 1).value == 2


def test_qld_zero_budget_equals_bld():
    rng = random.Random(11)
    for _ in range(25):
        P = random_class(rng, max_L=5, max_P=10)
        assert qld(P, 0).value == blind_learning_dimension(P).value


def test_qld_monotone_in_budget():
    rng = random.Random(13)
    for _ in range(20):
        P = random_class(rng, max_L=5, max_P=8)
        values = [qld(P, Q).value for Q in range(4)]
        assert all(a >= b for a, b in zip(values, values[1:]))


def test_qld_monotone_in_class_exhaustive_single_instance():
    # all subset pairs of the full single-instance class family at L = 2
    from itertools import combinations

    vectors = list(product((0, 1), repeat=2))
    classes = []
    for k in range(1, 5):
        for combo in combinations(vectors, k):
            classes.append((frozenset(combo), make_class(list(combo))))
    for Q in (0, 1, 2):
        values = {ids: qld(P, Q).value for ids, P in classes}
        for small, _ in classes:
            for big, _ in classes:
                if small <= big:
                    assert values[small] <= values[big]


def test_qld_monotone_in_class_random():
    rng = random.Random(17)
    for _ in range(15):
        P = random_class(rng, max_L=4, max_P=8)
        if len(P.patterns) < 2:
            continue
        sub = PatternClass(P.space, P.horizon, P.patterns[:-1])
        for Q in (0, 1, 2):
            assert qld(sub, Q).value <= qld(P, Q).value


def test_qld_budget_saturates_past_horizon():
    P = make_class([(0, 1), (1, 0), (1, 1)])
    assert qld(P, 5).value == qld(P, 2).value


def test_qld_value_within_range():
    rng = random.Random(19)
    for _ in range(15):
        P = random_class(rng, max_L=5, max_P=10)
        for Q in (0, 1, 2):
            assert 0 <= qld(P, Q).value <= P.horizon


def test_qld_empty_class_errors():
    with pytest.raises(QstreamError):
        qld(PatternClass(AB, 2, ()), 1)


# --- oracle agreement ----------------------------------------------------------------

def test_game_value_equals_qld_on_known_cases():
    P = make_class([(0, 0, 0, 0), (1, 1, 1, 1)])
    for Q in (0, 1, 2):
        assert game_value(P, Q) == qld(P, Q).value


def test_game_value_monotone_in_budget():
    P = make_class([(0, 1, 1), (1, 0, 1), (0, 0, 0)])
    assert game_value(P, 2) <= game_value(P, 1) <= game_value(P, 0)


def test_oracle_equality_random():
    rng = random.Random(23)
    for _ in range(40):
        P = random_class(rng, max_L=5, max_P=8)
        for Q in (0, 1, 2):
            assert qld(P, Q).value == game_value(P, Q)


def test_oracle_equality_on_instance_order_sensitive_class():
    # the class where collapsing accrued mistakes understates the optimum
    labels = [(1, 0, 0, 1), (0, 0, 0, 0), (0, 1, 1, 1), (1, 0, 0, 1), (1, 0, 1, 1), (1, 0, 1, 1)]
    insts = [("a", "a", "a", "b"), ("a", "b", "a", "b"), ("a", "a", "b", "b"),
             ("b", "a", "a", "b"), ("b", "b", "a", "a"), ("a", "b", "a", "b")]
    P = make_class(labels, insts)
    assert qld(P, 1).value == game_value(P, 1) == 2


# --- strategies -----------------------------------------------------------------------

def test_bp_soa_singleton_never_errs():
    P = make_class([(0, 1, 0)])
    assert worst_case_mistakes(bp_soa_strategy(P, 2), P, 2) == 0


def test_bp_soa_two_constants_queries_first_round():
    P = make_class([(0, 0, 0, 0), (1, 1, 1, 1)])
    strat = bp_soa_strategy(P, 1)
    pred, wants = strat.predict(1)
    assert wants is True
    strat.observe(1, "a", 1)
    assert strat.predict(2) == (1, False)
    assert strat.predict(3) == (1, False)
    assert worst_case_mistakes(strat, P, 1) == 1


def test_bp_soa_within_qld_bound_random():
    rng = random.Random(29)
    for _ in range(30):
        P = random_class(rng, max_L=5, max_P=8)
        for Q in (0, 1, 2):
            w = qld(P, Q)
            assert worst_case_mistakes(w.to_strategy(), P, Q) <= w.value


def test_worst_case_all_zeros_counts_disagreements():
    P = make_class([(1, 1, 1)])
    assert worst_case_mistakes(ConstantVectorStrategy((0, 0, 0)), P, 0) == 3


def test_worst_case_budget_violation():
    class Greedy(BlindStrategy):
        budget = 5

        def reset(self):
            pass

        def predict(self, t):
            return 0, True

        def observe(self, t, x, y):
            pass

    P = make_class([(0, 0, 0)])
    with pytest.raises(BudgetViolationError):
        worst_case_mistakes(Greedy(), P, 1)


def test_witness_tree_shape():
    P = make_class([(0, 0, 0, 0), (1, 1, 1, 1)])
    doc = qld(P, 1).to_json()
    tree = doc["witness"]["tree"]
    assert tree["time"] == 1
    assert set(tree["children"]) == {"0", "1"}
    assert tree["children"]["0"]["blind"] == [0, 0, 0]
    assert tree["children"]["1"]["blind"] == [1, 1, 1]


def test_witness_replay_reproduces_value_exactly():
    rng = random.Random(31)
    for _ in range(25):
        P = random_class(rng, max_L=5, max_P=8)
        for Q in (0, 1, 2):
            w = qld(P, Q)
            assert worst_case_mistakes(w.to_strategy(), P, Q) == w.value


def test_witness_trees_satisfy_query_tree_invariants():
    from qstream.blind import validate_witness_tree

    rng = random.Random(37)
    for _ in range(20):
        P = random_class(rng, max_L=5, max_P=8)
        for Q in (0, 1, 2):
            doc = qld(P, Q).witness
            assert validate_witness_tree(doc["tree"], Q, P.horizon) == []
    bad = {"time": 2, "interim": [0, 0], "predict": 0,
           "children": {"0": {"blind": [], "unused_budget": 0},
                        "1": {"blind": [], "unused_budget": 0}}}
    assert validate_witness_tree(bad, 1, 4) != []  # interim length is wrong


def test_strategy_records_observation_history():
    P = make_class([(0, 0, 0, 0), (1, 1, 1, 1)])
    strat = bp_soa_strategy(P, 1)
    assert worst_case_mistakes(strat, P, 1) == 1
    assert len(strat.history) == 1 and strat.history[0][0] == 1
    strat.reset()
    assert strat.history == ()
