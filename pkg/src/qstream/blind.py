"""Exact solvers for query-budgeted blind prediction over pattern classes.

The learner predicts at every round seeing only the clock and its past query
results; the adversary must stay realizable with respect to the pattern
class.  ``qld`` computes the optimal worst-case mistake count for a budget of
Q queries by backward induction over information sets; ``game_value`` is a
deliberately naive second implementation of the same game used as an
independent oracle; ``bp_soa_strategy`` turns the solve into a playable
strategy whose worst-case replay meets the computed value exactly.

An information set is the set of patterns consistent with the observations
so far, each carrying the mistakes the learner has already accrued against
it.  Carrying the accrued counts is essential: the learner's committed
predictions couple past and future, and collapsing states to bare pattern
subsets understates the optimum on some two-instance classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Mapping

from .model import (
    BudgetViolationError,
    Label,
    LabelVector,
    PatternClass,
    QstreamError,
)

# Exhaustive candidate sweep up to this window width; branch and bound beyond.
_EXHAUSTIVE_BITS = 20

# state: tuple of (pattern id, accrued mistakes), sorted by pattern id
State = tuple[tuple[int, int], ...]


def restrict_patterns(
    P: PatternClass,
    label_constraints: Mapping[int, Label] | None = None,
    instance_constraints: Mapping[int, str] | None = None,
) -> PatternClass:
    """Patterns consistent with partial time->label / time->instance maps.

    A missing instance constraint is the wildcard.  The result may be empty;
    emptiness is a value here, not an error.
    """
    labels = dict(label_constraints or {})
    insts = dict(instance_constraints or {})
    for t in list(labels) + list(insts):
        if not 1 <= t <= P.horizon:
            raise ValueError(f"constraint time {t} outside [1, {P.horizon}]")
    keep = tuple(
        p
        for p in P.patterns
        if all(p.steps[t - 1][1] == y for t, y in labels.items())
        and all(p.steps[t - 1][0] == x for t, x in insts.items())
    )
    return PatternClass(P.space, P.horizon, keep)


def _bits_to_int(bits: tuple[int, ...]) -> int:
    """Big-endian pack, so ascending ints = lexicographically ascending bits."""
    out = 0
    for b in bits:
        out = (out << 1) | b
    return out


def _int_to_bits(value: int, width: int) -> tuple[int, ...]:
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


def _weighted_one_center(vectors: list[int], weights: list[int], width: int) -> tuple[int, int]:
    """Minimize over candidates c the max of weights[j] + H(c, vectors[j]).

    Returns (value, candidate) with the lexicographically smallest optimal
    candidate on the exhaustive path.  The branch-and-bound path (width >
    _EXHAUSTIVE_BITS) prunes on the running partial maximum, which only ever
    grows, so it is admissible.
    """
    if not vectors:
        return 0, 0
    if width <= _EXHAUSTIVE_BITS:
        best_val, best_cand = None, 0
        for cand in range(1 << width):
            worst = 0
            for v, w in zip(vectors, weights):
                d = w + ((cand ^ v).bit_count())
                if d > worst:
                    worst = d
            if best_val is None or worst < best_val:
                best_val, best_cand = worst, cand
        return best_val, best_cand

    best_val = max(weights) + width + 1
    best_cand = 0

    def descend(pos: int, prefix: int, dists: list[int]) -> None:
        nonlocal best_val, best_cand
        bound = max(w + d for w, d in zip(weights, dists))
        if bound >= best_val:
            return
        if pos == width:
            best_val, best_cand = bound, prefix
            return
        shift = width - 1 - pos
        for bit in (0, 1):
            nxt = [
                d + (((v >> shift) & 1) != bit)
                for v, d in zip(vectors, dists)
            ]
            descend(pos + 1, (prefix << 1) | bit, nxt)

    descend(0, 0, [0] * len(vectors))
    return best_val, best_cand


ObservationHistory = tuple[tuple[int, str, Label], ...]
"""Executed queries as (time, x, y) triples, strictly increasing in time."""


class BlindStrategy:
    """Blind-prediction player: per round, a prediction and a query decision.

    Drive it with ``predict(t)`` for t = 1, 2, ...; when it queries, feed the
    revealed pair back through ``observe(t, x, y)``.  ``reset`` rewinds to
    round one.  ``history`` holds the observations seen so far; it is the
    only stream information a blind player ever gets.
    """

    budget: int = 0

    def __init__(self) -> None:
        self.history: ObservationHistory = ()

    def reset(self) -> None:
        self.history = ()

    def predict(self, t: int) -> tuple[Label, bool]:
        raise NotImplementedError

    def observe(self, t: int, x: str, y: Label) -> None:
        if self.history and self.history[-1][0] >= t:
            raise QstreamError("observation times must strictly increase")
        if len(self.history) >= self.budget:
            raise BudgetViolationError(f"observation beyond budget {self.budget}")
        self.history = self.history + ((t, x, y),)


class ConstantVectorStrategy(BlindStrategy):
    """Never queries; plays a fixed prediction vector (0 past its end)."""

    def __init__(self, vector: LabelVector):
        super().__init__()
        self.vector = tuple(vector)
        self.budget = 0

    def predict(self, t: int) -> tuple[Label, bool]:
        return (self.vector[t - 1] if t <= len(self.vector) else 0), False


@dataclass
class DimensionWitness:
    """A solved value plus a replayable certificate achieving it.

    ``witness`` is the serializable form: the optimal prediction vector for
    the blind case, or the optimal query tree (timestamps, per-gap interim
    vectors, query-round predictions, blind suffixes) for the budgeted case.
    """

    value: int
    witness: dict
    _factory: Callable[[], BlindStrategy] = field(repr=False, compare=False)

    def to_strategy(self) -> BlindStrategy:
        return self._factory()

    def to_json(self) -> dict:
        return {"value": self.value, "witness": self.witness}


def blind_learning_dimension(
    P: PatternClass, window: tuple[int, int] | None = None
) -> DimensionWitness:
    """Exact min over prediction vectors of worst-case Hamming distance.

    ``window`` is an inclusive round range (lo, hi); default is the full
    horizon.  The value depends only on the distinct label projections.
    """
    if P.is_empty:
        raise QstreamError("blind learning dimension of an empty pattern class")
    lo, hi = window if window is not None else (1, P.horizon)
    if not (1 <= lo and hi <= P.horizon):
        raise ValueError(f"window ({lo}, {hi}) outside [1, {P.horizon}]")
    width = max(0, hi - lo + 1)
    vecs = sorted({_bits_to_int(p.labels[lo - 1 : hi]) for p in P.patterns})
    value, cand = _weighted_one_center(vecs, [0] * len(vecs), width)
    prediction = _int_to_bits(cand, width)
    return DimensionWitness(
        value=value,
        witness={"kind": "bld", "window": [lo, hi], "prediction": list(prediction)},
        _factory=lambda: ConstantVectorStrategy(prediction),
    )


@dataclass(frozen=True)
class _Plan:
    """One stage of play: next query time (None = go blind) plus vectors."""

    time: int | None
    interim: tuple[int, ...]  # rounds t_prev+1 .. time-1, or the blind suffix
    predict: Label | None  # committed prediction for the query round


class QldSolver:
    """Backward-induction solver over information sets of one pattern class.

    Values and stage plans are memoized on (accrued-normalized state, queries
    left, last query time); the subtracted minimum accrual is added back, so
    states differing by a constant share one entry.
    """

    def __init__(self, P: PatternClass):
        violations = [v for v in _pattern_class_problems(P)]
        if violations:
            raise QstreamError("; ".join(violations))
        self.P = P
        self.L = P.horizon
        self.labels = [p.labels for p in P.patterns]
        self.insts = [p.instances for p in P.patterns]
        self._memo: dict[tuple[State, int, int], tuple[int, _Plan]] = {}

    def initial_state(self) -> State:
        return tuple((i, 0) for i in range(len(self.labels)))

    # -- state plumbing ----------------------------------------------------

    def _canonical(self, state: State, t_prev: int) -> tuple[State, int]:
        """Merge future-identical patterns (max accrual wins), shift to 0."""
        merged: dict[tuple, int] = {}
        rep: dict[tuple, int] = {}
        for pid, acc in state:
            tail = (self.insts[pid][t_prev:], self.labels[pid][t_prev:])
            if tail not in merged or acc > merged[tail]:
                merged[tail] = acc
                rep[tail] = pid
            elif acc == merged[tail]:
                rep[tail] = min(rep[tail], pid)
        offset = min(merged.values())
        canon = tuple(sorted((rep[tail], acc - offset) for tail, acc in merged.items()))
        return canon, offset

    def advance(
        self, state: State, plan: _Plan, t: int, x: str, y: Label
    ) -> State:
        """Fold one observed query into the information set."""
        assert plan.time == t and plan.predict is not None
        out = []
        for pid, acc in state:
            if self.insts[pid][t - 1] != x or self.labels[pid][t - 1] != y:
                continue
            gap = self.labels[pid][t - len(plan.interim) - 1 : t - 1]
            acc += sum(a != b for a, b in zip(plan.interim, gap))
            acc += plan.predict != y
            out.append((pid, acc))
        return tuple(out)

    # -- the recursion -----------------------------------------------------

    def solve(self, state: State, q_left: int, t_prev: int) -> tuple[int, _Plan]:
        if not state:
            raise QstreamError("solve on an empty information set")
        canon, offset = self._canonical(state, t_prev)
        key = (canon, q_left, t_prev)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._solve_canonical(canon, q_left, t_prev)
            self._memo[key] = hit
        value, plan = hit
        return value + offset, plan

    def _blind(self, state: State, t_prev: int) -> tuple[int, _Plan]:
        width = self.L - t_prev
        vecs = [_bits_to_int(self.labels[pid][t_prev:]) for pid, _ in state]
        weights = [acc for _, acc in state]
        value, cand = _weighted_one_center(vecs, weights, width)
        return value, _Plan(None, _int_to_bits(cand, width), None)

    def _solve_canonical(self, state: State, q_left: int, t_prev: int) -> tuple[int, _Plan]:
        blind_val, blind_plan = self._blind(state, t_prev)
        if q_left == 0 or t_prev == self.L:
            return blind_val, blind_plan

        best_val: int | None = None
        best_plan = blind_plan
        for t in range(t_prev + 1, self.L + 1):
            gap_len = t - t_prev - 1
            gaps = {
                pid: _bits_to_int(self.labels[pid][t_prev : t - 1]) for pid, _ in state
            }
            branches: dict[tuple[str, Label], list[tuple[int, int]]] = {}
            for pid, acc in state:
                obs = (self.insts[pid][t - 1], self.labels[pid][t - 1])
                branches.setdefault(obs, []).append((pid, acc))
            branch_items = sorted(branches.items())
            for yh in range(1 << gap_len):
                for r in (0, 1):
                    cutoff = blind_val if best_val is None else min(best_val, blind_val)
                    worst = 0
                    feasible = True
                    for (x, b), members in branch_items:
                        child = tuple(
                            sorted(
                                (pid, acc + ((yh ^ gaps[pid]).bit_count()) + (r != b))
                                for pid, acc in members
                            )
                        )
                        value, _ = self.solve(child, q_left - 1, t)
                        if value > worst:
                            worst = value
                        if worst > cutoff:
                            feasible = False
                            break
                    if feasible and (best_val is None or worst < best_val):
                        best_val = worst
                        best_plan = _Plan(t, _int_to_bits(yh, gap_len), r)
        assert best_val is not None  # the t = L plan always reproduces blind_val
        return best_val, best_plan

    # -- witness serialization ----------------------------------------------

    def witness_tree(self, state: State, q_left: int, t_prev: int) -> dict:
        """Adversary-canonical query tree: per label edge, the worst branch."""
        value, plan = self.solve(state, q_left, t_prev)
        if plan.time is None:
            return {
                "blind": list(plan.interim),
                "start_after": t_prev,
                "unused_budget": q_left,
            }
        t = plan.time
        children: dict[str, dict] = {}
        for b in (0, 1):
            options = []
            for pid, acc in state:
                if self.labels[pid][t - 1] != b:
                    continue
                x = self.insts[pid][t - 1]
                options.append(x)
            picked = None
            best = None
            for x in sorted(set(options)):
                child = self.advance(state, plan, t, x, b)
                cv, _ = self.solve(child, q_left - 1, t)
                if best is None or cv > best:
                    best, picked = cv, child
            if picked is None:
                children[str(b)] = {"unreachable": True, "unused_budget": q_left - 1}
            else:
                children[str(b)] = self.witness_tree(picked, q_left - 1, t)
        return {
            "time": t,
            "interim": list(plan.interim),
            "predict": plan.predict,
            "children": children,
        }


class TreeReplanStrategy(BlindStrategy):
    """Minimax play from a solver: replan at every observation.

    Between queries it plays the solved interim vector; at the query round
    it plays the committed prediction (the larger-subtree label, ties to 0)
    and queries; the observation advances the information set and the next
    stage plan comes from the shared memo.
    """

    def __init__(self, solver: QldSolver, budget: int):
        super().__init__()
        self.solver = solver
        self.budget = budget
        self.reset()

    def reset(self) -> None:
        super().reset()
        self.state = self.solver.initial_state()
        self.q_left = self.budget
        self.t_prev = 0
        _, self.plan = self.solver.solve(self.state, self.q_left, 0)

    def predict(self, t: int) -> tuple[Label, bool]:
        plan = self.plan
        if plan.time is not None and t == plan.time:
            return plan.predict, True
        idx = t - self.t_prev - 1
        if 0 <= idx < len(plan.interim):
            return plan.interim[idx], False
        return 0, False

    def observe(self, t: int, x: str, y: Label) -> None:
        if self.plan.time != t:
            raise QstreamError(f"observation at {t} does not match plan {self.plan.time}")
        super().observe(t, x, y)
        nxt = self.solver.advance(self.state, self.plan, t, x, y)
        if not nxt:
            raise QstreamError("observation inconsistent with the pattern class")
        self.state = nxt
        self.q_left -= 1
        self.t_prev = t
        _, self.plan = self.solver.solve(self.state, self.q_left, t)


def _pattern_class_problems(P: PatternClass) -> list[str]:
    out = []
    if P.is_empty:
        out.append("pattern class is empty")
    for i, p in enumerate(P.patterns):
        if len(p) != P.horizon:
            out.append(f"pattern {i} has length {len(p)}, horizon {P.horizon}")
    return out


def qld(P: PatternClass, Q: int) -> DimensionWitness:
    """Optimal worst-case mistakes for budget Q, with a replayable witness.

    Ties break toward the smaller query timestamp, then the lexicographically
    smaller interim vector, then prediction 0.
    """
    if Q < 0:
        raise ValueError(f"query budget must be >= 0, got {Q}")
    solver = QldSolver(P)
    state = solver.initial_state()
    value, _ = solver.solve(state, Q, 0)
    tree = solver.witness_tree(state, Q, 0)
    return DimensionWitness(
        value=value,
        witness={"kind": "qld", "budget": Q, "tree": tree},
        _factory=lambda: TreeReplanStrategy(solver, Q),
    )


def bp_soa_strategy(P: PatternClass, Q: int) -> BlindStrategy:
    """The optimal budgeted blind player behind ``qld``'s witness."""
    return qld(P, Q).to_strategy()


def validate_witness_tree(tree: dict, Q: int, horizon: int) -> list[str]:
    """Query-tree invariants: strictly increasing node timestamps, 0/1 edges,
    and Q query nodes per root-to-leaf path (unused budget is recorded at
    leaves when the horizon runs out first)."""
    out: list[str] = []

    def walk(node: dict, t_prev: int, used: int, path: str) -> None:
        if "time" not in node:
            unused = node.get("unused_budget", 0)
            if used + unused != Q:
                out.append(
                    f"path {path or 'root'}: {used} query nodes + {unused} unused != {Q}"
                )
            if not node.get("unreachable") and "blind" not in node:
                out.append(f"path {path or 'root'}: leaf carries no suffix vector")
            return
        t = node["time"]
        if not (t_prev < t <= horizon):
            out.append(f"path {path or 'root'}: timestamp {t} not in ({t_prev}, {horizon}]")
        gap = t - t_prev - 1
        if len(node.get("interim", ())) != gap:
            out.append(f"path {path or 'root'}: interim length != {gap}")
        children = node.get("children", {})
        if set(children) != {"0", "1"}:
            out.append(f"path {path or 'root'}: edges are not exactly 0 and 1")
        for edge, child in sorted(children.items()):
            walk(child, t, used + 1, path + edge)

    walk(tree, 0, 0, "")
    return out


def worst_case_mistakes(strategy: BlindStrategy, P: PatternClass, Q: int) -> int:
    """Exhaustive worst case of a strategy over every pattern in the class.

    Replays the full protocol per pattern: predict, reveal, then observe on
    query rounds.  Raises BudgetViolationError if the strategy exceeds Q.
    """
    if P.is_empty:
        raise QstreamError("worst case over an empty pattern class")
    worst = 0
    for p in P.patterns:
        strategy.reset()
        queries = 0
        mistakes = 0
        for t in range(1, P.horizon + 1):
            pred, wants_query = strategy.predict(t)
            if wants_query:
                queries += 1
                if queries > Q:
                    raise BudgetViolationError(
                        f"strategy used {queries} queries with budget {Q}"
                    )
            mistakes += pred != p.labels[t - 1]
            if wants_query:
                strategy.observe(t, p.steps[t - 1][0], p.labels[t - 1])
        worst = max(worst, mistakes)
    return worst


def game_value(P: PatternClass, Q: int) -> int:
    """Independent minimax oracle for the same game as ``qld``.

    Kept deliberately naive: per-pattern loops over tuple vectors, an
    explicit never-query-again option at every stage, the query-round
    mistake as a bare indicator term, and no stage pruning or grouping
    shortcuts.  Only the accrual-offset normalization is shared, since it is
    a transparent identity.
    """
    if P.is_empty:
        raise QstreamError("game value of an empty pattern class")
    if Q < 0:
        raise ValueError(f"query budget must be >= 0, got {Q}")
    L = P.horizon
    labels = [p.labels for p in P.patterns]
    insts = [p.instances for p in P.patterns]
    memo: dict[tuple[State, int, int], int] = {}

    def suffix_best(state: State, t_prev: int) -> int:
        best = None
        for cand in product((0, 1), repeat=L - t_prev):
            worst = 0
            for pid, acc in state:
                d = acc + sum(a != b for a, b in zip(cand, labels[pid][t_prev:]))
                worst = max(worst, d)
            if best is None or worst < best:
                best = worst
        return best

    def value(state: State, q_left: int, t_prev: int) -> int:
        offset = min(acc for _, acc in state)
        state = tuple((pid, acc - offset) for pid, acc in state)
        key = (state, q_left, t_prev)
        if key in memo:
            return memo[key] + offset
        best = suffix_best(state, t_prev)
        if q_left > 0:
            for t in range(t_prev + 1, L + 1):
                for yh in product((0, 1), repeat=t - t_prev - 1):
                    for r in (0, 1):
                        branches: dict[tuple[str, Label], list[tuple[int, int]]] = {}
                        for pid, acc in state:
                            acc2 = (
                                acc
                                + sum(a != b for a, b in zip(yh, labels[pid][t_prev : t - 1]))
                                + (r != labels[pid][t - 1])
                            )
                            obs = (insts[pid][t - 1], labels[pid][t - 1])
                            branches.setdefault(obs, []).append((pid, acc2))
                        worst = max(
                            value(tuple(sorted(br)), q_left - 1, t)
                            for br in branches.values()
                        )
                        if worst < best:
                            best = worst
        memo[key] = best
        return best + offset

    return value(tuple((i, 0) for i in range(len(labels))), Q, 0)
