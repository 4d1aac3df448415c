"""Littlestone dimension, shattered trees, and the standard optimal predictor.

The dimension recursion is memoized on canonical concept-index subsets of a
fixed root class, so exhaustive property sweeps over all subsets stay cheap.
Classes here are small by design; clarity beats asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import ConceptClass, Label, NonRealizableError, QstreamError


@dataclass(frozen=True)
class ShatteredTree:
    """Perfect binary mistake tree; a leaf is represented by None children.

    Each node names the instance queried at that level; the 0-edge goes left,
    the 1-edge right.  Every root-to-leaf path must be realizable in the
    class the tree was built from.
    """

    x: str
    left: "ShatteredTree | None"
    right: "ShatteredTree | None"

    @property
    def depth(self) -> int:
        return 1 + (self.left.depth if self.left is not None else 0)

    def to_json(self) -> dict:
        return {
            "x": self.x,
            "left": self.left.to_json() if self.left is not None else None,
            "right": self.right.to_json() if self.right is not None else None,
        }

    def paths(self) -> list[tuple[tuple[str, Label], ...]]:
        """All root-to-leaf (instance, edge-label) sequences."""
        out = []
        for b, child in ((0, self.left), (1, self.right)):
            if child is None:
                out.append(((self.x, b),))
            else:
                out.extend(((self.x, b),) + tail for tail in child.paths())
        return out


def restrict(H: ConceptClass, x: str, y: Label) -> ConceptClass:
    """Concepts of H consistent with (x, y).  The result may be empty."""
    xi = H.space.index_of(x)
    keep = [i for i, c in enumerate(H.concepts) if c[xi] == y]
    return ConceptClass(
        H.space,
        tuple(H.concepts[i] for i in keep),
        tuple(H.names[i] for i in keep),
    )


class LittlestoneSolver:
    """Dimension queries over subsets of one root class, with shared memo."""

    def __init__(self, root: ConceptClass):
        if root.is_empty:
            raise QstreamError("Littlestone dimension of an empty class")
        self.root = root
        self.n_instances = len(root.space.instances)
        self._memo: dict[frozenset[int], int] = {}

    def full(self) -> frozenset[int]:
        return frozenset(range(len(self.root.concepts)))

    def restrict_ids(self, ids: frozenset[int], xi: int, y: Label) -> frozenset[int]:
        return frozenset(i for i in ids if self.root.concepts[i][xi] == y)

    def dimension(self, ids: frozenset[int] | None = None) -> int:
        ids = self.full() if ids is None else ids
        if not ids:
            raise QstreamError("Littlestone dimension of an empty class")
        cached = self._memo.get(ids)
        if cached is not None:
            return cached
        best = 0
        if len(ids) > 1:
            for xi in range(self.n_instances):
                zeros = self.restrict_ids(ids, xi, 0)
                ones = ids - zeros
                if zeros and ones:
                    score = 1 + min(self.dimension(zeros), self.dimension(ones))
                    if score > best:
                        best = score
        self._memo[ids] = best
        return best


def littlestone_dimension(H: ConceptClass) -> int:
    """LD(H): depth of the deepest shattered mistake tree of H."""
    return LittlestoneSolver(H).dimension()


def build_littlestone_tree(H: ConceptClass, d: int) -> ShatteredTree | None:
    """Build a depth-d shattered tree for H, or None if LD(H) < d.

    Node instances are chosen smallest-first in space order, so equal inputs
    build equal trees.
    """
    if d <= 0:
        raise ValueError(f"tree depth must be positive, got {d}")
    solver = LittlestoneSolver(H)

    def grow(ids: frozenset[int], depth: int) -> ShatteredTree | None:
        for xi in range(solver.n_instances):
            zeros = solver.restrict_ids(ids, xi, 0)
            ones = ids - zeros
            if not (zeros and ones):
                continue
            if depth == 1:
                return ShatteredTree(H.space.instances[xi], None, None)
            if min(solver.dimension(zeros), solver.dimension(ones)) >= depth - 1:
                left = grow(zeros, depth - 1)
                right = grow(ones, depth - 1)
                assert left is not None and right is not None
                return ShatteredTree(H.space.instances[xi], left, right)
        return None

    return grow(solver.full(), d)


class VersionSpace:
    """Surviving concepts during a run, sharing one dimension memo table."""

    def __init__(self, source: ConceptClass | "VersionSpace", ids: frozenset[int] | None = None):
        if isinstance(source, VersionSpace):
            self.solver = source.solver
            self.ids = source.ids if ids is None else ids
        else:
            self.solver = LittlestoneSolver(source)
            self.ids = self.solver.full() if ids is None else ids

    @property
    def is_empty(self) -> bool:
        return not self.ids

    def __len__(self) -> int:
        return len(self.ids)

    def dimension(self) -> int:
        return self.solver.dimension(self.ids)

    def restrict(self, x: str, y: Label) -> "VersionSpace":
        xi = self.solver.root.space.index_of(x)
        return VersionSpace(self, self.solver.restrict_ids(self.ids, xi, y))

    def concept_class(self) -> ConceptClass:
        root = self.solver.root
        keep = sorted(self.ids)
        return ConceptClass(
            root.space,
            tuple(root.concepts[i] for i in keep),
            tuple(root.names[i] for i in keep),
        )


def soa_predict(V: VersionSpace | ConceptClass, x: str) -> Label:
    """Predict the label whose consistent restriction has larger dimension.

    An empty restriction scores -1 so consistent labels always win; ties
    break toward label 0.
    """
    if isinstance(V, ConceptClass):
        V = VersionSpace(V)
    if V.is_empty:
        raise QstreamError("SOA prediction from an empty version space")
    xi = V.solver.root.space.index_of(x)
    scores = []
    for y in (0, 1):
        ids = V.solver.restrict_ids(V.ids, xi, y)
        scores.append(V.solver.dimension(ids) if ids else -1)
    return 0 if scores[0] >= scores[1] else 1


def soa_run(
    H: ConceptClass, seq: Sequence[tuple[str, Label]]
) -> tuple[int, list[int], VersionSpace]:
    """Run the standard optimal algorithm over a labeled sequence.

    Returns (mistake count, 0-based mistake indices, final version space).
    Raises NonRealizableError at the first step where no concept survives.
    """
    V = VersionSpace(H)
    mistakes: list[int] = []
    for i, (x, y) in enumerate(seq):
        if soa_predict(V, x) != y:
            mistakes.append(i)
        V = V.restrict(x, y)
        if V.is_empty:
            raise NonRealizableError(f"sequence not realizable at step {i}: ({x!r}, {y})")
    return len(mistakes), mistakes, V
