"""
Interior, closure and frontier operators on node sets.

    clo(X) = {x : Γ(x) ∩ X ≠ ∅}        int(X) = {x : Γ(x) ⊆ X}

Sets are finite or cofinite. On infinite networks a cofinite set is handled
through the complement identities clo(X)ᶜ = int(Xᶜ) and int(X)ᶜ = clo(Xᶜ).
On windows the one-ring outside the region is read from the boundary policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, FrozenSet, Iterable, List, Tuple, Union

from .errors import NotBipartite, SpecError
from .models import NodeId, sort_nodes
from .network import Network, Window, bfs_distances


@dataclass(frozen=True)
class NodeSet:
    """A finite set (members) or a cofinite set (members = the finite complement)."""

    members: FrozenSet[NodeId] = frozenset()
    cofinite: bool = False

    @classmethod
    def of(cls, nodes: Iterable[NodeId] = ()) -> "NodeSet":
        return cls(frozenset(nodes), False)

    @classmethod
    def all_but(cls, nodes: Iterable[NodeId] = ()) -> "NodeSet":
        return cls(frozenset(nodes), True)

    @classmethod
    def empty(cls) -> "NodeSet":
        return cls()

    @classmethod
    def full(cls) -> "NodeSet":
        return cls(frozenset(), True)

    def contains(self, x: NodeId) -> bool:
        return (x in self.members) != self.cofinite

    __contains__ = contains

    @property
    def is_finite(self) -> bool:
        return not self.cofinite

    def __invert__(self) -> "NodeSet":
        return NodeSet(self.members, not self.cofinite)

    def __and__(self, other: "NodeSet") -> "NodeSet":
        if not self.cofinite and not other.cofinite:
            return NodeSet(self.members & other.members)
        if not self.cofinite:
            return NodeSet(self.members - other.members)
        if not other.cofinite:
            return NodeSet(other.members - self.members)
        return NodeSet(self.members | other.members, True)

    def __or__(self, other: "NodeSet") -> "NodeSet":
        return ~(~self & ~other)

    def __sub__(self, other: "NodeSet") -> "NodeSet":
        return self & ~other

    def issubset(self, other: "NodeSet") -> bool:
        diff = self - other
        return diff.is_finite and not diff.members

    def __len__(self) -> int:
        if self.cofinite:
            raise SpecError("a cofinite set has no finite size")
        return len(self.members)

    def sorted(self) -> List[NodeId]:
        return sort_nodes(self.members)

    def canonical(self) -> Tuple[bool, Tuple[NodeId, ...]]:
        return (self.cofinite, tuple(self.sorted()))


class ParityBlock(int, Enum):
    """One whole block of the canonical bipartition of an infinite network."""

    EVEN = 0
    ODD = 1


SetLike = Union[NodeSet, ParityBlock]


def materialize(net: Network, X: NodeSet) -> NodeSet:
    """Finite form of X on a finite network (cofinite sets become complements in the universe)."""
    if not net.is_finite or not X.cofinite:
        return X
    return NodeSet.of(x for x in net.nodes() if x not in X.members)


def membership(net: Network, X: NodeSet, step: int = 0) -> Callable[[NodeId], bool]:
    """Predicate y -> y ∈ X, resolving out-of-region nodes on windows by the boundary policy."""
    if isinstance(net, Window):
        inside = X.contains
        region = net.region

        def member(y: NodeId) -> bool:
            if y in region:
                return inside(y)
            return net.outside_status(y, inside, step)

        return member
    return X.contains


def _scan(net: Network, X: NodeSet, keep: Callable[[List[bool]], bool], step: int) -> NodeSet:
    member = membership(net, X, step)
    return NodeSet.of(x for x in net.nodes() if keep([member(y) for y in net.full_neighbors(x)]))


def closure(net: Network, X: SetLike, step: int = 0) -> SetLike:
    if isinstance(X, ParityBlock):
        return _block_image(net, X)
    if net.is_finite:
        return _scan(net, X, any, step)
    if X.cofinite:
        return ~interior(net, ~X)
    out = set()
    for x in X.members:
        out.update(net.neighbors(x))
    return NodeSet.of(out)


def interior(net: Network, X: SetLike, step: int = 0) -> SetLike:
    if isinstance(X, ParityBlock):
        return _block_image(net, X)
    if net.is_finite:
        return _scan(net, X, all, step)
    if X.cofinite:
        return ~closure(net, ~X)
    candidates = closure(net, X).members
    return NodeSet.of(x for x in candidates if all(y in X.members for y in net.neighbors(x)))


def _block_image(net: Network, block: ParityBlock) -> ParityBlock:
    # On a bipartite network every neighborhood lies in the opposite block.
    if not net.bipartite:
        raise NotBipartite(f"{net.name} has no bipartition blocks")
    return ParityBlock(1 - block)


def iterate(op: Callable, n: int, net: Network, X: SetLike, step: int = 0) -> SetLike:
    """n-fold composition of interior or closure; n = 0 is the identity."""
    if n < 0:
        raise SpecError("iteration count must be nonnegative")
    for k in range(n):
        X = op(net, X, step + k)
    return X


def frontier(net: Network, X: NodeSet, step: int = 0) -> Tuple[NodeSet, NodeSet]:
    """(inner, outer) frontier: ∂X ∩ X and ∂X ∩ Xᶜ with ∂X = clo(X) \\ int(X)."""
    X = materialize(net, X)
    boundary = closure(net, X, step) - interior(net, X, step)
    return boundary & X, boundary - X


def ball(net: Network, center: NodeId, radius: int) -> NodeSet:
    return NodeSet.of(bfs_distances(net, center, radius))


class DeterministicClass(str, Enum):
    FIXED_POINT_UNIVERSAL = "FixedPointUniversal"
    TWO_CYCLE_PAIR = "TwoCyclePair"
    NEITHER = "Neither"


def deterministic_class(net: Network, X: SetLike, step: int = 0) -> DeterministicClass:
    """Fixed points of int/clo are ∅ and the universe; 2-cycles are bipartition blocks."""
    if isinstance(X, ParityBlock):
        return DeterministicClass.TWO_CYCLE_PAIR if net.bipartite else DeterministicClass.NEITHER
    X = materialize(net, X)
    inner = materialize(net, interior(net, X, step))
    outer = materialize(net, closure(net, X, step))
    if inner != outer:
        return DeterministicClass.NEITHER
    if inner == X:
        return DeterministicClass.FIXED_POINT_UNIVERSAL
    if inner == materialize(net, ~X):
        return DeterministicClass.TWO_CYCLE_PAIR
    return DeterministicClass.NEITHER
