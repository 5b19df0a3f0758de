"""
Structural prerequisites for reachability: complex stars, the caterpillar
characterization of star-free graphs, storing functions and richness checks.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
from pydantic import BaseModel, Field

from ..errors import BlocksMixed, SpecError
from ..models import (
    CaterpillarReport,
    NodeId,
    RichnessReport,
    SampleStorability,
    node_json,
    node_key,
    sort_nodes,
)
from ..network import Hierarchy, Network

logger = logging.getLogger("netdiff.reachability")

# Node budget for the non-injective storing search.
STORING_SEARCH_LIMIT = 200000


class ComplexStar(BaseModel):
    """A center with three branches of depth two: s_star - s_i - s_ip."""

    s_star: NodeId = Field(..., description="Center")
    s1: NodeId
    s2: NodeId
    s3: NodeId
    s1p: NodeId
    s2p: NodeId
    s3p: NodeId

    @property
    def branches(self) -> Tuple[NodeId, NodeId, NodeId]:
        return (self.s1, self.s2, self.s3)

    @property
    def tails(self) -> Tuple[NodeId, NodeId, NodeId]:
        return (self.s1p, self.s2p, self.s3p)

    @property
    def nodes(self) -> Tuple[NodeId, ...]:
        return (self.s_star,) + self.branches + self.tails

    @property
    def clean(self) -> bool:
        """All seven nodes distinct."""
        return len(set(self.nodes)) == 7

    def branch(self, i: int) -> NodeId:
        return self.branches[i - 1]

    def tail(self, i: int) -> NodeId:
        return self.tails[i - 1]

    def to_json(self) -> Dict[str, Any]:
        return {k: node_json(v) for k, v in self.model_dump().items()}


def is_complex_star(net: Network, star: ComplexStar) -> bool:
    around = set(net.neighbors(star.s_star))
    if len(set(star.branches)) != 3 or not set(star.branches) <= around:
        return False
    if star.s_star in star.tails:
        return False
    return all(t in net.neighbors(s) for s, t in zip(star.branches, star.tails))


def star_at(net: Network, center: NodeId, avoid: FrozenSet[NodeId] = frozenset(),
            clean: bool = True) -> Optional[ComplexStar]:
    """First star centered at ``center`` (branches in node order) avoiding ``avoid``."""
    if center in avoid:
        return None
    options = []
    for s in sort_nodes(net.neighbors(center)):
        if s in avoid:
            continue
        tails = [t for t in sort_nodes(net.neighbors(s)) if t != center and t not in avoid]
        if tails:
            options.append((s, tails))
    for combo in itertools.combinations(options, 3):
        branches = [s for s, _ in combo]
        for tails in itertools.product(*(t for _, t in combo)):
            used = {center, *branches, *tails}
            if clean and len(used) != 7:
                continue
            return ComplexStar(
                s_star=center, s1=branches[0], s2=branches[1], s3=branches[2],
                s1p=tails[0], s2p=tails[1], s3p=tails[2],
            )
    return None


def find_complex_stars(net: Network, cap: Optional[int] = 200) -> List[ComplexStar]:
    """At most one star per center, centers in node order, clean stars preferred."""
    stars: List[ComplexStar] = []
    for center in sort_nodes(net.nodes()):
        star = star_at(net, center) or star_at(net, center, clean=False)
        if star is not None:
            stars.append(star)
            if cap is not None and len(stars) >= cap:
                break
    logger.debug(f"Found {len(stars)} complex stars on {net.name}")
    return stars


def is_caterpillar(net: Network) -> CaterpillarReport:
    """Star-free form: the nodes of degree >= 2 induce a path or a cycle, the rest hang off it."""
    g: nx.Graph = net.graph()
    if g.number_of_nodes() <= 2:
        return CaterpillarReport(
            is_caterpillar=True,
            spine=[node_json(x) for x in sort_nodes(g.nodes)],
            spine_kind="trivial",
        )
    core = [x for x in g.nodes if g.degree(x) >= 2]
    spine_graph = g.subgraph(core)
    if max(dict(spine_graph.degree()).values(), default=0) > 2 or not nx.is_connected(spine_graph):
        return CaterpillarReport(is_caterpillar=False)
    if spine_graph.number_of_edges() == spine_graph.number_of_nodes() and len(core) >= 3:
        kind = "cycle"
        spine = [x for x, _ in nx.find_cycle(spine_graph, source=sort_nodes(core)[0])]
    else:
        kind = "path"
        ends = sort_nodes(x for x in core if spine_graph.degree(x) <= 1)
        spine = nx.shortest_path(spine_graph, ends[0], ends[-1]) if len(ends) > 1 else list(core)
    pendants: Dict[str, List[Any]] = {}
    for x in sort_nodes(set(g.nodes) - set(core)):
        (anchor,) = list(g.neighbors(x))
        pendants.setdefault(str(node_json(anchor)), []).append(node_json(x))
    return CaterpillarReport(
        is_caterpillar=True,
        spine=[node_json(x) for x in spine],
        spine_kind=kind,
        pendants=pendants,
    )


def is_k_regular(net: Network) -> Optional[int]:
    """Common degree of a finite network, or None."""
    degrees = {len(net.neighbors(x)) for x in net.nodes()}
    return degrees.pop() if len(degrees) == 1 else None


@dataclass
class StoringMap:
    theta: Dict[NodeId, NodeId] = field(default_factory=dict)
    method: str = "matching"

    def image(self, nodes: Iterable[NodeId]) -> List[NodeId]:
        return sort_nodes({self.theta[x] for x in nodes})

    def to_json(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "theta": [[node_json(x), node_json(y)] for x, y in sorted(self.theta.items(), key=lambda e: node_key(e[0]))],
        }


@dataclass
class StoringFailure:
    """No storing function: a Hall violator S with |Γ(S)| < |S| and the twin pairs found."""

    hall_set: List[NodeId] = field(default_factory=list)
    hall_neighbors: List[NodeId] = field(default_factory=list)
    twins: List[Tuple[NodeId, NodeId]] = field(default_factory=list)

    def to_json(self) -> Dict[str, Any]:
        return {
            "hall_set": [node_json(x) for x in self.hall_set],
            "hall_neighbors": [node_json(x) for x in self.hall_neighbors],
            "twins": [[node_json(x), node_json(y)] for x, y in self.twins],
        }


StoringResult = Union[StoringMap, StoringFailure]


def _check_blocks(net: Network, nodes: Sequence[NodeId]) -> None:
    if net.bipartite and len({net.parity(x) for x in nodes}) > 1:
        raise BlocksMixed("storing is defined per parity block; X ∪ Y spans both")


def _hall_violator(g: nx.Graph, left: List[Tuple], matching: Dict) -> Tuple[List[NodeId], List[NodeId]]:
    """Left vertices reachable by alternating paths from an unmatched left vertex, and their neighbors."""
    free = [u for u in left if u not in matching]
    if not free:
        return [], []
    seen_left = {free[0]}
    seen_right = set()
    queue = deque([free[0]])
    while queue:
        u = queue.popleft()
        for v in g.neighbors(u):
            if v in seen_right:
                continue
            seen_right.add(v)
            w = matching.get(v)
            if w is not None and w not in seen_left:
                seen_left.add(w)
                queue.append(w)
    return sort_nodes(u[1] for u in seen_left), sort_nodes(v[1] for v in seen_right)


def _separated_search(net: Network, X: List[NodeId], Y: List[NodeId]) -> Optional[Dict[NodeId, NodeId]]:
    """Backtracking search for θ with θ(X) ∩ θ(Y) = ∅ (not necessarily injective)."""
    status = {x: 1 for x in X}
    status.update({y: 0 for y in Y})
    options = {x: sort_nodes(net.neighbors(x)) for x in status}
    order = sorted(status, key=lambda x: (len(options[x]), node_key(x)))
    images: Dict[NodeId, List[int]] = {}
    theta: Dict[NodeId, NodeId] = {}
    budget = [STORING_SEARCH_LIMIT]

    def place(i: int) -> bool:
        if i == len(order):
            return True
        budget[0] -= 1
        if budget[0] < 0:
            return False
        x = order[i]
        for z in options[x]:
            marks = images.setdefault(z, [0, 0])
            if marks[1 - status[x]]:
                continue
            marks[status[x]] += 1
            theta[x] = z
            if place(i + 1):
                return True
            marks[status[x]] -= 1
            del theta[x]
        return False

    return dict(theta) if place(0) else None


def storing_function(net: Network, X: Iterable[NodeId], Y: Iterable[NodeId]) -> StoringResult:
    """θ: X ∪ Y -> neighbors with θ(x) ≠ θ(y) for x ∈ X, y ∈ Y."""
    X = sort_nodes(set(X))
    Y = sort_nodes(set(Y))
    overlap = set(X) & set(Y)
    if overlap:
        raise SpecError("X and Y overlap", {"nodes": [node_json(x) for x in sort_nodes(overlap)]})
    nodes = X + Y
    if not nodes:
        return StoringMap({}, method="empty")
    _check_blocks(net, nodes)

    if isinstance(net, Hierarchy):
        return StoringMap({x: net.children(x)[0] for x in nodes}, method="first-child")

    g = nx.Graph()
    left = [("L", x) for x in nodes]
    g.add_nodes_from(left)
    for x in nodes:
        for y in net.neighbors(x):
            g.add_edge(("L", x), ("R", y))
    matching = nx.bipartite.hopcroft_karp_matching(g, top_nodes=left)
    if all(u in matching for u in left):
        return StoringMap({u[1]: matching[u][1] for u in left}, method="matching")

    theta = _separated_search(net, X, Y)
    if theta is not None:
        return StoringMap(theta, method="search")

    hall_set, hall_neighbors = _hall_violator(g, left, matching)
    twins = [
        (x, y)
        for x in X
        for y in Y
        if len(net.neighbors(x)) == 1 and net.neighbors(x) == net.neighbors(y)
    ]
    logger.info(f"No storing function for {len(X)} active / {len(Y)} inactive nodes")
    return StoringFailure(hall_set=hall_set, hall_neighbors=hall_neighbors, twins=twins)


def storing_by_parity(net: Network, X: Iterable[NodeId], Y: Iterable[NodeId]) -> StoringResult:
    """Storing on each parity block separately, merged into one map."""
    X, Y = set(X), set(Y)
    if not net.bipartite:
        return storing_function(net, X, Y)
    merged: Dict[NodeId, NodeId] = {}
    method = "empty"
    for p in (0, 1):
        part = storing_function(net, [x for x in X if net.parity(x) == p], [y for y in Y if net.parity(y) == p])
        if isinstance(part, StoringFailure):
            return part
        merged.update(part.theta)
        if part.method != "empty":
            method = part.method
    return StoringMap(merged, method=method)


def twin_leaf_pairs(net: Network) -> List[Tuple[NodeId, NodeId]]:
    """Pairs of degree-one nodes hung on the same neighbor."""
    by_anchor: Dict[NodeId, List[NodeId]] = {}
    for x in net.nodes():
        around = net.neighbors(x)
        if len(around) == 1:
            by_anchor.setdefault(around[0], []).append(x)
    pairs = []
    for anchor in sort_nodes(by_anchor):
        leaves = sort_nodes(by_anchor[anchor])
        pairs.extend(zip(leaves, leaves[1:]))
    return pairs


def random_partial_configs(net: Network, count: int, size: int, rng, parity: Optional[int] = None
                           ) -> List[Tuple[List[NodeId], List[NodeId]]]:
    """``count`` random disjoint (X, Y) pairs of ``size`` nodes in total, optionally in one block."""
    pool = sort_nodes(net.nodes())
    if parity is not None:
        pool = [x for x in pool if net.parity(x) == parity]
    samples = []
    for _ in range(count):
        k = min(size, len(pool))
        order = rng.random(len(pool)).argsort()[:k]
        chosen = [pool[i] for i in order]
        split = int(rng.random() * (k + 1))
        samples.append((sort_nodes(chosen[:split]), sort_nodes(chosen[split:])))
    return samples


def check_richness(net: Network, samples: Iterable[Tuple[Iterable[NodeId], Iterable[NodeId]]] = (),
                   star_threshold: int = 20, cap: Optional[int] = 200) -> RichnessReport:
    """Star count on the window plus storability of each sample, per parity block.

    A finite window cannot prove infinitely many stars; reaching the threshold
    is reported as consistent with richness.
    """
    stars = find_complex_stars(net, cap)
    stars_ok = len(stars) >= star_threshold
    pairs = [(list(X), list(Y)) for X, Y in samples]
    pairs += [([a], [b]) for a, b in twin_leaf_pairs(net)]
    results: List[SampleStorability] = []
    for X, Y in pairs:
        blocks = (0, 1) if net.bipartite else (None,)
        for p in blocks:
            Xp = [x for x in X if p is None or net.parity(x) == p]
            Yp = [y for y in Y if p is None or net.parity(y) == p]
            if p is not None and not Xp and not Yp:
                continue
            outcome = storing_function(net, Xp, Yp)
            results.append(
                SampleStorability(
                    X=[node_json(x) for x in sort_nodes(Xp)],
                    Y=[node_json(y) for y in sort_nodes(Yp)],
                    parity=None if p is None else ("Even", "Odd")[p],
                    storable=isinstance(outcome, StoringMap),
                    witness=outcome.to_json() if isinstance(outcome, StoringFailure) else None,
                )
            )
    if not stars_ok:
        verdict = "violated: stars"
    elif not all(r.storable for r in results):
        verdict = "violated: storing"
    else:
        verdict = "consistent with richness"
    return RichnessReport(
        star_count=len(stars),
        star_threshold=star_threshold,
        stars_consistent=stars_ok,
        samples=results,
        verdict=verdict,
    )
