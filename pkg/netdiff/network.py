"""
Countable networks with bounded-degree neighborhood oracles.

Infinite networks (square lattices, the hexagonal pavement, rooted hierarchies)
are lazy: neighbors are generated on demand. Explicit networks are finite
graphs backed by networkx. A Window is a finite region of a base network whose
one-ring outside the region is resolved by a boundary policy.
"""

from __future__ import annotations

import bisect
import itertools
import json
import logging
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from .errors import InvalidNetwork, NotBipartite, SpecError, UnknownNetwork, UnknownNode, UnsupportedBase
from .models import (
    Boundary,
    NodeId,
    Parity,
    Pattern,
    ValidationReport,
    node_json,
    node_key,
    parse_node,
    sort_nodes,
)

logger = logging.getLogger("netdiff.network")

L1 = "L1"
LINF = "Linf"


class Network(ABC):
    """Irreflexive, symmetric, bounded and connected neighborhood oracle."""

    gamma: int
    is_finite: bool = False
    name: str = "network"

    @abstractmethod
    def contains(self, x: NodeId) -> bool:
        ...

    @abstractmethod
    def _neighbors(self, x: NodeId) -> List[NodeId]:
        ...

    @property
    @abstractmethod
    def origin(self) -> NodeId:
        ...

    def neighbors(self, x: NodeId) -> List[NodeId]:
        if not self.contains(x):
            raise UnknownNode(f"{x!r} is not a node of {self.name}", {"node": node_json(x)})
        return self._neighbors(x)

    def full_neighbors(self, x: NodeId) -> List[NodeId]:
        """Neighbors used by the dynamics. Differs from neighbors() only on windows."""
        return self.neighbors(x)

    def degree(self, x: NodeId) -> int:
        return len(self.full_neighbors(x))

    def nodes(self) -> List[NodeId]:
        raise SpecError(f"{self.name} is infinite and cannot be enumerated")

    @property
    def bipartite(self) -> bool:
        return False

    def parity(self, x: NodeId) -> int:
        """Canonical bipartition block of x (0 = Even, origin is Even)."""
        raise NotBipartite(f"{self.name} is not bipartite")

    def parity_hint(self, x: NodeId) -> int:
        """Parity used to resolve Even/Odd patterns, defined even off bipartite networks."""
        return self.parity(x)

    def half_space(self, x: NodeId) -> bool:
        """Membership in the half used by Mixed patterns."""
        raise UnsupportedBase(f"Mixed patterns are not defined on {self.name}")

    def odd_cycle(self) -> Optional[List[NodeId]]:
        return None

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        for x in self.nodes():
            g.add_node(x)
            for y in self.neighbors(x):
                g.add_edge(x, y)
        return g


class SquareLattice(Network):
    """Z^d with the L1 (2d neighbors) or L-infinity (3^d - 1 neighbors) radius-1 neighborhood."""

    def __init__(self, d: int = 2, metric: str = L1):
        if d < 1:
            raise SpecError("lattice dimension must be positive")
        if metric not in (L1, LINF):
            raise SpecError(f"unknown lattice metric {metric!r}")
        self.d = d
        self.metric = metric
        if metric == L1:
            self._offsets = []
            for axis in range(d):
                for delta in (-1, 1):
                    offset = [0] * d
                    offset[axis] = delta
                    self._offsets.append(tuple(offset))
        else:
            self._offsets = [o for o in itertools.product((-1, 0, 1), repeat=d) if any(o)]
        self.gamma = len(self._offsets)
        self.name = f"z{d}-{metric.lower()}"

    def contains(self, x: NodeId) -> bool:
        return isinstance(x, tuple) and len(x) == self.d and all(isinstance(c, int) for c in x)

    def _neighbors(self, x: NodeId) -> List[NodeId]:
        return sorted(tuple(c + o for c, o in zip(x, offset)) for offset in self._offsets)

    @property
    def origin(self) -> NodeId:
        return (0,) * self.d

    @property
    def bipartite(self) -> bool:
        return self.metric == L1 or self.d == 1

    def parity(self, x: NodeId) -> int:
        if not self.bipartite:
            raise NotBipartite(f"{self.name} is not bipartite", {"odd_cycle": [node_json(c) for c in self.odd_cycle()]})
        return sum(x) % 2

    def parity_hint(self, x: NodeId) -> int:
        return sum(x) % 2

    def half_space(self, x: NodeId) -> bool:
        return x[0] >= 0

    def distance(self, x: NodeId, y: NodeId) -> int:
        gaps = [abs(a - b) for a, b in zip(x, y)]
        return sum(gaps) if self.metric == L1 or self.d == 1 else max(gaps)

    def odd_cycle(self) -> Optional[List[NodeId]]:
        if self.bipartite:
            return None
        a = self.origin
        b = (1,) + (0,) * (self.d - 1)
        c = (1, 1) + (0,) * (self.d - 2)
        return [a, b, c]


class HexPavement(Network):
    """Hexagonal pavement in brick-wall coordinates; every node has 3 neighbors.

    (i, j) links to (i - 1, j), (i + 1, j) and vertically to (i, j + 1) when
    i + j is even, (i, j - 1) otherwise.
    """

    gamma = 3
    name = "hex"

    def contains(self, x: NodeId) -> bool:
        return isinstance(x, tuple) and len(x) == 2 and all(isinstance(c, int) for c in x)

    def _neighbors(self, x: NodeId) -> List[NodeId]:
        i, j = x
        vertical = (i, j + 1) if (i + j) % 2 == 0 else (i, j - 1)
        return sorted([(i - 1, j), (i + 1, j), vertical])

    @property
    def origin(self) -> NodeId:
        return (0, 0)

    @property
    def bipartite(self) -> bool:
        return True

    def parity(self, x: NodeId) -> int:
        return (x[0] + x[1]) % 2

    def half_space(self, x: NodeId) -> bool:
        return x[0] >= 0


class Hierarchy(Network):
    """Rooted tree with nodes numbered breadth-first; node 0 is the root.

    ``branching`` is a constant arity or a function from node index to arity
    (at least 1, at most ``max_branching``).
    """

    def __init__(self, branching: Union[int, Callable[[int], int]] = 2, max_branching: Optional[int] = None):
        if isinstance(branching, int):
            if branching < 1:
                raise SpecError("hierarchy branching must be at least 1")
            self._arity = None
            max_branching = branching
            self.name = f"hierarchy:{branching}"
        else:
            if max_branching is None:
                raise SpecError("a branching function needs max_branching")
            self._arity = branching
            self.name = "hierarchy"
        self.max_branching = max_branching
        self.gamma = max_branching + 1
        # _starts[n] = index of the first child of node n
        self._starts: List[int] = [1]
        self._depth: Dict[int, int] = {0: 0}

    def arity(self, n: int) -> int:
        m = self.max_branching if self._arity is None else self._arity(n)
        if not 1 <= m <= self.max_branching:
            raise SpecError(f"arity {m} of node {n} outside [1, {self.max_branching}]")
        return m

    def _extend(self, n: int) -> None:
        while len(self._starts) <= n + 1:
            k = len(self._starts) - 1
            self._starts.append(self._starts[k] + self.arity(k))

    def children(self, n: int) -> List[int]:
        self._extend(n)
        return list(range(self._starts[n], self._starts[n + 1]))

    def parent(self, n: int) -> Optional[int]:
        if n == 0:
            return None
        while self._starts[-1] <= n:
            self._extend(len(self._starts))
        return bisect.bisect_right(self._starts, n) - 1

    def depth(self, n: int) -> int:
        chain = []
        while n not in self._depth:
            chain.append(n)
            n = self.parent(n)
        d = self._depth[n]
        for node in reversed(chain):
            d += 1
            self._depth[node] = d
        return self._depth[chain[0]] if chain else d

    def contains(self, x: NodeId) -> bool:
        return isinstance(x, int) and not isinstance(x, bool) and x >= 0

    def _neighbors(self, x: NodeId) -> List[NodeId]:
        around = self.children(x)
        p = self.parent(x)
        if p is not None:
            around.insert(0, p)
        return around

    @property
    def origin(self) -> NodeId:
        return 0

    @property
    def bipartite(self) -> bool:
        return True

    def parity(self, x: NodeId) -> int:
        return self.depth(x) % 2

    def half_space(self, x: NodeId) -> bool:
        while x != 0 and self.parent(x) != 0:
            x = self.parent(x)
        return x == 1


class ExplicitNetwork(Network):
    """Finite graph given by an adjacency association.

    The raw adjacency is kept as given so that validate() can report defects;
    load_network_json() refuses graphs that fail validation.
    """

    is_finite = True

    def __init__(self, adjacency: Dict[NodeId, Sequence[NodeId]], name: str = "explicit"):
        self.adjacency: Dict[NodeId, List[NodeId]] = {
            x: sort_nodes(set(nbrs)) for x, nbrs in adjacency.items()
        }
        for nbrs in list(self.adjacency.values()):
            for y in nbrs:
                self.adjacency.setdefault(y, [])
        self.name = name
        self.gamma = max((len(v) for v in self.adjacency.values()), default=0)
        self._nodes = sort_nodes(self.adjacency)
        self._coloring: Optional[Dict[NodeId, int]] = None
        self._odd_cycle: Optional[List[NodeId]] = None
        self._graph: Optional[nx.Graph] = None

    @classmethod
    def from_edges(cls, nodes: Iterable[NodeId], edges: Iterable[Tuple[NodeId, NodeId]], name: str = "explicit") -> "ExplicitNetwork":
        adjacency: Dict[NodeId, set] = {x: set() for x in nodes}
        for u, v in edges:
            adjacency.setdefault(u, set()).add(v)
            adjacency.setdefault(v, set()).add(u)
        return cls(adjacency, name=name)

    def contains(self, x: NodeId) -> bool:
        try:
            return x in self.adjacency
        except TypeError:
            return False

    def _neighbors(self, x: NodeId) -> List[NodeId]:
        return list(self.adjacency[x])

    def nodes(self) -> List[NodeId]:
        return list(self._nodes)

    @property
    def origin(self) -> NodeId:
        return self._nodes[0]

    def graph(self) -> nx.Graph:
        if self._graph is None:
            self._graph = nx.Graph()
            self._graph.add_nodes_from(self._nodes)
            for x, nbrs in self.adjacency.items():
                self._graph.add_edges_from((x, y) for y in nbrs if y != x)
        return self._graph

    def _color(self) -> None:
        if self._coloring is None:
            self._coloring, self._odd_cycle = two_coloring(self, self.origin)

    @property
    def bipartite(self) -> bool:
        self._color()
        return self._odd_cycle is None

    def parity(self, x: NodeId) -> int:
        self._color()
        if self._odd_cycle is not None:
            raise NotBipartite(f"{self.name} is not bipartite", {"odd_cycle": [node_json(c) for c in self._odd_cycle]})
        if x not in self._coloring:
            raise UnknownNode(f"{x!r} is not a node of {self.name}")
        return self._coloring[x]

    def odd_cycle(self) -> Optional[List[NodeId]]:
        self._color()
        return self._odd_cycle

    def to_json(self) -> Dict:
        edges = sorted(
            {tuple(sort_nodes((x, y))) for x, nbrs in self.adjacency.items() for y in nbrs},
            key=lambda e: (node_key(e[0]), node_key(e[1])),
        )
        return {
            "nodes": [node_json(x) for x in self._nodes],
            "edges": [[node_json(u), node_json(v)] for u, v in edges],
        }


class LayeredNetwork(Network):
    """Bipartite subnetwork of an infinite lattice keeping edges between consecutive distance layers from c."""

    def __init__(self, base: SquareLattice, center: NodeId):
        self.base = base
        self.center = center
        self.gamma = base.gamma
        self.name = f"{base.name}~{center}"

    def layer(self, x: NodeId) -> int:
        return self.base.distance(x, self.center)

    def contains(self, x: NodeId) -> bool:
        return self.base.contains(x)

    def _neighbors(self, x: NodeId) -> List[NodeId]:
        d = self.layer(x)
        return [y for y in self.base.neighbors(x) if abs(self.layer(y) - d) == 1]

    @property
    def origin(self) -> NodeId:
        return self.center

    @property
    def bipartite(self) -> bool:
        return True

    def parity(self, x: NodeId) -> int:
        return self.layer(x) % 2


def pattern_bit(pattern: Pattern, net: Network, x: NodeId) -> bool:
    if pattern is Pattern.ACTIVE:
        return True
    if pattern is Pattern.INACTIVE:
        return False
    return net.half_space(x)


class Window(Network):
    """Finite region of a base network with a boundary policy for the one-ring outside.

    neighbors() is the induced (or wrapped) finite graph used by structural
    analyses; full_neighbors() keeps the base degree and is what the dynamics use.
    """

    is_finite = True

    def __init__(
        self,
        base: Network,
        region: Iterable[NodeId],
        boundary: Boundary = Boundary.FROZEN_INACTIVE,
        bounds: Optional[Sequence[Tuple[int, int]]] = None,
        extend_pattern: Optional[Tuple[Pattern, Pattern]] = None,
    ):
        self.base = base
        self.region: FrozenSet[NodeId] = frozenset(region)
        if not self.region:
            raise SpecError("window region is empty")
        self.boundary = Boundary(boundary)
        self.bounds = [tuple(b) for b in bounds] if bounds is not None else None
        self.extend_pattern = extend_pattern
        self.gamma = base.gamma
        self.name = f"window({base.name})"
        self._nodes = sort_nodes(self.region)
        self.index: Dict[NodeId, int] = {x: i for i, x in enumerate(self._nodes)}
        self._coloring: Optional[Dict[NodeId, int]] = None
        self._odd_cycle: Optional[List[NodeId]] = None
        self._graph: Optional[nx.Graph] = None
        self._table = None

        for x in self._nodes:
            if not base.contains(x):
                raise UnknownNode(f"{x!r} is not a node of {base.name}")
        if self.boundary is Boundary.TORUS:
            self._check_torus()
        if self.boundary is Boundary.EXTEND_NEAREST and self.bounds is None:
            raise SpecError("ExtendNearest boundary needs a box window")
        if self.boundary is Boundary.EXTEND_BASE and extend_pattern is None:
            raise SpecError("ExtendBase boundary needs a base pattern")
        if not nx.is_connected(self.graph()):
            raise SpecError("window region is not connected")

    @classmethod
    def box(cls, base: Network, bounds: Sequence[Tuple[int, int]], boundary: Boundary = Boundary.FROZEN_INACTIVE,
            extend_pattern: Optional[Tuple[Pattern, Pattern]] = None) -> "Window":
        """Axis-aligned box with inclusive per-dimension bounds."""
        if not isinstance(base.origin, tuple) or len(base.origin) != len(bounds):
            raise SpecError(f"box windows need coordinate nodes of dimension {len(bounds)}")
        region = itertools.product(*(range(lo, hi + 1) for lo, hi in bounds))
        return cls(base, region, boundary, bounds=bounds, extend_pattern=extend_pattern)

    @classmethod
    def ball(cls, base: Network, center: NodeId, radius: int, boundary: Boundary = Boundary.FROZEN_INACTIVE,
             extend_pattern: Optional[Tuple[Pattern, Pattern]] = None) -> "Window":
        return cls(base, bfs_distances(base, center, radius), boundary, extend_pattern=extend_pattern)

    def _check_torus(self) -> None:
        if not isinstance(self.base, SquareLattice) or self.bounds is None:
            raise SpecError("Torus boundary is only valid on square-lattice boxes")
        if any(hi - lo + 1 < 3 for lo, hi in self.bounds):
            raise SpecError("Torus boxes need at least 3 nodes per side")

    def _wrap(self, y: NodeId) -> NodeId:
        return tuple(lo + (c - lo) % (hi - lo + 1) for c, (lo, hi) in zip(y, self.bounds))

    def _clamp(self, y: NodeId) -> NodeId:
        return tuple(min(max(c, lo), hi) for c, (lo, hi) in zip(y, self.bounds))

    def contains(self, x: NodeId) -> bool:
        try:
            return x in self.region
        except TypeError:
            return False

    def _neighbors(self, x: NodeId) -> List[NodeId]:
        if self.boundary is Boundary.TORUS:
            return self.full_neighbors(x)
        return [y for y in self.base.neighbors(x) if y in self.region]

    def full_neighbors(self, x: NodeId) -> List[NodeId]:
        if not self.contains(x):
            raise UnknownNode(f"{x!r} is outside the window")
        around = self.base.neighbors(x)
        if self.boundary is Boundary.TORUS:
            return sort_nodes({self._wrap(y) for y in around})
        return around

    def nodes(self) -> List[NodeId]:
        return list(self._nodes)

    @property
    def origin(self) -> NodeId:
        return self.base.origin if self.base.origin in self.region else self._nodes[0]

    def graph(self) -> nx.Graph:
        if self._graph is None:
            g = nx.Graph()
            g.add_nodes_from(self._nodes)
            for x in self._nodes:
                g.add_edges_from((x, y) for y in self._neighbors(x))
            self._graph = g
        return self._graph

    def outside_status(self, y: NodeId, inside: Callable[[NodeId], bool], step: int = 0) -> bool:
        """Status of an out-of-region node under the boundary policy."""
        if self.boundary is Boundary.FROZEN_INACTIVE:
            return False
        if self.boundary is Boundary.FROZEN_ACTIVE:
            return True
        if self.boundary is Boundary.EXTEND_NEAREST:
            return inside(self._clamp(y))
        if self.boundary is Boundary.EXTEND_BASE:
            even, odd = self.extend_pattern
            if step % 2 == 1:
                even, odd = odd, even
            pattern = even if self.base.parity_hint(y) == 0 else odd
            return pattern_bit(pattern, self.base, y)
        # Torus neighbors are always wrapped into the region
        return inside(self._wrap(y))

    def neighbor_table(self):
        """Index table for vectorised stepping: (idx, deg, ring).

        Row i lists the full neighbors of node i as indices into
        region + ring + [pad]; the pad slot is always inactive.
        """
        if self._table is None:
            import numpy as np

            n = len(self._nodes)
            ring: List[NodeId] = []
            ring_index: Dict[NodeId, int] = {}
            rows = []
            for x in self._nodes:
                row = []
                for y in self.full_neighbors(x):
                    if y in self.index:
                        row.append(self.index[y])
                    elif self.boundary is Boundary.EXTEND_NEAREST:
                        row.append(self.index[self._clamp(y)])
                    else:
                        if y not in ring_index:
                            ring_index[y] = len(ring)
                            ring.append(y)
                        row.append(n + ring_index[y])
                rows.append(row)
            width = max(len(r) for r in rows)
            pad = n + len(ring)
            idx = np.full((n, width), pad, dtype=np.int64)
            for i, row in enumerate(rows):
                idx[i, : len(row)] = row
            deg = np.array([len(r) for r in rows], dtype=np.int64)
            self._table = (idx, deg, ring)
        return self._table

    def _color(self) -> None:
        if self._coloring is None:
            self._coloring, self._odd_cycle = two_coloring(self, self.origin)

    @property
    def bipartite(self) -> bool:
        self._color()
        return self._odd_cycle is None

    def parity(self, x: NodeId) -> int:
        self._color()
        if self._odd_cycle is not None:
            raise NotBipartite("window graph is not bipartite", {"odd_cycle": [node_json(c) for c in self._odd_cycle]})
        return self._coloring[x]

    def parity_hint(self, x: NodeId) -> int:
        return self.base.parity_hint(x)

    def half_space(self, x: NodeId) -> bool:
        return self.base.half_space(x)

    def odd_cycle(self) -> Optional[List[NodeId]]:
        self._color()
        return self._odd_cycle

    def describe(self) -> Dict:
        doc: Dict = {"boundary": self.boundary.value}
        if self.bounds is not None:
            doc["bounds"] = [list(b) for b in self.bounds]
        return doc


@dataclass(frozen=True)
class Bipartition:
    """Canonical 2-coloring; the origin is Even. Blocks are materialised on finite networks only."""

    parity: Callable[[NodeId], int]
    evens: Optional[FrozenSet[NodeId]] = None
    odds: Optional[FrozenSet[NodeId]] = None

    def block(self, x: NodeId) -> Parity:
        return Parity(self.parity(x))


@dataclass(frozen=True)
class OddCycle:
    cycle: List[NodeId] = field(default_factory=list)


def two_coloring(net: Network, root: NodeId) -> Tuple[Dict[NodeId, int], Optional[List[NodeId]]]:
    """2-coloring of a finite network with root Even; returns (coloring, odd cycle witness or None).

    Every component is colored. An odd network gets an empty coloring and the
    shortest-tree cycle through the first same-level edge found from the root.
    """
    g = net.graph()
    if nx.is_bipartite(g):
        color = nx.bipartite.color(g)
        if color.get(root, 0) == 1:
            for x in nx.node_connected_component(g, root):
                color[x] = 1 - color[x]
        return color, None
    others = [min(comp, key=node_key) for comp in nx.connected_components(g) if root not in comp]
    for start in [root] + sorted(others, key=node_key):
        dist = nx.single_source_shortest_path_length(g, start)
        parent: Dict[NodeId, Optional[NodeId]] = dict(nx.bfs_predecessors(g, start))
        parent[start] = None
        for u, v in g.edges(dist):
            if dist[u] == dist[v]:
                return {}, _tree_cycle(parent, u, v)
    return {}, None


def _tree_cycle(parent: Dict[NodeId, Optional[NodeId]], u: NodeId, v: NodeId) -> List[NodeId]:
    up_u = [u]
    while parent[up_u[-1]] is not None:
        up_u.append(parent[up_u[-1]])
    on_u = {x: i for i, x in enumerate(up_u)}
    up_v = [v]
    while up_v[-1] not in on_u:
        up_v.append(parent[up_v[-1]])
    lca = up_v[-1]
    return up_u[: on_u[lca] + 1] + list(reversed(up_v[:-1]))


def bipartition(net: Network) -> Union[Bipartition, OddCycle]:
    if net.is_finite:
        if not net.bipartite:
            return OddCycle(net.odd_cycle())
        nodes = net.nodes()
        evens = frozenset(x for x in nodes if net.parity(x) == 0)
        return Bipartition(parity=net.parity, evens=evens, odds=frozenset(nodes) - evens)
    if not net.bipartite:
        return OddCycle(net.odd_cycle() or [])
    return Bipartition(parity=net.parity)


def validate(net: ExplicitNetwork, gamma: Optional[int] = None) -> ValidationReport:
    """Check irreflexivity, symmetry, degree bound and connectivity of raw adjacency."""
    failures: List[str] = []
    adjacency = net.adjacency
    loops = [x for x, nbrs in adjacency.items() if x in nbrs]
    if loops:
        failures.append(f"irreflexive: self-loop at {node_json(sort_nodes(loops)[0])}")
    asym = [(x, y) for x, nbrs in adjacency.items() for y in nbrs if x not in adjacency.get(y, [])]
    if asym:
        x, y = min(asym, key=lambda e: (node_key(e[0]), node_key(e[1])))
        failures.append(f"symmetric: {node_json(x)} -> {node_json(y)} has no reverse edge")
    observed = max((len(v) for v in adjacency.values()), default=0)
    bound = gamma if gamma is not None else observed
    bounded = observed <= bound
    if not bounded:
        failures.append(f"bounded: degree {observed} exceeds gamma {bound}")
    g = nx.Graph()
    g.add_nodes_from(adjacency)
    g.add_edges_from((x, y) for x, nbrs in adjacency.items() for y in nbrs)
    connected = len(adjacency) > 0 and nx.is_connected(g)
    if not connected:
        failures.append("connected: graph has more than one component")
    return ValidationReport(
        irreflexive=not loops,
        symmetric=not asym,
        bounded=bounded,
        connected=connected,
        gamma=observed,
        failures=failures,
    )


def load_network_json(path: Union[str, Path], name: Optional[str] = None) -> ExplicitNetwork:
    """Load {"nodes": [...], "edges": [[u, v], ...]} and validate it."""
    try:
        with open(path, "r") as f:
            doc = json.load(f)
        nodes = [parse_node(x) for x in doc.get("nodes", [])]
        edges = [(parse_node(u), parse_node(v)) for u, v in doc.get("edges", [])]
    except (OSError, ValueError, TypeError) as e:
        raise InvalidNetwork(f"cannot read network file {path}: {str(e)}")
    adjacency: Dict[NodeId, List[NodeId]] = {x: [] for x in nodes}
    for u, v in edges:
        adjacency.setdefault(u, []).append(v)
        adjacency.setdefault(v, []).append(u)
    net = ExplicitNetwork(adjacency, name=name or Path(path).stem)
    report = validate(net)
    if not report.passed:
        raise InvalidNetwork(f"network {path} failed validation", {"failures": report.failures})
    logger.info(f"Loaded network {net.name} with {len(net.nodes())} nodes")
    return net


def bfs_distances(net: Network, source: NodeId, radius: Optional[int] = None) -> Dict[NodeId, int]:
    """Graph distances from source, truncated at radius (required on infinite networks)."""
    if not net.contains(source):
        raise UnknownNode(f"{source!r} is not a node of {net.name}")
    if net.is_finite:
        return dict(nx.single_source_shortest_path_length(net.graph(), source, cutoff=radius))
    if radius is None:
        raise SpecError("a radius is required on infinite networks")
    # infinite networks: lazy BFS
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if dist[u] >= radius:
            continue
        for v in net.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def bipartite_subnetwork(net: Network, c: NodeId, radius: Optional[int] = None) -> Network:
    """Subnetwork keeping the edges {x, y} with |d(x, c) - d(y, c)| = 1."""
    if not net.contains(c):
        raise UnknownNode(f"{c!r} is not a node of {net.name}")
    if net.bipartite:
        return net
    if isinstance(net, SquareLattice):
        return LayeredNetwork(net, c)
    if not net.is_finite:
        raise SpecError(f"no analytic distance on {net.name}; take a window first")
    dist = bfs_distances(net, c, radius)
    kept = [
        (x, y)
        for x in dist
        for y in net.neighbors(x)
        if y in dist and abs(dist[x] - dist[y]) == 1
    ]
    return ExplicitNetwork.from_edges(list(dist), kept, name=f"{net.name}~{node_json(c)}")


def intra_block_edge(net: Network, bip: Bipartition, limit: int = 10000) -> Optional[Tuple[NodeId, NodeId]]:
    """First edge of net inside one block of bip, scanning nodes breadth-first from the origin."""
    seen = {net.origin}
    queue = deque([net.origin])
    while queue and len(seen) <= limit:
        x = queue.popleft()
        for y in net.neighbors(x):
            if bip.parity(x) == bip.parity(y):
                return tuple(sort_nodes((x, y)))
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return None


def line_network(n: int) -> ExplicitNetwork:
    """Finite piece of the line Z: nodes (-(n//2),) .. (n - 1 - n//2,)."""
    start = -(n // 2)
    nodes = [(start + k,) for k in range(n)]
    return ExplicitNetwork.from_edges(nodes, zip(nodes, nodes[1:]), name="line")


def twin_leaf_network(radius: int = 4, linked: bool = False) -> ExplicitNetwork:
    """Box of Z^2 (L1) with two extra nodes alpha and beta hung on the origin.

    With linked=True alpha and beta are also joined, which makes the graph
    non-bipartite.
    """
    lattice = SquareLattice(2, L1)
    box = [(i, j) for i in range(-radius, radius + 1) for j in range(-radius, radius + 1)]
    inside = set(box)
    edges = [(x, y) for x in box for y in lattice.neighbors(x) if y in inside]
    edges += [("alpha", (0, 0)), ("beta", (0, 0))]
    if linked:
        edges.append(("alpha", "beta"))
    return ExplicitNetwork.from_edges(box + ["alpha", "beta"], edges, name="twin-leaf-linked" if linked else "twin-leaf")


def caterpillar_network(spine: int, pendants: Dict[int, int], cycle: bool = False) -> ExplicitNetwork:
    """Path (or cycle) of ``spine`` nodes with ``pendants[k]`` leaves hung on spine node k."""
    nodes: List[NodeId] = [f"s{k:03d}" for k in range(spine)]
    edges = list(zip(nodes, nodes[1:]))
    if cycle and spine >= 3:
        edges.append((nodes[-1], nodes[0]))
    for k, count in pendants.items():
        for leaf in range(count):
            label = f"s{k:03d}p{leaf}"
            nodes.append(label)
            edges.append((nodes[k], label))
    return ExplicitNetwork.from_edges(nodes, edges, name="caterpillar")


def network_from_name(name: str) -> Network:
    """Built-in networks: z2-l1, z2-linf, zd-l1:<d>, zd-linf:<d>, hex, hierarchy:<m>, line, twin-leaf, twin-leaf-linked, caterpillar."""
    fixed = {
        "z2-l1": lambda: SquareLattice(2, L1),
        "z2-linf": lambda: SquareLattice(2, LINF),
        "hex": HexPavement,
        "line": lambda: line_network(21),
        "twin-leaf": lambda: twin_leaf_network(),
        "twin-leaf-linked": lambda: twin_leaf_network(linked=True),
        "caterpillar": lambda: caterpillar_network(8, {1: 1, 3: 2, 6: 1}),
    }
    if name in fixed:
        return fixed[name]()
    kind, _, arg = name.partition(":")
    try:
        if kind == "zd-l1":
            return SquareLattice(int(arg), L1)
        if kind == "zd-linf":
            return SquareLattice(int(arg), LINF)
        if kind == "hierarchy":
            return Hierarchy(int(arg) if arg else 2)
    except ValueError:
        raise UnknownNetwork(f"bad parameter in network name {name!r}")
    raise UnknownNetwork(f"unknown network {name!r}")
