"""
Constructive reachability: trajectories of cylinders with per-node certificates.

A step (X, Y) -> (X', Y') has positive probability from every configuration
of (X, Y)+ under a strict aggregation function iff every x' in X' has a
neighbor in X and every y' in Y' has a neighbor in Y. Everything here is
built from that node-local rule and checked against it.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from ..aggregation import AggregationFunction, evaluate_exact, is_strict
from ..configuration import ConfigDescriptor
from ..dynamics import RngStream, sample_step
from ..errors import (
    BlocksMixed,
    InvalidTrajectory,
    MissingWitnesses,
    NetdiffError,
    NoStoring,
    NotInFamily,
    NotStrict,
    RichnessViolated,
    SpecError,
    StarOverlap,
    TargetTooLarge,
)
from ..models import Cylinder, NodeId, Status, Trajectory, TrajectoryCheck, node_json, node_key, sort_nodes
from ..network import Network, Window, bfs_distances
from .structure import ComplexStar, StoringFailure, find_complex_stars, star_at, storing_by_parity

logger = logging.getLogger("netdiff.reachability")

SEARCH_LIMIT = 200000
FAR_RADIUS = 16

PartialConfig = Dict[int, Status]


def validate_trajectory(net: Network, traj: Trajectory) -> TrajectoryCheck:
    """Check the node-local positivity rule on every consecutive pair of cylinders."""
    certificates = []
    for i in range(1, len(traj.steps)):
        prev, cur = traj.steps[i - 1], traj.steps[i]
        witnesses = {"step": i, "active": [], "inactive": []}
        for side, targets, pool in (("active", cur.X, set(prev.X)), ("inactive", cur.Y, set(prev.Y))):
            for z in targets:
                found = [w for w in net.full_neighbors(z) if w in pool]
                if not found:
                    return TrajectoryCheck(valid=False, failing_step=i, failing_node=node_json(z))
                witnesses[side].append([node_json(z), node_json(sort_nodes(found)[0])])
        certificates.append(witnesses)
    return TrajectoryCheck(valid=True, certificates=certificates)


def probability_lower_bound(net: Network, A: AggregationFunction, traj: Trajectory) -> Fraction:
    """Product of per-node worst-case transition probabilities; unconstrained neighbors are adversarial."""
    if not is_strict(A):
        raise NotStrict(f"{A.describe()} is not strict")
    check = validate_trajectory(net, traj)
    if not check.valid:
        raise InvalidTrajectory(
            f"step {check.failing_step} fails at {check.failing_node}",
            {"step": check.failing_step, "node": check.failing_node},
        )
    bound = Fraction(1)
    for prev, cur in zip(traj.steps, traj.steps[1:]):
        active, inactive = set(prev.X), set(prev.Y)
        for x in cur.X:
            bound *= evaluate_exact(A, [int(z in active) for z in net.full_neighbors(x)])
        for y in cur.Y:
            bound *= 1 - evaluate_exact(A, [int(z not in inactive) for z in net.full_neighbors(y)])
    return bound


def _holds(net: Network, config: ConfigDescriptor, cyl: Cylinder) -> bool:
    return all(config.is_active(x, net) for x in cyl.X) and not any(config.is_active(y, net) for y in cyl.Y)


def realize_trajectory(net: Network, A: AggregationFunction, config: ConfigDescriptor, traj: Trajectory,
                       rng: RngStream) -> Tuple[bool, Optional[int]]:
    """Sample the dynamics from config and report whether every cylinder was hit (else the first miss)."""
    if not _holds(net, config, traj.steps[0]):
        return False, 0
    state = config
    for i, cyl in enumerate(traj.steps[1:], 1):
        state = sample_step(net, A, state, rng)
        if not _holds(net, state, cyl):
            return False, i
    return True, None


def _concat(*parts: Trajectory) -> List[Cylinder]:
    steps: List[Cylinder] = list(parts[0].steps)
    for part in parts[1:]:
        if part.steps[0] != steps[-1]:
            raise InvalidTrajectory("trajectory pieces do not meet")
        steps.extend(part.steps[1:])
    return steps


def _bfs_path(net: Network, source: NodeId, target: NodeId, avoid: Iterable[NodeId] = (),
              limit: int = SEARCH_LIMIT) -> Optional[List[NodeId]]:
    """Shortest path avoiding ``avoid`` (the endpoints excepted), neighbors in node order."""
    blocked = set(avoid) - {source, target}
    parent: Dict[NodeId, Optional[NodeId]] = {source: None}
    queue = deque([source])
    while queue and len(parent) <= limit:
        u = queue.popleft()
        if u == target:
            path = [u]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1]
        for v in net.neighbors(u):
            if v not in parent and v not in blocked:
                parent[v] = u
                queue.append(v)
    return None


def _distance(net: Network, a: NodeId, b: NodeId) -> Optional[int]:
    path = _bfs_path(net, a, b)
    return None if path is None else len(path) - 1


def synth_store(net: Network, X: Iterable[NodeId], Y: Iterable[NodeId], n_steps: int) -> Trajectory:
    """(X, Y), (θX, θY), (X, Y), ... of n_steps + 1 cylinders."""
    if n_steps < 0 or n_steps % 2:
        raise SpecError("storing trajectories need an even, nonnegative number of steps")
    X, Y = sort_nodes(set(X)), sort_nodes(set(Y))
    result = storing_by_parity(net, X, Y)
    if isinstance(result, StoringFailure):
        raise NoStoring("no storing function for the partial configuration", result.to_json())
    home = Cylinder.of(X, Y)
    away = Cylinder.of(result.image(X), result.image(Y))
    steps = [home if k % 2 == 0 else away for k in range(n_steps + 1)]
    return Trajectory(steps=steps, notes={"theta": result.to_json()["theta"]})


def synth_propagate(net: Network, source: NodeId, target: NodeId, carry: Status = Status.ACTIVE) -> Trajectory:
    """Single-node cylinders along a shortest path, carrying one status."""
    for node in (source, target):
        net.neighbors(node)
    path = _bfs_path(net, source, target)
    if path is None:
        raise SpecError(f"no path from {source!r} to {target!r}")
    if carry is Status.ACTIVE:
        steps = [Cylinder.of([z]) for z in path]
    else:
        steps = [Cylinder.of((), [z]) for z in path]
    return Trajectory(steps=steps)


# Star manipulation


def _check_family(pc: PartialConfig) -> FrozenSet[Tuple[int, Status]]:
    if not pc or not set(pc) <= {1, 2, 3}:
        raise NotInFamily(f"partial configuration {pc} is not on the three star branches")
    statuses = {Status(s) for s in pc.values()}
    if statuses != {Status.ACTIVE, Status.INACTIVE}:
        raise NotInFamily(f"partial configuration {pc} needs an active and an inactive branch")
    return frozenset((i, Status(s)) for i, s in pc.items())


def _pc_cylinder(star: ComplexStar, pc: Iterable[Tuple[int, Status]]) -> Cylinder:
    items = list(pc)
    return Cylinder.of(
        [star.branch(i) for i, s in items if s is Status.ACTIVE],
        [star.branch(i) for i, s in items if s is Status.INACTIVE],
    )


def _star_moves(star: ComplexStar, state: FrozenSet[Tuple[int, Status]]):
    """Two-step exchanges through the center: (intermediate cylinder, next partial configuration)."""
    actives = sorted(i for i, s in state if s is Status.ACTIVE)
    inactives = sorted(i for i, s in state if s is Status.INACTIVE)
    for i in actives:
        for j in inactives:
            # center active, tail j inactive; then j stays inactive and the others may turn active
            mid = Cylinder.of([star.s_star], [star.tail(j)])
            others = [k for k in (1, 2, 3) if k != j]
            for r in range(1, len(others) + 1):
                for chosen in itertools.combinations(others, r):
                    yield mid, frozenset([(j, Status.INACTIVE)] + [(k, Status.ACTIVE) for k in chosen])
            # tail i active, center inactive; then i stays active and the others may turn inactive
            mid = Cylinder.of([star.tail(i)], [star.s_star])
            others = [k for k in (1, 2, 3) if k != i]
            for r in range(1, len(others) + 1):
                for chosen in itertools.combinations(others, r):
                    yield mid, frozenset([(i, Status.ACTIVE)] + [(k, Status.INACTIVE) for k in chosen])


def synth_star(net: Network, star: ComplexStar, from_pc: PartialConfig, to_pc: PartialConfig) -> Trajectory:
    """Even-length trajectory between two partial configurations on the branches, using the star only."""
    start = _check_family(from_pc)
    goal = _check_family(to_pc)
    if not star.clean:
        raise NotInFamily("star manipulation needs seven distinct star nodes")
    if start == goal:
        return Trajectory(steps=[_pc_cylinder(star, start)])
    parent: Dict[FrozenSet, Tuple[Optional[FrozenSet], Optional[Cylinder]]] = {start: (None, None)}
    queue = deque([start])
    found = None
    while queue and found is None:
        state = queue.popleft()
        for mid, nxt in _star_moves(star, state):
            if nxt in parent:
                continue
            parent[nxt] = (state, mid)
            if goal <= nxt:
                found = nxt
                break
            queue.append(nxt)
    if found is None:
        raise NotInFamily(f"no exchange sequence from {from_pc} to {to_pc}")
    chain = []
    state = found
    while parent[state][0] is not None:
        prev, mid = parent[state]
        chain.append((mid, state))
        state = prev
    steps = [_pc_cylinder(star, start)]
    for mid, state in reversed(chain):
        steps += [mid, _pc_cylinder(star, state)]
    steps[-1] = _pc_cylinder(star, goal)
    return Trajectory(steps=steps)


# Centrage


def find_witnesses(region: Network, config: ConfigDescriptor, star: ComplexStar,
                   parity: Optional[int]) -> Tuple[NodeId, NodeId]:
    """Nearest active and nearest inactive node to the star center, on the given parity."""
    dist = bfs_distances(region, star.s_star, None if region.is_finite else FAR_RADIUS)
    active = inactive = None
    for n in sorted(dist, key=lambda z: (dist[z], node_key(z))):
        if parity is not None and region.parity_hint(n) != parity:
            continue
        if config.is_active(n, region):
            active = n if active is None else active
        else:
            inactive = n if inactive is None else inactive
        if active is not None and inactive is not None:
            return active, inactive
    raise MissingWitnesses("the configuration lacks an active or an inactive witness near the star")


def _phased_centrage(net: Network, star: ComplexStar, lead: NodeId, follow: NodeId
                     ) -> Optional[List[Tuple[NodeId, NodeId]]]:
    """Leader walks to a branch while the follower oscillates; then the follower walks while the leader oscillates."""
    if follow == star.s_star:
        return None
    branches = list(star.branches)
    dist_lead = {s: _distance(net, lead, s) for s in branches}
    dist_follow = {s: _distance(net, follow, s) for s in branches}
    for s_a in sorted((s for s in branches if dist_lead[s] is not None), key=lambda s: (dist_lead[s], node_key(s))):
        for w in sort_nodes(net.neighbors(follow)):
            if w == lead:
                continue
            path_a = _bfs_path(net, lead, s_a, avoid={follow, w})
            if path_a is None or follow in path_a or w in path_a or (len(path_a) - 1) % 2:
                continue
            frames = [(lead, follow)] + [(z, w if k % 2 else follow) for k, z in enumerate(path_a[1:], 1)]
            rest = [s for s in branches if s != s_a and dist_follow[s] is not None]
            for s_b in sorted(rest, key=lambda s: (dist_follow[s], node_key(s))):
                path_b = _bfs_path(net, follow, s_b, avoid={s_a, star.s_star})
                if path_b is None or s_a in path_b or star.s_star in path_b or (len(path_b) - 1) % 2:
                    continue
                return frames + [(star.s_star if k % 2 else s_a, z) for k, z in enumerate(path_b[1:], 1)]
    return None


def _joint_centrage(net: Network, star: ComplexStar, lead: NodeId, follow: NodeId,
                    limit: int = SEARCH_LIMIT) -> Optional[List[Tuple[NodeId, NodeId]]]:
    """Breadth-first search over token pairs; both move every step and never share a node."""
    branches = set(star.branches)
    start = (lead, follow, 0)
    parent: Dict[Tuple, Optional[Tuple]] = {start: None}
    queue = deque([start])
    while queue and len(parent) <= limit:
        state = queue.popleft()
        a, b, par = state
        if a in branches and b in branches and a != b and par == 0:
            chain = [state]
            while parent[chain[-1]] is not None:
                chain.append(parent[chain[-1]])
            return [(s[0], s[1]) for s in reversed(chain)]
        for a2 in net.neighbors(a):
            for b2 in net.neighbors(b):
                nxt = (a2, b2, 1 - par)
                if a2 != b2 and nxt not in parent:
                    parent[nxt] = state
                    queue.append(nxt)
    return None


def synth_centrage(net: Network, config: ConfigDescriptor, star: ComplexStar,
                   x: Optional[NodeId] = None, y: Optional[NodeId] = None) -> Trajectory:
    """Bring an active witness x and an inactive witness y onto two distinct star branches."""
    if x is None or y is None:
        parity = net.parity_hint(star.s1) if net.bipartite else None
        x, y = find_witnesses(net, config, star, parity)
    if not config.is_active(x, net) or config.is_active(y, net):
        raise SpecError("centrage witnesses must be one active and one inactive node of the configuration")
    others = [n for n in config.exception_nodes if n not in (x, y) and net.contains(n)]
    halo = set(others) | {z for n in others for z in net.neighbors(n)}
    if halo & set(star.nodes):
        raise StarOverlap(
            "the star meets the exception halo",
            {"nodes": [node_json(n) for n in sort_nodes(halo & set(star.nodes))]},
        )
    gx, gy = net.neighbors(x), net.neighbors(y)
    if len(gx) == 1 and gx == gy:
        raise RichnessViolated(
            "storing",
            f"{x!r} and {y!r} share their only neighbor {gx[0]!r}",
            {"nodes": [node_json(x), node_json(y)], "neighbor": node_json(gx[0])},
        )
    dx, dy = _distance(net, x, star.s_star), _distance(net, y, star.s_star)
    if dx is None or dy is None:
        raise RichnessViolated("stars", "the star is out of reach of the witnesses")
    case = "closer-active" if dx < dy else "closer-inactive" if dy < dx else "equal-distance"
    active_leads = dx <= dy
    lead, follow = (x, y) if active_leads else (y, x)

    if x in star.branches and y in star.branches:
        pairs = [(lead, follow)]
    else:
        pairs = _phased_centrage(net, star, lead, follow) or _joint_centrage(net, star, lead, follow)
    if pairs is None:
        raise RichnessViolated("storing", "no centrage trajectory separates the witnesses")
    steps = [Cylinder.of([l], [f]) if active_leads else Cylinder.of([f], [l]) for l, f in pairs]
    traj = Trajectory(
        steps=steps,
        notes={
            "case": case,
            "leader": "active" if active_leads else "inactive",
            "witnesses": {"active": node_json(x), "inactive": node_json(y)},
        },
    )
    check = validate_trajectory(net, traj)
    if not check.valid:
        raise InvalidTrajectory(f"centrage fails at step {check.failing_step}")
    return traj


def _branch_pc(star: ComplexStar, cyl: Cylinder) -> PartialConfig:
    pc: PartialConfig = {}
    for i, s in enumerate(star.branches, 1):
        if s in cyl.X:
            pc[i] = Status.ACTIVE
        elif s in cyl.Y:
            pc[i] = Status.INACTIVE
    return pc


# Placement


@dataclass
class _Oscillator:
    home: NodeId
    away: NodeId
    status: Status
    home_parity: int

    def at(self, t: int) -> NodeId:
        return self.home if t % 2 == self.home_parity else self.away


@dataclass
class _Timeline:
    """Frames of constrained statuses driven by period-2 oscillators plus one moving token."""

    frames: List[Dict[NodeId, Status]]
    oscillators: List[_Oscillator] = field(default_factory=list)

    @property
    def now(self) -> int:
        return len(self.frames) - 1

    def blocked(self, status: Status) -> Callable[[NodeId, int], bool]:
        def check(node: NodeId, t: int) -> bool:
            return any(o.status is not status and o.at(t) == node for o in self.oscillators)

        return check

    def advance(self, extra: Optional[Dict[NodeId, Status]] = None) -> None:
        t = self.now + 1
        frame: Dict[NodeId, Status] = {}
        items = [(o.at(t), o.status) for o in self.oscillators] + list((extra or {}).items())
        for node, status in items:
            if frame.setdefault(node, status) is not status:
                raise NetdiffError(f"conflicting statuses at {node!r} in step {t}")
        self.frames.append(frame)

    def cylinders(self) -> List[Cylinder]:
        return [
            Cylinder.of([n for n, s in f.items() if s is Status.ACTIVE], [n for n, s in f.items() if s is Status.INACTIVE])
            for f in self.frames
        ]


def _timed_path(net: Network, source: NodeId, start: int, target: NodeId,
                blocked: Callable[[NodeId, int], bool], arrival_parity: Optional[int],
                limit: int = SEARCH_LIMIT) -> Optional[List[NodeId]]:
    """Walk from source (at time ``start``) to target, one move per step, dodging blocked (node, time parity)."""
    first = (source, start % 2)
    if blocked(source, start):
        return None
    parent: Dict[Tuple[NodeId, int], Optional[Tuple[NodeId, int]]] = {first: None}
    queue = deque([first])
    while queue and len(parent) <= limit:
        state = queue.popleft()
        node, par = state
        if node == target and (arrival_parity is None or par == arrival_parity):
            path = [state]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return [n for n, _ in reversed(path)]
        for y in net.neighbors(node):
            nxt = (y, 1 - par)
            if nxt not in parent and not blocked(y, 1 - par):
                parent[nxt] = state
                queue.append(nxt)
    return None


def _witness_parity(net: Network, config: ConfigDescriptor, parity: Optional[int]) -> Optional[int]:
    if parity is None:
        return None

    def both(q: int) -> bool:
        pattern = config.even if q == 0 else config.odd
        if pattern.value == "Mixed":
            return True
        return any(net.parity(n) == q and s.value != pattern.value for n, s in config.normalized(net).exceptions)

    if both(parity):
        return parity
    if both(1 - parity):
        return 1 - parity
    raise MissingWitnesses("no parity block carries both an active and an inactive node")


def _choose_star(region: Network, targets: Sequence[NodeId], config: ConfigDescriptor,
                 parity: Optional[int]) -> ComplexStar:
    near_targets = set(targets) | {z for t in targets for z in region.neighbors(t)}
    exceptions = [n for n in config.exception_nodes if region.contains(n)]
    halo = set(exceptions) | {z for n in exceptions for z in region.neighbors(n)}
    dist = bfs_distances(region, targets[0])
    centers = sorted(dist, key=lambda z: (dist[z], node_key(z)))
    if parity is not None:
        centers = [c for c in centers if region.parity_hint(c) != parity]
    for avoid in (frozenset(near_targets | halo), frozenset(near_targets)):
        for c in centers:
            star = star_at(region, c, avoid)
            if star is not None:
                return star
    raise TargetTooLarge("no complex star in the window is disjoint from the target closure")


def _reach_radius(net: Network, config: ConfigDescriptor, center: NodeId, radius: int) -> int:
    """radius, widened so the ball around center holds every exception of config with two rings to spare."""
    far = [_distance(net, center, e) for e in config.normalized(net).exception_nodes]
    reach = max([radius] + [d + 2 for d in far if d is not None])
    if reach > radius:
        logger.info(f"Widening the synthesis window from radius {radius} to {reach}")
    return reach


def check_length_parity(traj: Trajectory, parity: Optional[int], witness_parity: Optional[int]) -> None:
    """Same-parity witnesses and targets are joined by an even number of steps."""
    if parity is not None and witness_parity == parity and traj.length % 2:
        raise InvalidTrajectory(
            f"trajectory of odd length {traj.length} between same-parity witnesses and targets",
            {"length": traj.length, "parity": parity},
        )


def build_trajectory(net: Network, config: ConfigDescriptor, target: Cylinder, window_radius: int = 8,
                     region: Optional[Network] = None) -> Trajectory:
    """Centrage, star normalization, then placement of targets by decreasing distance from the star."""
    targets = list(target.X) + list(target.Y)
    if not targets or _holds(net, config, target):
        return Trajectory(steps=[target], notes={"held": True})
    parity = None
    if net.bipartite:
        parities = {net.parity(z) for z in targets}
        if len(parities) > 1:
            raise BlocksMixed("the target cylinder spans both parity blocks")
        parity = parities.pop()
    if region is None:
        if net.is_finite:
            region = net
        else:
            region = Window.ball(net, targets[0], _reach_radius(net, config, targets[0], window_radius))
    if not find_complex_stars(region, cap=1):
        raise RichnessViolated("stars", f"{region.name} has no complex star")

    stored = storing_by_parity(region, target.X, target.Y)
    if isinstance(stored, StoringFailure):
        raise RichnessViolated("storing", "the target cannot be stored", stored.to_json())
    witness_parity = _witness_parity(net, config, parity)
    star = _choose_star(region, targets, config, witness_parity)
    x, y = find_witnesses(region, config, star, witness_parity)
    logger.info(f"Building trajectory with star at {star.s_star!r}, witnesses {x!r} / {y!r}")

    centrage = synth_centrage(region, config, star, x, y)
    normalize = synth_star(region, star, _branch_pc(star, centrage.steps[-1]), {1: Status.ACTIVE, 2: Status.INACTIVE})
    head = _concat(centrage, normalize)

    timeline = _Timeline(frames=[{**{a: Status.ACTIVE for a in c.X}, **{b: Status.INACTIVE for b in c.Y}} for c in head])
    hp = timeline.now % 2
    sources = {
        Status.ACTIVE: _Oscillator(star.s1, star.s_star, Status.ACTIVE, hp),
        Status.INACTIVE: _Oscillator(star.s2, star.s2p, Status.INACTIVE, hp),
    }
    tails = {Status.ACTIVE: star.s1p, Status.INACTIVE: star.s2p}
    timeline.oscillators.extend(sources.values())

    dist = bfs_distances(region, star.s_star)
    order = sorted(targets, key=lambda z: (-dist.get(z, 0), node_key(z)))
    arrival_parity: Optional[int] = None
    for z in order:
        sigma = Status.ACTIVE if z in target.X else Status.INACTIVE
        sources[sigma].away = star.s_star
        sources[sigma.flipped()].away = tails[sigma.flipped()]
        path = _timed_path(region, star.s_star, timeline.now + 1, z, timeline.blocked(sigma), arrival_parity)
        if path is None:
            raise TargetTooLarge(f"no placement path to {z!r}", {"node": node_json(z)})
        for node in path:
            timeline.advance({node: sigma})
        arrival_parity = timeline.now % 2
        timeline.oscillators.append(_Oscillator(z, stored.theta[z], sigma, arrival_parity))
        if (timeline.now - hp) % 2:
            timeline.advance()
    if timeline.now % 2 != arrival_parity:
        timeline.advance()
    timeline.frames[-1] = {**{a: Status.ACTIVE for a in target.X}, **{b: Status.INACTIVE for b in target.Y}}

    traj = Trajectory(
        steps=timeline.cylinders(),
        notes={
            "star": star.to_json(),
            "case": centrage.notes["case"],
            "witnesses": centrage.notes["witnesses"],
            "witness_parity": witness_parity,
            "phases": {
                "centrage": centrage.length,
                "star": normalize.length,
                "placement": len(timeline.frames) - len(head),
            },
        },
    )
    check = validate_trajectory(net, traj)
    if not check.valid:
        raise InvalidTrajectory(f"synthesized trajectory fails at step {check.failing_step}")
    check_length_parity(traj, parity, witness_parity)
    return traj.model_copy(update={"checker_verified": True, "certificates": check.certificates})
