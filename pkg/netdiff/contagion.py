"""
Threshold contagion experiments: frontier counts, spread tests from finite
seeds, empirical contagion thresholds on a q grid, and the absorbing shape
gallery.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import yaml
from tqdm import tqdm

from .aggregation import to_fraction
from .configuration import WindowConfig
from .dynamics import boolean_step, is_absorbing_state, usable_workers
from .errors import NotFrontier, SpecError
from .models import Boundary, GalleryEntry, NodeId, ThresholdEstimate, node_json, parse_node
from .network import Network, Window, network_from_name
from .setops import NodeSet, ball, frontier, materialize, membership

logger = logging.getLogger("netdiff.contagion")

MORRIS_BOUND = Fraction(1, 2)


def frontier_eta(net: Network, X: NodeSet, x: NodeId, step: int = 0) -> int:
    """η(x) = |Γ(x) ∩ X| for a node on the inner or outer frontier of X."""
    X = materialize(net, X)
    inner, outer = frontier(net, X, step)
    if not (inner.contains(x) or outer.contains(x)):
        raise NotFrontier(f"{x!r} is not on the frontier", {"node": node_json(x)})
    member = membership(net, X, step)
    return sum(1 for y in net.full_neighbors(x) if member(y))


def frontier_profile(net: Network, X: NodeSet, step: int = 0) -> Dict[str, Dict[str, int]]:
    """Histogram of η over the inner and outer frontier (both must be finite)."""
    X = materialize(net, X)
    member = membership(net, X, step)
    profile = {}
    for side, nodes in zip(("inner", "outer"), frontier(net, X, step)):
        if nodes.cofinite:
            raise SpecError(f"the {side} frontier is infinite")
        counts = Counter(sum(1 for y in net.full_neighbors(x) if member(y)) for x in nodes.members)
        profile[side] = {str(eta): counts[eta] for eta in sorted(counts)}
    return profile


@dataclass
class Spreads:
    radius: int
    steps: int
    monotone: bool
    kind: str = "Spreads"


@dataclass
class Stalls:
    fixed_point: NodeSet
    steps: int
    kind: str = "Stalls"


@dataclass
class Cycles:
    period: int
    kind: str = "Cycles"


@dataclass
class Undecided:
    budget: int
    kind: str = "Undecided"


SpreadVerdict = Union[Spreads, Stalls, Cycles, Undecided]


def spread_test(net: Network, q, X0: Iterable[NodeId], target_radius: int, budget: int,
                center: Optional[NodeId] = None) -> SpreadVerdict:
    """Iterate the threshold step from a finite seed until it covers ball(center, target_radius)."""
    q = to_fraction(q)
    X = NodeSet.of(X0)
    if not X.members:
        raise SpecError("spread tests need a nonempty finite seed")
    target = ball(net, net.origin if center is None else center, target_radius)
    seen: Dict[Tuple, int] = {}
    sizes: List[int] = []
    for t in range(budget + 1):
        if target.issubset(X):
            sizes.append(len(X) if X.is_finite else -1)
            monotone = -1 not in sizes[:-1] and all(a < b or b == -1 for a, b in zip(sizes, sizes[1:]))
            return Spreads(radius=target_radius, steps=t, monotone=monotone)
        key = X.canonical()
        if key in seen:
            if t - seen[key] == 1:
                return Stalls(fixed_point=X, steps=seen[key])
            return Cycles(period=t - seen[key])
        seen[key] = t
        sizes.append(len(X) if X.is_finite else -1)
        if t < budget:
            X = materialize(net, boolean_step(net, q, X, t))
    return Undecided(budget=budget)


def _best_seed(net: Network, seeds: Sequence[List[NodeId]], target_radius: int, budget: int, q: Fraction
               ) -> Tuple[Fraction, Optional[int], str]:
    verdict_kind = "Stalls"
    for i, seed in enumerate(seeds):
        verdict = spread_test(net, q, seed, target_radius, budget)
        if isinstance(verdict, Spreads):
            return q, i, verdict.kind
        if isinstance(verdict, Undecided):
            verdict_kind = verdict.kind
    return q, None, verdict_kind


def default_grid(net: Network) -> List[Fraction]:
    return [Fraction(k, net.gamma) for k in range(net.gamma + 1)]


def contagion_threshold_estimate(net: Network, seeds: Sequence[Iterable[NodeId]],
                                 q_grid: Optional[Sequence] = None, target_radius: int = 10,
                                 budget: int = 50, workers: int = 1, progress: bool = False) -> ThresholdEstimate:
    """Largest grid q at which some seed spreads; anything above 1/2 is logged as a defect."""
    grid = sorted({to_fraction(q) for q in (q_grid if q_grid is not None else default_grid(net))})
    if not grid:
        raise SpecError("the q grid is empty")
    seeds = [list(s) for s in seeds]
    task = partial(_best_seed, net, seeds, target_radius, budget)
    workers = usable_workers(task, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(tqdm(pool.map(task, grid), total=len(grid), disable=not progress, desc="grid"))
    else:
        results = [task(q) for q in tqdm(grid, disable=not progress, desc="grid")]

    verdicts = {str(q): kind for q, _, kind in results}
    spreading = [(q, i) for q, i, _ in results if i is not None]
    if not spreading:
        logger.info(f"No seed spreads on {net.name} for any q in the grid")
        return ThresholdEstimate(estimate=None, label=f"< {grid[0]}", verdicts=verdicts)
    q, i = max(spreading)
    violation = q > MORRIS_BOUND
    if violation:
        logger.error(f"Contagion threshold estimate {q} on {net.name} exceeds 1/2")
    return ThresholdEstimate(
        estimate=str(q),
        label=str(q),
        witness_seed=[node_json(x) for x in seeds[i]],
        verdicts=verdicts,
        morris_violation=violation,
    )


def rectangle_seeds(net: Network, max_side: int = 4) -> List[List[NodeId]]:
    """Rectangles anchored at the origin on lattices, else BFS balls around the origin."""
    origin = net.origin
    if isinstance(origin, tuple) and len(origin) == 2:
        return [
            [(origin[0] + i, origin[1] + j) for i in range(a) for j in range(b)]
            for a in range(1, max_side + 1)
            for b in range(1, max_side + 1)
        ]
    return [ball(net, origin, r).sorted() for r in range(max_side)]


def _shape_set(entry: Dict[str, Any]) -> Tuple[Network, NodeSet]:
    base = network_from_name(entry["net"])
    if "cofinite" in entry:
        return base, NodeSet.all_but(parse_node(n) for n in entry["cofinite"])
    rows = entry["rows"]
    width, height = len(rows[0]), len(rows)
    x0, y0 = entry.get("origin", [0, 0])
    window = Window.box(
        base,
        [(x0, x0 + width - 1), (y0, y0 + height - 1)],
        Boundary(entry.get("boundary", Boundary.FROZEN_INACTIVE.value)),
    )
    return window, WindowConfig.from_rows(window, rows).active_set()


def shape_gallery_check(path: Union[str, Path] = "configuration/shapes.yml") -> List[GalleryEntry]:
    """Absorbing test per named shape and q, cross-checked against the fixed-point test."""
    with open(path, "r") as file:
        shapes = yaml.safe_load(file).get("shapes", [])
    entries = []
    for entry in shapes:
        net, X = _shape_set(entry)
        q = to_fraction(entry["q"])
        report = is_absorbing_state(net, X, q)
        fixpoint = materialize(net, boolean_step(net, q, X)) == materialize(net, X)
        if fixpoint != report.absorbing:
            logger.error(f"Absorbing test and fixed-point test disagree on {entry['name']} at q={q}")
        entries.append(
            GalleryEntry(
                shape=entry["name"],
                net=entry["net"],
                q=str(q),
                expected=bool(entry["expected"]),
                observed=report.absorbing,
                fixpoint=fixpoint,
                agrees=report.absorbing == bool(entry["expected"]) and fixpoint == report.absorbing,
                violations=report.violations,
            )
        )
    logger.info(f"Checked {len(entries)} shapes from {path}")
    return entries
