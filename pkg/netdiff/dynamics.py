"""
The transition kernel: exact one-step laws, sampling on descriptors and
windows, the deterministic threshold step, run/cycle detection, extinction
schedules and Monte Carlo absorption statistics.
"""

from __future__ import annotations

import itertools
import logging
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from .aggregation import (
    AggregationFunction,
    Threshold,
    activation_probability,
    classify,
    evaluate,
    evaluate_exact,
    probability_float,
    to_fraction,
    value_table,
)
from .configuration import BASES, ConfigDescriptor, WindowConfig, block_classify, neighbor_statuses
from .errors import (
    ArityExceeded,
    ExtinctionStalled,
    NotBipartite,
    NotSingleParity,
    NotStrict,
    SpecError,
    TooLarge,
    UnsupportedBase,
)
from .models import (
    AbsorbingReport,
    BlockForecast,
    Boundary,
    Cardinality,
    CardinalityForecast,
    MonteCarloReport,
    NodeId,
    RunSummary,
    Status,
    TraceRecord,
    node_json,
    sort_nodes,
)
from .network import Network, Window
from .setops import NodeSet, ParityBlock, closure, frontier, interior, iterate, materialize, membership

logger = logging.getLogger("netdiff.dynamics")

State = Union[NodeSet, ParityBlock, ConfigDescriptor, WindowConfig]


@dataclass(frozen=True)
class PartialLaw:
    """Exact product law of the next statuses on a finite node set Y."""

    Y: Tuple[NodeId, ...]
    probabilities: Dict[Tuple[int, ...], Fraction]

    def probability(self, assignment: Dict[NodeId, int]) -> Fraction:
        return self.probabilities.get(tuple(int(assignment[y]) for y in self.Y), Fraction(0))

    @property
    def total(self) -> Fraction:
        return sum(self.probabilities.values(), Fraction(0))

    def to_json(self) -> Dict[str, Any]:
        return {
            "Y": [node_json(y) for y in self.Y],
            "law": [
                {"assignment": list(bits), "p": float(p), "exact": str(p)} for bits, p in self.probabilities.items()
            ],
        }


def partial_law(net: Network, A: AggregationFunction, config, Y: Iterable[NodeId], limit: int = 20) -> PartialLaw:
    """Enumerate the product of per-node Bernoulli terms over {0,1}^Y (zero-probability entries omitted)."""
    nodes = tuple(sort_nodes(set(Y)))
    if len(nodes) > limit:
        raise TooLarge(f"2^{len(nodes)} assignments exceed the enumeration limit 2^{limit}")
    p = [activation_probability(net, A, config, y) for y in nodes]
    law: Dict[Tuple[int, ...], Fraction] = {}
    for bits in itertools.product((0, 1), repeat=len(nodes)):
        prob = Fraction(1)
        for bit, pi in zip(bits, p):
            prob *= pi if bit else 1 - pi
            if not prob:
                break
        if prob:
            law[bits] = prob
    return PartialLaw(Y=nodes, probabilities=law)


class RngStream:
    """Splittable PCG64 stream identified by (seed, stream key)."""

    def __init__(self, seed: int, stream: Tuple[int, ...] = ()):
        self.seed = int(seed)
        self.stream = tuple(stream)
        self._generator = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.stream))
        )

    def random(self, size: Optional[int] = None):
        return self._generator.random(size)

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream + (index,))


# Run outcomes


@dataclass
class FixedPoint:
    config: State
    at_step: int
    kind: str = "FixedPoint"


@dataclass
class Cycle:
    period: int
    first_index: int
    members: List[State] = field(default_factory=list)
    incomparable: Optional[bool] = None
    kind: str = "Cycle"


@dataclass
class BudgetExceeded:
    last: State
    support_sizes: List[int]
    kind: str = "BudgetExceeded"


@dataclass
class Absorbed:
    at: str
    step: int
    kind: str = "Absorbed"


RunOutcome = Union[FixedPoint, Cycle, BudgetExceeded, Absorbed]


@dataclass
class DeterministicRun:
    outcome: RunOutcome
    trace: List[TraceRecord]
    support_sizes: List[int]


def outcome_json(outcome: RunOutcome) -> Dict[str, Any]:
    if isinstance(outcome, FixedPoint):
        return {"outcome": "FixedPoint", "at_step": outcome.at_step}
    if isinstance(outcome, Cycle):
        return {
            "outcome": "Cycle",
            "period": outcome.period,
            "first_index": outcome.first_index,
            "incomparable": outcome.incomparable,
        }
    if isinstance(outcome, BudgetExceeded):
        return {"outcome": "BudgetExceeded", "support_sizes": outcome.support_sizes}
    return {"outcome": "Absorbed", "at": outcome.at, "step": outcome.step}


# Descriptor steps


def _check_descriptor(net: Network, config: ConfigDescriptor) -> None:
    if not config.homogeneous:
        raise UnsupportedBase(f"base {config.base_name} cannot be stepped exactly")
    if config.even != config.odd and not net.bipartite:
        raise NotBipartite(f"base {config.base_name} needs a bipartite network, {net.name} is not")


def _descriptor_step(net: Network, config: ConfigDescriptor, decide: Callable[[NodeId], bool]) -> ConfigDescriptor:
    """Advance the base deterministically and redraw only the nodes of clo(exceptions)."""
    _check_descriptor(net, config)
    config = config.normalized(net)
    image = config.base_image()
    if not config.exceptions:
        return image
    halo = materialize(net, closure(net, NodeSet.of(config.exception_nodes))).sorted()
    exceptions = []
    for x in halo:
        bit = decide(x)
        if bit != image.base_bit(x, net):
            exceptions.append((x, Status.of(bit)))
    return ConfigDescriptor(even=image.even, odd=image.odd, exceptions=exceptions)


def sample_step(net: Network, A: AggregationFunction, config: ConfigDescriptor, rng: RngStream) -> ConfigDescriptor:
    """Exact sample of one step of the infinite process from a descriptor."""
    if classify(A).kind != "Strict":
        raise NotStrict(f"{A.describe()} is not strict; exact descriptor sampling needs a strict function")

    def decide(x: NodeId) -> bool:
        return bool(rng.random() < probability_float(A, neighbor_statuses(net, config, x)))

    return _descriptor_step(net, config, decide)


def boolean_step_descriptor(net: Network, q, config: ConfigDescriptor) -> ConfigDescriptor:
    q = to_fraction(q)
    if q == 0:
        return ConfigDescriptor(base="AllActive")
    A = Threshold(q=q, gamma=net.gamma)
    return _descriptor_step(net, config, lambda x: evaluate_exact(A, neighbor_statuses(net, config, x)) == 1)


# Window steps


def _window_counts(config: WindowConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(extended status vector, active-neighbor counts, degrees) for every region node."""
    window = config.window
    idx, deg, ring = window.neighbor_table()
    index = window.index
    statuses = config.statuses

    def inside(z: NodeId) -> bool:
        return bool(statuses[index[z]])

    ring_bits = np.array([window.outside_status(y, inside, config.step) for y in ring], dtype=bool)
    extended = np.concatenate([statuses, ring_bits, np.zeros(1, dtype=bool)])
    ones = extended[idx].sum(axis=1)
    return extended, ones, deg


def sample_step_window(window: Window, A: AggregationFunction, config: WindowConfig, rng: RngStream) -> WindowConfig:
    """Redraw every region node independently; the one-ring follows the boundary policy."""
    if config.window is not window:
        config = WindowConfig(window, config.statuses, config.step)
    extended, ones, deg = _window_counts(config)
    if A.anonymous:
        table = value_table(A, int(deg.max()))
        p = table[deg, ones]
        if np.isnan(p).any():
            raise ArityExceeded(f"{A.describe()} is undefined for some degree in the window")
    else:
        idx = window.neighbor_table()[0]
        p = np.array([evaluate(A, extended[idx[i, : deg[i]]].astype(int)) for i in range(len(deg))])
    draws = rng.random(len(deg))
    return config.with_statuses(draws < p)


def _window_interval_violations(before: WindowConfig, after: WindowConfig) -> int:
    _, ones, deg = _window_counts(before)
    forced_on = ones == deg
    forced_off = ones == 0
    return int(((forced_on & ~after.statuses) | (forced_off & after.statuses)).sum())


def _window_deterministic_image(config: WindowConfig) -> Optional[WindowConfig]:
    """Next configuration when every neighborhood is homogeneous (strict A), else None."""
    _, ones, deg = _window_counts(config)
    if not np.all((ones == 0) | (ones == deg)):
        return None
    return config.with_statuses(ones == deg)


# Boolean (threshold) dynamics


def _proportion(net: Network, member: Callable[[NodeId], bool], x: NodeId) -> Tuple[int, int]:
    around = net.full_neighbors(x)
    return sum(1 for y in around if member(y)), len(around)


def boolean_step(net: Network, q, X: Union[NodeSet, ParityBlock], step: int = 0) -> Union[NodeSet, ParityBlock]:
    """X' = {x : |Γ(x) ∩ X| / |Γ(x)| >= q}, compared exactly."""
    q = to_fraction(q)
    if isinstance(X, ParityBlock):
        if q == 0:
            return NodeSet.full()
        if not net.bipartite:
            raise NotBipartite(f"{net.name} has no bipartition blocks")
        return ParityBlock(1 - X)
    if q == 0:
        return materialize(net, NodeSet.full())
    if net.is_finite:
        X = materialize(net, X)
        member = membership(net, X, step)
        return NodeSet.of(x for x in net.nodes() if Fraction(*_proportion(net, member, x)) >= q)
    if not X.cofinite:
        candidates = closure(net, X).members
        return NodeSet.of(x for x in candidates if Fraction(*_proportion(net, X.contains, x)) >= q)
    # Off clo(Xᶜ) every neighbor is in X
    candidates = closure(net, ~X).members
    return NodeSet.all_but(x for x in candidates if Fraction(*_proportion(net, X.contains, x)) < q)


def support_size(state: State, net: Optional[Network] = None) -> int:
    """Exceptions relative to the base; plain size for finite sets."""
    if isinstance(state, WindowConfig):
        return state.count()
    if isinstance(state, ParityBlock):
        return 0
    if isinstance(state, ConfigDescriptor):
        return len(state.normalized(net).exceptions)
    return len(state.members)


def trace_record(net: Network, state: State, step: int, event: str, limit: int = 1000) -> TraceRecord:
    base = None
    active: List[NodeId] = []
    inactive: Optional[List[NodeId]] = None
    if isinstance(state, WindowConfig):
        active = state.active_set().sorted()
    elif isinstance(state, ParityBlock):
        base = "EvenActive" if state is ParityBlock.EVEN else "OddActive"
    elif isinstance(state, ConfigDescriptor):
        state = state.normalized(net)
        base = state.base_name
        active = state.active_exceptions()
        inactive = state.inactive_exceptions() or None
    elif state.cofinite:
        base = "AllActive"
        inactive = state.sorted()
    else:
        active = state.sorted()
    truncated = len(active) > limit or (inactive is not None and len(inactive) > limit)
    window = state.window if isinstance(state, WindowConfig) else net if isinstance(net, Window) else None
    return TraceRecord(
        step=step,
        support_size=support_size(state, net),
        active=[node_json(x) for x in active[:limit]],
        event=event,
        base=base,
        inactive=[node_json(x) for x in inactive[:limit]] if inactive is not None else None,
        truncated=True if truncated else None,
        window=window.describe() if window is not None else None,
    )


def _state_key(net: Network, state: State, step: int) -> Tuple:
    if isinstance(state, ParityBlock):
        key: Tuple = ("block", int(state))
    elif isinstance(state, WindowConfig):
        key = ("window", state.statuses.tobytes())
    else:
        key = state.canonical()
    if isinstance(net, Window) and net.boundary is Boundary.EXTEND_BASE:
        key = (key, step % 2)
    return key


def _pairwise_incomparable(members: List[State]) -> Optional[bool]:
    sets = []
    for m in members:
        if isinstance(m, ConfigDescriptor):
            try:
                m = m.active_set()
            except SpecError:
                return None
        sets.append(m)
    if all(isinstance(s, ParityBlock) for s in sets):
        return True
    if any(isinstance(s, ParityBlock) for s in sets):
        return None
    return all(not a.issubset(b) for a, b in itertools.permutations(sets, 2))


def run_deterministic(net: Network, q, X0: Union[NodeSet, ParityBlock, ConfigDescriptor], budget: int,
                      trace_limit: int = 1000) -> DeterministicRun:
    """Iterate the threshold step until a configuration repeats or the budget runs out."""
    q = to_fraction(q)
    state: State = materialize(net, X0) if isinstance(X0, NodeSet) else X0
    if isinstance(state, ConfigDescriptor):
        state = state.normalized(net)
    seen: Dict[Tuple, int] = {}
    history: List[State] = []
    sizes: List[int] = []
    trace: List[TraceRecord] = []
    for t in range(budget + 1):
        key = _state_key(net, state, t)
        if key in seen:
            first = seen[key]
            period = t - first
            if period == 1:
                outcome: RunOutcome = FixedPoint(config=state, at_step=first)
                event = "fixed-point"
            else:
                members = history[first:t]
                incomparable = _pairwise_incomparable(members)
                if incomparable is False:
                    logger.error(f"Cycle of period {period} has comparable members")
                outcome = Cycle(period=period, first_index=first, members=members, incomparable=incomparable)
                event = "cycle"
            trace.append(trace_record(net, state, t, event, trace_limit))
            logger.info(f"Deterministic run ended with {outcome.kind} at step {t}")
            return DeterministicRun(outcome, trace, sizes)
        seen[key] = t
        history.append(state)
        sizes.append(support_size(state, net))
        if t == budget:
            trace.append(trace_record(net, state, t, "budget", trace_limit))
            break
        trace.append(trace_record(net, state, t, "init" if t == 0 else "step", trace_limit))
        if isinstance(state, ConfigDescriptor):
            state = boolean_step_descriptor(net, q, state).normalized(net)
        else:
            state = boolean_step(net, q, state, t)
    logger.info(f"Deterministic run exceeded its budget of {budget} steps")
    return DeterministicRun(BudgetExceeded(last=state, support_sizes=sizes), trace, sizes)


def is_absorbing_state(net: Network, X: NodeSet, q, step: int = 0) -> AbsorbingReport:
    """X is absorbing for the threshold dynamics iff every frontier node stays on its side.

    Per-node degrees replace the constant γ, so this agrees with boolean_step(X) == X.
    """
    q = to_fraction(q)
    X = materialize(net, X)
    if q == 0:
        full = materialize(net, NodeSet.full())
        missing = full - X
        if missing.is_finite and not missing.members:
            return AbsorbingReport(absorbing=True)
        examples = missing.sorted()[:10] if missing.is_finite else []
        return AbsorbingReport(
            absorbing=False,
            violations=[{"node": node_json(x), "side": "outer", "eta": None, "degree": None} for x in examples]
            or [{"node": None, "side": "outer", "eta": None, "degree": None}],
        )
    member = membership(net, X, step)
    inner, outer = frontier(net, X, step)
    clo = materialize(net, closure(net, X, step))
    inn = materialize(net, interior(net, X, step))
    stranded = X - clo
    enclosed = inn - X
    violations = []
    for side, nodes, keeps in (
        ("inner", inner | stranded, True),
        ("outer", outer | enclosed, False),
    ):
        for x in nodes.sorted():
            eta, deg = _proportion(net, member, x)
            if (Fraction(eta, deg) >= q) != keeps:
                violations.append({"node": node_json(x), "side": side, "eta": eta, "degree": deg})
    return AbsorbingReport(absorbing=not violations, violations=violations)


def extinction_schedule(net: Network, X0: NodeSet) -> List[NodeSet]:
    """X0, int²(X0), int⁴(X0), ... down to the empty set."""
    if not net.bipartite:
        raise NotBipartite(f"{net.name} is not bipartite")
    X = materialize(net, X0)
    if X.cofinite:
        raise SpecError("extinction schedules start from a finite set")
    if len({net.parity(x) for x in X.members}) > 1:
        raise NotSingleParity("the initial set spans both parity blocks")
    chain = [X]
    while chain[-1].members:
        nxt = iterate(interior, 2, net, chain[-1])
        if nxt == chain[-1] or not nxt.issubset(chain[-1]):
            raise ExtinctionStalled(
                f"int² does not shrink {len(chain[-1])} nodes",
                {"set": [node_json(x) for x in chain[-1].sorted()]},
            )
        chain.append(nxt)
    return chain


def _forecast(card: Cardinality, gamma: int) -> BlockForecast:
    if card.kind == "Zero":
        return BlockForecast(kinds=["Zero"], bound=0)
    if card.kind == "Inf":
        return BlockForecast(kinds=["Inf"])
    bound = gamma * card.count if card.count is not None else None
    return BlockForecast(kinds=["Zero", "Fin"], bound=bound)


def one_step_cardinality(net: Network, config: ConfigDescriptor) -> CardinalityForecast:
    """Next-step block cardinalities under a strict A: each block feeds the opposite one."""
    block = block_classify(net, config)
    gamma = net.gamma
    return CardinalityForecast(
        even_inactive=_forecast(block.odd_inactive, gamma),
        even_active=_forecast(block.odd_active, gamma),
        odd_inactive=_forecast(block.even_inactive, gamma),
        odd_active=_forecast(block.even_active, gamma),
    )


# Stochastic runs


def _absorbed(net: Network, state: Union[ConfigDescriptor, WindowConfig]) -> Optional[str]:
    if isinstance(state, WindowConfig):
        if not state.statuses.any():
            return "Empty"
        if state.statuses.all():
            return "Full"
        return None
    state = state.normalized(net)
    if state.exceptions:
        return None
    if (state.even, state.odd) == BASES["AllInactive"]:
        return "Empty"
    if (state.even, state.odd) == BASES["AllActive"]:
        return "Full"
    return None


def _in_two_cycle(net: Network, state: Union[ConfigDescriptor, WindowConfig]) -> bool:
    if isinstance(state, WindowConfig):
        image = _window_deterministic_image(state)
        if image is None or np.array_equal(image.statuses, state.statuses):
            return False
        back = _window_deterministic_image(image)
        return back is not None and np.array_equal(back.statuses, state.statuses)
    state = state.normalized(net)
    return not state.exceptions and (state.even, state.odd) in (BASES["EvenActive"], BASES["OddActive"])


def interval_violations(net: Network, before: State, after: State) -> int:
    """Nodes breaking int(S) ⊆ S' ⊆ clo(S) over one step; an infinite set of them counts once."""
    if isinstance(before, WindowConfig):
        return _window_interval_violations(before, after)
    try:
        S = before.to_nodeset()
        S_next = after.to_nodeset()
    except SpecError:
        return _blockwise_interval_violations(net, before, after)
    inner = materialize(net, interior(net, S))
    outer = materialize(net, closure(net, S))
    S_next = materialize(net, S_next)
    missing = inner - S_next
    extra = S_next - outer
    count = (len(missing) if missing.is_finite else 1) + (len(extra) if extra.is_finite else 1)
    return count


def _blockwise_interval_violations(net: Network, before: ConfigDescriptor, after: ConfigDescriptor) -> int:
    """Checkerboard bases: the far field must carry the base image; nodes near an exception are checked one by one."""
    before = before.normalized(net)
    after = after.normalized(net)
    image = before.base_image()
    if (after.even, after.odd) != (image.even, image.odd):
        return 1
    near = set(before.exception_nodes) | set(after.exception_nodes)
    for x in before.exception_nodes:
        near.update(net.full_neighbors(x))
    count = 0
    for x in near:
        around = [before.is_active(y, net) for y in net.full_neighbors(x)]
        now = after.is_active(x, net)
        if (all(around) and not now) or (not any(around) and now):
            count += 1
    return count


def simulate_run(net: Network, A: AggregationFunction, initial: Union[ConfigDescriptor, WindowConfig],
                 horizon: int, rng: RngStream, trace_limit: int = 1000) -> Iterator[TraceRecord]:
    """Stochastic trace: the initial record then one record per step up to the horizon."""
    state = initial
    for t in range(horizon + 1):
        absorbed = _absorbed(net, state)
        if t == 0:
            event = "init"
        elif absorbed is not None:
            event = f"absorbed-{absorbed.lower()}"
        else:
            event = "step"
        yield trace_record(net, state, t, event, trace_limit)
        if t < horizon:
            state = _sample(net, A, state, rng)


def _sample(net: Network, A: AggregationFunction, state, rng: RngStream):
    if isinstance(state, WindowConfig):
        return sample_step_window(state.window, A, state, rng)
    return sample_step(net, A, state, rng)


def _run_once(net: Network, A: AggregationFunction, initial: Union[ConfigDescriptor, WindowConfig],
              horizon: int, seed: int, run: int) -> RunSummary:
    rng = RngStream(seed, (run,))
    state = initial
    sizes: List[int] = []
    violations = 0
    for t in range(horizon + 1):
        sizes.append(support_size(state, net))
        absorbed = _absorbed(net, state)
        if absorbed is not None:
            return RunSummary(run=run, outcome="Absorbed", absorbed_at=absorbed, step=t,
                              support_sizes=sizes, interval_violations=violations)
        if _in_two_cycle(net, state):
            return RunSummary(run=run, outcome="Cycle", step=t, support_sizes=sizes, interval_violations=violations)
        if t == horizon:
            break
        nxt = _sample(net, A, state, rng)
        violations += interval_violations(net, state, nxt)
        state = nxt
    return RunSummary(run=run, outcome="BudgetExceeded", step=horizon, support_sizes=sizes,
                      interval_violations=violations)


def usable_workers(task: Callable, workers: int) -> int:
    """workers, or 1 when the task cannot be pickled for a process pool."""
    if workers <= 1:
        return 1
    try:
        pickle.dumps(task)
    except (pickle.PicklingError, AttributeError, TypeError) as e:
        logger.warning(f"Task cannot be sent to worker processes ({str(e)}); running in this process")
        return 1
    return workers


def monte_carlo(net: Network, A: AggregationFunction, initial: Union[ConfigDescriptor, WindowConfig],
                n_runs: int, horizon: int, seed: int, workers: int = 1, progress: bool = False) -> MonteCarloReport:
    """Independent runs, one derived stream per run index, reduced in run order."""
    if n_runs < 1:
        raise SpecError("n_runs must be at least 1")
    if classify(A).kind != "Strict":
        raise NotStrict(f"{A.describe()} is not strict")
    task = partial(_run_once, net, A, initial, horizon, seed)
    workers = usable_workers(task, workers)
    logger.info(f"Starting {n_runs} Monte Carlo runs with horizon {horizon} on {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(tqdm(pool.map(task, range(n_runs)), total=n_runs, disable=not progress, desc="runs"))
    else:
        results = [task(run) for run in tqdm(range(n_runs), disable=not progress, desc="runs")]
    results.sort(key=lambda r: r.run)

    def freq(predicate) -> float:
        return sum(1 for r in results if predicate(r)) / n_runs

    times = [r.step for r in results if r.outcome == "Absorbed"]
    violations = sum(r.interval_violations for r in results)
    if violations:
        logger.error(f"{violations} interval containment violations across {n_runs} runs")
    return MonteCarloReport(
        n_runs=n_runs,
        horizon=horizon,
        seed=seed,
        freq_empty=freq(lambda r: r.absorbed_at == "Empty"),
        freq_full=freq(lambda r: r.absorbed_at == "Full"),
        freq_cycle=freq(lambda r: r.outcome == "Cycle"),
        freq_budget=freq(lambda r: r.outcome == "BudgetExceeded"),
        mean_absorption_time=sum(times) / len(times) if times else None,
        interval_violations=violations,
        runs=results,
    )
