from fractions import Fraction

import pytest
from scipy.stats import binomtest

from netdiff.aggregation import General, Proportion, Threshold
from netdiff.configuration import ConfigDescriptor, WindowConfig
from netdiff.dynamics import (
    BudgetExceeded,
    Cycle,
    FixedPoint,
    RngStream,
    boolean_step,
    boolean_step_descriptor,
    extinction_schedule,
    interval_violations,
    is_absorbing_state,
    monte_carlo,
    one_step_cardinality,
    outcome_json,
    partial_law,
    run_deterministic,
    sample_step,
    sample_step_window,
    simulate_run,
    usable_workers,
)
from netdiff.errors import (
    ExtinctionStalled,
    NotBipartite,
    NotSingleParity,
    NotStrict,
    SpecError,
    TooLarge,
    UnsupportedBase,
)
from netdiff.models import Boundary
from netdiff.network import Window, line_network
from netdiff.setops import NodeSet, ParityBlock


@pytest.fixture
def one_active():
    return ConfigDescriptor.named("AllInactive", {(0, 0): "Active"})


def test_partial_law_is_a_product(z2, one_active):
    law = partial_law(z2, Proportion(gamma=4), one_active, [(1, 0), (0, 0)])
    assert law.Y == ((0, 0), (1, 0))
    assert law.probabilities == {(0, 0): Fraction(3, 4), (0, 1): Fraction(1, 4)}
    assert law.total == 1
    assert law.probability({(0, 0): 1, (1, 0): 1}) == 0
    with pytest.raises(TooLarge):
        partial_law(z2, Proportion(gamma=4), one_active, [(k, 0) for k in range(5)], limit=4)


def test_rng_streams_are_reproducible():
    assert list(RngStream(7).random(3)) == list(RngStream(7).random(3))
    assert list(RngStream(7).child(1).random(3)) != list(RngStream(7).child(2).random(3))


def test_sample_step_stays_in_the_closure(z2, one_active):
    A = Proportion(gamma=4)
    first = sample_step(z2, A, one_active, RngStream(3))
    again = sample_step(z2, A, one_active, RngStream(3))
    assert first.canonical() == again.canonical()
    assert first.base_name == "AllInactive"
    assert set(first.active_exceptions()) <= {(-1, 0), (1, 0), (0, -1), (0, 1)}


def test_sample_step_matches_the_law(z2, one_active):
    law = partial_law(z2, Proportion(gamma=4), one_active, [(0, 0), (1, 0)])
    expected = float(law.probabilities[(0, 1)])
    rng = RngStream(11)
    n = 2000
    hits = sum(
        (1, 0) in sample_step(z2, Proportion(gamma=4), one_active, rng.child(i)).active_exceptions() for i in range(n)
    )
    assert binomtest(hits, n, expected).pvalue > 1e-4


def test_sample_step_refusals(z2, z2inf, one_active):
    with pytest.raises(NotStrict):
        sample_step(z2, Threshold(q=Fraction(1, 2), gamma=4), one_active, RngStream(0))
    with pytest.raises(NotBipartite):
        sample_step(z2inf, Proportion(gamma=8), ConfigDescriptor.named("EvenActive"), RngStream(0))
    mixed = ConfigDescriptor(base={"even": "Mixed", "odd": "Inactive"})
    with pytest.raises(UnsupportedBase):
        sample_step(z2, Proportion(gamma=4), mixed, RngStream(0))


def test_bare_parity_base_alternates(z2):
    nxt = sample_step(z2, Proportion(gamma=4), ConfigDescriptor.named("EvenActive"), RngStream(0))
    assert nxt.canonical() == ConfigDescriptor.named("OddActive").canonical()


def test_boolean_step_on_sets(z2):
    pair = NodeSet.of({(0, 0), (2, 0)})
    assert boolean_step(z2, Fraction(1, 2), pair) == NodeSet.of({(1, 0)})
    assert len(boolean_step(z2, Fraction(1, 4), pair)) == 7
    assert boolean_step(z2, Fraction(1, 2), NodeSet.all_but({(0, 0)})) == NodeSet.full()
    ring = {(-1, 0), (1, 0), (0, -1), (0, 1)}
    assert boolean_step(z2, 1, NodeSet.all_but({(0, 0)})) == NodeSet.all_but(ring)
    assert boolean_step(z2, Fraction(1, 2), ParityBlock.EVEN) is ParityBlock.ODD
    assert boolean_step(z2, 0, NodeSet.empty()) == NodeSet.full()


def test_boolean_step_descriptor(z2, one_active):
    assert boolean_step_descriptor(z2, Fraction(1, 2), one_active).canonical() == ConfigDescriptor.named("AllInactive").canonical()
    spread = boolean_step_descriptor(z2, Fraction(1, 4), one_active)
    assert spread.active_exceptions() == [(-1, 0), (0, -1), (0, 1), (1, 0)]


def test_checkerboard_cycles(z2):
    run = run_deterministic(z2, Fraction(1, 2), ParityBlock.EVEN, budget=10)
    assert isinstance(run.outcome, Cycle)
    assert run.outcome.period == 2
    assert run.outcome.incomparable is True
    assert [r.event for r in run.trace] == ["init", "step", "cycle"]
    assert run.trace[0].base == "EvenActive"


def test_single_node_dies(z2, one_active):
    run = run_deterministic(z2, Fraction(1, 2), NodeSet.of({(0, 0)}), budget=10)
    assert isinstance(run.outcome, FixedPoint)
    assert run.outcome.at_step == 1
    assert run.support_sizes == [1, 0]
    assert outcome_json(run.outcome) == {"outcome": "FixedPoint", "at_step": 1}
    descriptor_run = run_deterministic(z2, Fraction(1, 2), one_active, budget=10)
    assert isinstance(descriptor_run.outcome, FixedPoint)
    assert descriptor_run.trace[-1].base == "AllInactive"


def test_budget_is_reported(z2):
    run = run_deterministic(z2, Fraction(1, 4), NodeSet.of({(0, 0)}), budget=3)
    assert isinstance(run.outcome, BudgetExceeded)
    assert [r.event for r in run.trace] == ["init", "step", "step", "budget"]
    assert len(run.outcome.support_sizes) == 4


def test_absorbing_states(z2):
    lone = is_absorbing_state(z2, NodeSet.of({(0, 0)}), Fraction(1, 2))
    assert not lone.absorbing
    assert lone.violations[0] == {"node": [0, 0], "side": "inner", "eta": 0, "degree": 4}
    assert is_absorbing_state(z2, NodeSet.empty(), Fraction(1, 2)).absorbing
    assert is_absorbing_state(z2, NodeSet.full(), 1).absorbing
    assert not is_absorbing_state(z2, NodeSet.empty(), 0).absorbing


def test_absorbing_agrees_with_the_step(z2):
    block = NodeSet.of({(i, j) for i in range(-2, 3) for j in range(-2, 3)})
    for q in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
        report = is_absorbing_state(z2, block, q)
        assert report.absorbing == (boolean_step(z2, q, block) == block)


def test_extinction_schedule(z2, z2inf):
    diamond = NodeSet.of({(0, 0), (1, 1), (2, 0), (1, -1)})
    chain = extinction_schedule(z2, diamond)
    assert chain[0] == diamond
    assert chain[-1] == NodeSet.empty()
    with pytest.raises(NotSingleParity):
        extinction_schedule(z2, NodeSet.of({(0, 0), (1, 0)}))
    with pytest.raises(NotBipartite):
        extinction_schedule(z2inf, diamond)
    with pytest.raises(SpecError):
        extinction_schedule(z2, NodeSet.all_but({(0, 0)}))


def test_extinction_stalls_on_a_finite_path():
    with pytest.raises(ExtinctionStalled):
        extinction_schedule(line_network(3), NodeSet.of({(-1,), (1,)}))


def test_one_step_cardinality(z2, one_active):
    forecast = one_step_cardinality(z2, one_active)
    assert forecast.even_inactive.kinds == ["Inf"]
    assert forecast.even_active.kinds == ["Zero"]
    assert forecast.odd_active.kinds == ["Zero", "Fin"]
    assert forecast.odd_active.bound == 4


def test_window_sampling_respects_frozen_boundary(z2):
    window = Window.box(z2, [(-1, 1), (-1, 1)])
    empty = WindowConfig.empty(window)
    nxt = sample_step_window(window, Proportion(gamma=4), empty, RngStream(1))
    assert nxt.count() == 0
    assert nxt.step == 1


def test_simulate_run_is_reproducible(z2):
    window = Window.box(z2, [(-2, 2), (-2, 2)])
    start = WindowConfig.checkerboard(window)
    A = Proportion(gamma=4)
    first = [r.model_dump() for r in simulate_run(window, A, start, 20, RngStream(11))]
    second = [r.model_dump() for r in simulate_run(window, A, start, 20, RngStream(11))]
    assert first == second
    assert len(first) == 21
    assert first[0]["event"] == "init"
    assert first[0]["window"] == {"boundary": "FrozenInactive", "bounds": [[-2, 2], [-2, 2]]}


def test_monte_carlo_on_a_small_window(z2):
    window = Window.box(z2, [(-1, 1), (-1, 1)])
    start = WindowConfig.from_nodeset(window, NodeSet.of({(0, 0)}))
    A = Proportion(gamma=4)
    report = monte_carlo(window, A, start, n_runs=5, horizon=200, seed=42)
    assert report.n_runs == 5
    assert [r.run for r in report.runs] == list(range(5))
    total = report.freq_empty + report.freq_full + report.freq_cycle + report.freq_budget
    assert total == pytest.approx(1.0)
    assert report.interval_violations == 0
    assert report == monte_carlo(window, A, start, n_runs=5, horizon=200, seed=42)


def test_interval_check_on_checkerboard_descriptors(z2):
    before = ConfigDescriptor.named("EvenActive", {(0, 0): "Inactive"})
    assert interval_violations(z2, before, ConfigDescriptor.named("OddActive", {(1, 0): "Inactive"})) == 0
    assert interval_violations(z2, before, ConfigDescriptor.named("OddActive", {(0, 0): "Active"})) == 1
    assert interval_violations(z2, before, ConfigDescriptor.named("OddActive", {(2, 1): "Inactive"})) == 1
    assert interval_violations(z2, before, ConfigDescriptor.named("EvenActive")) == 1


def test_monte_carlo_from_a_checkerboard_descriptor(z2):
    start = ConfigDescriptor.named("EvenActive", {(0, 0): "Inactive"})
    report = monte_carlo(z2, Proportion(gamma=4), start, n_runs=4, horizon=6, seed=11)
    assert report.n_runs == 4
    assert report.interval_violations == 0


def test_monte_carlo_detects_the_torus_two_cycle(z2):
    torus = Window.box(z2, [(0, 3), (0, 3)], Boundary.TORUS)
    report = monte_carlo(torus, Proportion(gamma=4), WindowConfig.checkerboard(torus), n_runs=3, horizon=10, seed=0)
    assert report.freq_cycle == 1.0


def test_unpicklable_runs_stay_in_process(z2, monkeypatch):
    mean = General(lambda s: Fraction(sum(s), len(s)), gamma=4, name="mean")
    assert usable_workers(mean, 2) == 1
    assert usable_workers(Proportion(gamma=4), 2) == 2
    assert usable_workers(Proportion(gamma=4), 0) == 1

    def no_pool(*args, **kwargs):
        raise AssertionError("process pool started for an unpicklable task")

    monkeypatch.setattr("netdiff.dynamics.ProcessPoolExecutor", no_pool)
    window = Window.box(z2, [(-1, 1), (-1, 1)])
    start = WindowConfig.from_nodeset(window, NodeSet.of({(0, 0)}))
    report = monte_carlo(window, mean, start, n_runs=3, horizon=20, seed=5, workers=2)
    assert report.n_runs == 3
    assert report == monte_carlo(window, mean, start, n_runs=3, horizon=20, seed=5)


def test_monte_carlo_refusals(z2):
    window = Window.box(z2, [(-1, 1), (-1, 1)])
    start = WindowConfig.empty(window)
    with pytest.raises(NotStrict):
        monte_carlo(window, Threshold(q=Fraction(1, 2), gamma=4), start, n_runs=2, horizon=5, seed=0)
    with pytest.raises(SpecError):
        monte_carlo(window, Proportion(gamma=4), start, n_runs=0, horizon=5, seed=0)
