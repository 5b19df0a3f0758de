from fractions import Fraction

import pytest
from scipy.stats import binomtest

from netdiff.aggregation import Proportion, Threshold
from netdiff.configuration import ConfigDescriptor
from netdiff.dynamics import RngStream
from netdiff.errors import (
    BlocksMixed,
    InvalidTrajectory,
    MissingWitnesses,
    NoStoring,
    NotInFamily,
    NotStrict,
    RichnessViolated,
    SpecError,
    StarOverlap,
)
from netdiff.models import Boundary, Cylinder, Status, Trajectory
from netdiff.network import Window, line_network, load_network_json, twin_leaf_network
from netdiff.reachability import (
    ComplexStar,
    StoringFailure,
    StoringMap,
    build_trajectory,
    check_length_parity,
    check_richness,
    find_complex_stars,
    find_witnesses,
    is_caterpillar,
    is_complex_star,
    is_k_regular,
    probability_lower_bound,
    random_partial_configs,
    realize_trajectory,
    star_at,
    storing_by_parity,
    storing_function,
    synth_centrage,
    synth_propagate,
    synth_star,
    synth_store,
    twin_leaf_pairs,
    validate_trajectory,
)


@pytest.fixture
def caterpillar():
    return load_network_json("configuration/networks/caterpillar.json")


@pytest.fixture
def one_active():
    return ConfigDescriptor.named("AllInactive", {(0, 0): "Active"})


# Structure


def test_star_at_origin(z2):
    star = star_at(z2, (0, 0))
    assert star.branches == ((-1, 0), (0, -1), (0, 1))
    assert star.tails == ((-2, 0), (-1, -1), (-1, 1))
    assert star.clean
    assert is_complex_star(z2, star)
    assert star_at(z2, (0, 0), avoid=frozenset({(0, 0)})) is None


def test_star_free_networks(caterpillar):
    assert find_complex_stars(line_network(21)) == []
    assert find_complex_stars(caterpillar) == []


def test_caterpillar_form(caterpillar):
    report = is_caterpillar(caterpillar)
    assert report.is_caterpillar
    assert report.spine_kind == "path"
    assert report.spine == ["b", "c", "d"]
    assert report.pendants == {"b": ["a", "b1"], "d": ["d1", "d2", "e"]}


def test_box_is_not_a_caterpillar(z2):
    window = Window.box(z2, [(-2, 2), (-2, 2)])
    assert not is_caterpillar(window).is_caterpillar
    assert len(find_complex_stars(window, cap=3)) == 3


def test_regularity(z2):
    assert is_k_regular(Window.box(z2, [(0, 3), (0, 3)], Boundary.TORUS)) == 4
    assert is_k_regular(line_network(5)) is None


def test_storing_function_on_the_lattice(z2):
    result = storing_function(z2, [(0, 0)], [(2, 0)])
    assert isinstance(result, StoringMap)
    assert result.theta[(0, 0)] in z2.neighbors((0, 0))
    assert result.theta[(2, 0)] in z2.neighbors((2, 0))
    assert result.theta[(0, 0)] != result.theta[(2, 0)]
    with pytest.raises(BlocksMixed):
        storing_function(z2, [(0, 0)], [(1, 0)])
    with pytest.raises(SpecError):
        storing_function(z2, [(0, 0)], [(0, 0)])


def test_twin_leaves_block_storing(caterpillar):
    failure = storing_function(caterpillar, ["d1"], ["d2"])
    assert isinstance(failure, StoringFailure)
    assert failure.twins == [("d1", "d2")]
    assert failure.hall_neighbors == ["d"]
    shared = storing_function(caterpillar, ["d1", "d2"], [])
    assert isinstance(shared, StoringMap)
    assert shared.method == "search"
    assert twin_leaf_pairs(caterpillar) == [("a", "b1"), ("d1", "d2"), ("d2", "e")]


def test_leaves_hung_on_one_node_cannot_be_separated():
    failure = storing_function(twin_leaf_network(radius=2), ["alpha"], ["beta"])
    assert isinstance(failure, StoringFailure)
    assert failure.twins == [("alpha", "beta")]


def test_hierarchy_stores_on_children(tree):
    result = storing_function(tree, [1], [2])
    assert result.method == "first-child"
    assert result.theta == {1: 3, 2: 5}


def test_storing_by_parity_merges_blocks(z2):
    result = storing_by_parity(z2, [(0, 0), (1, 0)], [])
    assert set(result.theta) == {(0, 0), (1, 0)}


def test_random_partial_configs(z2):
    window = Window.box(z2, [(-3, 3), (-3, 3)])
    samples = random_partial_configs(window, 5, 4, RngStream(0), parity=0)
    assert len(samples) == 5
    for X, Y in samples:
        assert len(X) + len(Y) == 4
        assert not set(X) & set(Y)
        assert all(window.parity(x) == 0 for x in X + Y)


def test_richness_verdicts(z2, caterpillar):
    window = Window.box(z2, [(-4, 4), (-4, 4)])
    samples = [([(0, 0)], [(2, 0)]), ([(1, 1), (-1, -1)], [(1, -1)])]
    report = check_richness(window, samples, star_threshold=5)
    assert report.verdict == "consistent with richness"
    assert report.stars_consistent
    assert check_richness(line_network(21)).verdict == "violated: stars"
    assert check_richness(caterpillar, star_threshold=0).verdict == "violated: storing"


# Synthesis


def test_validate_trajectory(z2):
    good = Trajectory(steps=[Cylinder.of([(0, 0)]), Cylinder.of([(1, 0)])])
    check = validate_trajectory(z2, good)
    assert check.valid
    assert check.certificates == [{"step": 1, "active": [[[1, 0], [0, 0]]], "inactive": []}]
    bad = Trajectory(steps=[Cylinder.of([(0, 0)]), Cylinder.of([(2, 0)])])
    check = validate_trajectory(z2, bad)
    assert not check.valid
    assert (check.failing_step, check.failing_node) == (1, [2, 0])


def test_probability_lower_bound(z2):
    traj = Trajectory(steps=[Cylinder.of([(0, 0)], [(1, 1)]), Cylinder.of([(1, 0)], [(0, 1)])])
    assert probability_lower_bound(z2, Proportion(gamma=4), traj) == Fraction(1, 16)
    with pytest.raises(NotStrict):
        probability_lower_bound(z2, Threshold(q=Fraction(1, 2), gamma=4), traj)
    bad = Trajectory(steps=[Cylinder.of([(0, 0)]), Cylinder.of([(2, 0)])])
    with pytest.raises(InvalidTrajectory):
        probability_lower_bound(z2, Proportion(gamma=4), bad)


def test_synth_store(z2, caterpillar):
    traj = synth_store(z2, [(0, 0)], [(2, 0)], 4)
    assert traj.length == 4
    assert traj.steps[0] == traj.steps[2] == traj.steps[4] == Cylinder.of([(0, 0)], [(2, 0)])
    assert validate_trajectory(z2, traj).valid
    with pytest.raises(SpecError):
        synth_store(z2, [(0, 0)], [(2, 0)], 3)
    with pytest.raises(NoStoring):
        synth_store(caterpillar, ["d1"], ["d2"], 2)


def test_synth_propagate(z2):
    traj = synth_propagate(z2, (0, 0), (3, 0))
    assert traj.length == 3
    assert traj.steps[-1] == Cylinder.of([(3, 0)])
    assert validate_trajectory(z2, traj).valid
    quiet = synth_propagate(z2, (0, 0), (0, 2), carry=Status.INACTIVE)
    assert quiet.steps[-1] == Cylinder.of((), [(0, 2)])


def test_synth_star_exchanges_branches(z2):
    star = star_at(z2, (0, 0))
    traj = synth_star(z2, star, {1: Status.ACTIVE, 2: Status.INACTIVE}, {1: Status.INACTIVE, 2: Status.ACTIVE})
    assert traj.length % 2 == 0
    assert traj.steps[0] == Cylinder.of([star.s1], [star.s2])
    assert traj.steps[-1] == Cylinder.of([star.s2], [star.s1])
    assert validate_trajectory(z2, traj).valid
    with pytest.raises(NotInFamily):
        synth_star(z2, star, {1: Status.ACTIVE}, {2: Status.ACTIVE, 1: Status.INACTIVE})
    with pytest.raises(NotInFamily):
        synth_star(z2, star, {4: Status.ACTIVE, 1: Status.INACTIVE}, {1: Status.ACTIVE, 2: Status.INACTIVE})


def test_centrage_brings_witnesses_to_the_branches(z2, one_active):
    star = star_at(z2, (3, -2))
    assert star.branches == ((2, -2), (3, -3), (3, -1))
    traj = synth_centrage(z2, one_active, star)
    assert traj.notes["case"] == "closer-inactive"
    assert traj.notes["witnesses"] == {"active": [0, 0], "inactive": [2, -2]}
    assert traj.steps[0] == Cylinder.of([(0, 0)], [(2, -2)])
    assert traj.steps[-1] == Cylinder.of([(3, -1)], [(2, -2)])
    assert traj.length == 4


def test_centrage_refusals(z2, caterpillar):
    star = star_at(z2, (3, -2))
    crowded = ConfigDescriptor.named("AllInactive", {(0, 0): "Active", (1, -3): "Active"})
    with pytest.raises(StarOverlap):
        synth_centrage(z2, crowded, star, x=(0, 0), y=(2, -2))
    twins = ConfigDescriptor.named("AllInactive", {"d1": "Active"})
    anywhere = ComplexStar(s_star="c", s1="b", s2="d", s3="a", s1p="b1", s2p="e", s3p="d1")
    with pytest.raises(RichnessViolated) as excinfo:
        synth_centrage(caterpillar, twins, anywhere, x="d1", y="d2")
    assert excinfo.value.details["clause"] == "storing"


def test_find_witnesses_needs_both_statuses(z2):
    region = Window.ball(z2, (0, 0), 3)
    star = star_at(region, (0, 0))
    with pytest.raises(MissingWitnesses):
        find_witnesses(region, ConfigDescriptor.named("AllInactive"), star, 1)


def test_build_trajectory_reaches_the_target(z2, one_active):
    target = Cylinder.of([(1, 0)], [(0, 1)])
    traj = build_trajectory(z2, one_active, target)
    assert traj.checker_verified
    assert traj.steps[-1] == target
    assert all(one_active.is_active(x, z2) for x in traj.steps[0].X)
    assert not any(one_active.is_active(y, z2) for y in traj.steps[0].Y)
    assert traj.notes["witnesses"]["active"] == [0, 0]
    assert len(traj.certificates) == traj.length
    assert probability_lower_bound(z2, Proportion(gamma=4), traj) > 0


def test_build_trajectory_reaches_a_far_witness(z2):
    far = ConfigDescriptor.named("AllInactive", {(10, 1): "Active"})
    target = Cylinder.of([(1, 0)], [(0, 1)])
    traj = build_trajectory(z2, far, target, window_radius=4)
    assert traj.checker_verified
    assert traj.steps[-1] == target
    assert traj.notes["witnesses"]["active"] == [10, 1]


def test_odd_length_between_same_parity_ends_is_rejected():
    odd = Trajectory(steps=[Cylinder.of([(1, 0)], []), Cylinder.of([(0, 0)], [])])
    with pytest.raises(InvalidTrajectory):
        check_length_parity(odd, 1, 1)
    check_length_parity(odd, 1, 0)
    check_length_parity(odd, None, None)


def test_build_trajectory_shortcuts_and_refusals(z2, one_active):
    held = build_trajectory(z2, one_active, Cylinder.of([(0, 0)], [(2, 0)]))
    assert held.length == 0
    assert held.notes == {"held": True}
    with pytest.raises(BlocksMixed):
        build_trajectory(z2, one_active, Cylinder.of([(1, 0)], [(0, 0)]))
    line = line_network(21)
    config = ConfigDescriptor.named("AllInactive", {line.origin: "Active"})
    with pytest.raises(RichnessViolated) as excinfo:
        build_trajectory(line, config, Cylinder.of([(-1,)], [(1,)]))
    assert excinfo.value.clause == "stars"


def test_realize_trajectory_hits_a_short_path(z2, one_active):
    traj = synth_propagate(z2, (0, 0), (1, 0))
    A = Proportion(gamma=4)
    outcomes = [realize_trajectory(z2, A, one_active, traj, RngStream(seed)) for seed in range(60)]
    assert any(ok for ok, _ in outcomes)
    assert all(ok or failing == 1 for ok, failing in outcomes)
    empty = ConfigDescriptor.named("AllInactive")
    assert realize_trajectory(z2, A, empty, traj, RngStream(0)) == (False, 0)


def test_realization_frequency_respects_the_bound(z2, one_active):
    traj = synth_propagate(z2, (0, 0), (1, 0))
    A = Proportion(gamma=4)
    bound = probability_lower_bound(z2, A, traj)
    rng = RngStream(23)
    n = 500
    hits = sum(realize_trajectory(z2, A, one_active, traj, rng.child(i))[0] for i in range(n))
    assert binomtest(hits, n, float(bound), alternative="less").pvalue > 0.01
