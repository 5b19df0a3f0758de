import pytest

from netdiff.errors import InvalidNetwork, NotBipartite, SpecError, UnknownNetwork, UnknownNode
from netdiff.models import Boundary, Pattern
from netdiff.network import (
    Bipartition,
    ExplicitNetwork,
    OddCycle,
    Window,
    bfs_distances,
    bipartite_subnetwork,
    bipartition,
    twin_leaf_network,
    intra_block_edge,
    line_network,
    load_network_json,
    network_from_name,
    validate,
)


def test_square_lattice_neighbors(z2, z2inf):
    assert z2.neighbors((0, 0)) == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    assert z2.gamma == 4
    assert z2inf.gamma == 8
    assert len(z2inf.neighbors((3, -2))) == 8
    assert (0, 0) not in z2inf.neighbors((0, 0))


def test_unknown_node_is_reported(z2):
    with pytest.raises(UnknownNode):
        z2.neighbors((0, 0, 0))


def test_parity_and_odd_cycle(z2, z2inf):
    assert z2.bipartite
    assert z2.parity((2, 1)) == 1
    assert z2.parity((-1, -1)) == 0
    assert not z2inf.bipartite
    cycle = z2inf.odd_cycle()
    assert len(cycle) == 3
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        assert b in z2inf.neighbors(a)
    with pytest.raises(NotBipartite):
        z2inf.parity((0, 0))


def test_hex_pavement_is_three_regular_and_symmetric(hexnet):
    for i in range(-3, 4):
        for j in range(-3, 4):
            around = hexnet.neighbors((i, j))
            assert len(set(around)) == 3
            for y in around:
                assert (i, j) in hexnet.neighbors(y)
                assert hexnet.parity(y) != hexnet.parity((i, j))


def test_hierarchy_structure(tree):
    assert tree.children(0) == [1, 2]
    assert tree.parent(3) == 1
    assert tree.parent(6) == 2
    assert tree.neighbors(1) == [0, 3, 4]
    assert tree.neighbors(0) == [1, 2]
    assert tree.depth(5) == 2
    assert tree.parity(5) == 0
    assert tree.parity(2) == 1
    assert tree.gamma == 3


def test_hierarchy_with_branching_function():
    from netdiff.network import Hierarchy

    net = Hierarchy(lambda n: 1 + n % 2, max_branching=2)
    assert net.children(0) == [1]
    assert net.children(1) == [2, 3]
    assert net.parent(3) == 1
    with pytest.raises(SpecError):
        Hierarchy(lambda n: 1)


def test_network_from_name():
    assert network_from_name("zd-l1:3").gamma == 6
    assert network_from_name("zd-linf:1").gamma == 2
    assert network_from_name("hierarchy:3").gamma == 4
    assert network_from_name("line").is_finite
    with pytest.raises(UnknownNetwork):
        network_from_name("torus")
    with pytest.raises(UnknownNetwork):
        network_from_name("zd-l1:x")


def test_load_network_fixtures():
    line = load_network_json("configuration/networks/line.json")
    assert len(line.nodes()) == 9
    assert line.bipartite
    twins = load_network_json("configuration/networks/twin_leaf.json")
    assert twins.name == "twin_leaf"
    assert twins.bipartite
    assert twins.neighbors("alpha") == twins.neighbors("beta") == [(0, 0)]
    linked = load_network_json("configuration/networks/twin_leaf_linked.json")
    assert not linked.bipartite
    assert len(linked.odd_cycle()) == 3
    assert isinstance(bipartition(linked), OddCycle)


def test_validate_reports_defects():
    report = validate(ExplicitNetwork({1: [1, 2], 2: [1]}))
    assert not report.irreflexive
    report = validate(ExplicitNetwork({1: [2], 2: []}))
    assert not report.symmetric
    report = validate(ExplicitNetwork({1: [2], 2: [1], 3: [4], 4: [3]}))
    assert not report.connected
    assert not report.passed
    report = validate(line_network(5), gamma=1)
    assert not report.bounded


def test_load_rejects_invalid_graph(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"nodes": [1, 2, 3], "edges": [[1, 2]]}')
    with pytest.raises(InvalidNetwork):
        load_network_json(path)


def test_bfs_distances(z2):
    dist = bfs_distances(z2, (0, 0), 2)
    assert dist[(1, 1)] == 2
    assert len(dist) == 13
    with pytest.raises(SpecError):
        bfs_distances(z2, (0, 0))


def test_every_component_is_colored():
    net = ExplicitNetwork.from_edges([1, 2, 3, 4, 5], [(1, 2), (3, 4), (4, 5)])
    assert net.bipartite
    assert net.parity(1) == 0
    assert net.parity(2) == 1
    assert net.parity(3) == net.parity(5) != net.parity(4)


def test_odd_cycle_witness_is_a_closed_walk():
    pentagon = ExplicitNetwork.from_edges(range(5), [(k, (k + 1) % 5) for k in range(5)])
    cycle = pentagon.odd_cycle()
    assert sorted(cycle) == [0, 1, 2, 3, 4]
    assert all(b in pentagon.neighbors(a) for a, b in zip(cycle, cycle[1:] + cycle[:1]))
    with pytest.raises(NotBipartite):
        pentagon.parity(0)


def test_odd_cycle_away_from_the_origin_is_found():
    net = ExplicitNetwork.from_edges([1, 2, 3, 4, 5], [(1, 2), (3, 4), (4, 5), (3, 5)])
    assert not net.bipartite
    assert sorted(net.odd_cycle()) == [3, 4, 5]


def test_bfs_distances_on_finite_network():
    dist = bfs_distances(line_network(7), (0,), 2)
    assert dist == {(-2,): 2, (-1,): 1, (0,): 0, (1,): 1, (2,): 2}
    assert max(bfs_distances(line_network(7), (-3,)).values()) == 6
    with pytest.raises(UnknownNode):
        bfs_distances(line_network(7), (9,))


def test_bipartition_of_finite_network():
    split = bipartition(line_network(5))
    assert isinstance(split, Bipartition)
    assert len(split.evens) == 3
    assert len(split.odds) == 2


def test_bipartite_subnetwork_of_linf(z2inf):
    layered = bipartite_subnetwork(z2inf, (0, 0))
    assert layered.bipartite
    assert (1, 1) in layered.neighbors((0, 0))
    assert (1, 0) not in layered.neighbors((0, 1))
    explicit = bipartite_subnetwork(twin_leaf_network(radius=1, linked=True), (0, 0))
    assert explicit.bipartite


def test_intra_block_edge_on_non_bipartite(z2inf, z2):
    checker = Bipartition(parity=lambda x: sum(x) % 2)
    edge = intra_block_edge(z2inf, checker)
    assert edge is not None
    assert checker.parity(edge[0]) == checker.parity(edge[1])
    assert intra_block_edge(z2, checker, limit=200) is None


def test_window_box_and_ball(z2):
    box = Window.box(z2, [(0, 2), (0, 2)])
    assert len(box.nodes()) == 9
    assert box.neighbors((0, 0)) == [(0, 1), (1, 0)]
    assert len(box.full_neighbors((0, 0))) == 4
    assert box.describe() == {"boundary": "FrozenInactive", "bounds": [[0, 2], [0, 2]]}
    ball = Window.ball(z2, (0, 0), 2)
    assert len(ball.nodes()) == 13


def test_window_boundary_policies(z2):
    inside = lambda y: y == (0, 0)
    frozen = Window.box(z2, [(0, 2), (0, 2)], Boundary.FROZEN_ACTIVE)
    assert frozen.outside_status((-1, 0), inside)
    nearest = Window.box(z2, [(0, 2), (0, 2)], Boundary.EXTEND_NEAREST)
    assert nearest.outside_status((-1, 0), inside)
    assert not nearest.outside_status((3, 0), inside)
    torus = Window.box(z2, [(0, 3), (0, 3)], Boundary.TORUS)
    assert (3, 0) in torus.neighbors((0, 0))
    base = Window.box(z2, [(0, 2), (0, 2)], Boundary.EXTEND_BASE, (Pattern.ACTIVE, Pattern.INACTIVE))
    assert not base.outside_status((-1, 0), inside, step=0)
    assert base.outside_status((-1, 0), inside, step=1)
    with pytest.raises(SpecError):
        Window.box(z2, [(0, 2), (0, 2)], Boundary.EXTEND_BASE)
