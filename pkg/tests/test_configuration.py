import numpy as np
import pytest
from pydantic import ValidationError

from netdiff.configuration import (
    ConfigDescriptor,
    WindowConfig,
    block_classify,
    block_classify_plain,
    neighbor_statuses,
    window_counts,
)
from netdiff.errors import FiniteNetwork, InvalidConfiguration, NotBipartite, OutOfRegion, SpecError
from netdiff.models import Boundary, Status
from netdiff.network import Window, bipartition, line_network
from netdiff.setops import NodeSet, ParityBlock


def test_block_classification(z2):
    assert block_classify(z2, ConfigDescriptor.named("AllActive")).report() == {
        "tuple": ["0", "Inf", "0", "Inf"],
        "label": "class-1",
    }
    one = ConfigDescriptor.named("AllInactive", {(0, 0): "Active"})
    block = block_classify(z2, one)
    assert block.symbols == ("Inf", "F", "Inf", "0")
    assert block.even_active.count == 1
    assert block.taxonomy_label == "transient-f"
    assert block_classify(z2, ConfigDescriptor.named("EvenActive")).taxonomy_label == "class-3"


def test_descriptor_file_with_hole(z2):
    config = ConfigDescriptor.load("configuration/init/even_active_one_hole.json")
    assert block_classify(z2, config).symbols == ("F", "Inf", "Inf", "0")
    assert config.status_of((0, 0), z2) is Status.INACTIVE
    assert config.is_active((2, 0), z2)
    assert not config.is_active((1, 0), z2)


def test_redundant_exceptions_are_normalized(z2):
    config = ConfigDescriptor.named("EvenActive", {(0, 0): "Active"})
    assert config.normalized(z2).exceptions == ()
    assert block_classify(z2, config).taxonomy_label == "class-3"


def test_classify_refusals(z2inf):
    with pytest.raises(FiniteNetwork):
        block_classify(line_network(5), ConfigDescriptor.named("AllActive"))
    with pytest.raises(NotBipartite):
        block_classify(z2inf, ConfigDescriptor.named("AllActive"))
    plain = block_classify_plain(z2inf, ConfigDescriptor.named("AllInactive", {(0, 0): "Active"}))
    assert plain.report() == {"tuple": ["Inf", "F"], "label": "transient"}


def test_malformed_descriptors():
    with pytest.raises(InvalidConfiguration):
        ConfigDescriptor.load("configuration/init/malformed.json")
    with pytest.raises(ValidationError):
        ConfigDescriptor(base="AllInactive", exceptions=[[[0, 0], "Active"], [[0, 0], "Inactive"]])


def test_swap_and_sets():
    config = ConfigDescriptor.named("AllInactive", {(0, 0): "Active"})
    swapped = config.swap()
    assert swapped.base_name == "AllActive"
    assert swapped.inactive_exceptions() == [(0, 0)]
    assert swapped.to_nodeset() == NodeSet.all_but({(0, 0)})
    assert config.to_nodeset() == NodeSet.of({(0, 0)})
    assert ConfigDescriptor.named("OddActive").active_set() is ParityBlock.ODD
    assert ConfigDescriptor.named("EvenActive").base_image().base_name == "OddActive"
    assert ConfigDescriptor.from_nodeset(NodeSet.of({(1, 1)})) == ConfigDescriptor.named("AllInactive", {(1, 1): "Active"})


def test_mixed_parity_base_needs_a_network():
    with pytest.raises(SpecError):
        ConfigDescriptor.named("EvenActive").is_active((1, 0))
    with pytest.raises(SpecError):
        ConfigDescriptor.named("EvenActive").to_nodeset()


def test_to_json_keeps_named_base():
    config = ConfigDescriptor.named("OddActive", {(0, 1): "Inactive"})
    assert config.to_json() == {"base": "OddActive", "exceptions": [[[0, 1], "Inactive"]]}


def test_window_rows(z2):
    window = Window.box(z2, [(0, 2), (0, 1)])
    config = WindowConfig.from_rows(window, ["#..", "..#"])
    assert config.is_active((0, 1))
    assert config.is_active((2, 0))
    assert config.count() == 2
    assert config.to_rows(on="#", off=".") == ["#..", "..#"]
    with pytest.raises(InvalidConfiguration):
        WindowConfig.from_rows(window, ["#.."])
    with pytest.raises(InvalidConfiguration):
        WindowConfig.from_rows(window, ["#.x", "..."])
    with pytest.raises(OutOfRegion):
        config.status_of((5, 5))


def test_window_counts_on_checkerboard(z2):
    window = Window.box(z2, [(0, 2), (0, 2)])
    config = WindowConfig.checkerboard(window)
    assert config.count() == 5
    counts = window_counts(config, bipartition(window))
    assert counts.even_active.count == 5
    assert counts.odd_inactive.count == 4
    assert counts.even_inactive.count == 0
    assert counts.even_active.censored


def test_neighbor_statuses_read_the_boundary(z2):
    window = Window.box(z2, [(0, 2), (0, 2)], Boundary.FROZEN_ACTIVE)
    config = WindowConfig.empty(window)
    assert neighbor_statuses(window, config, (0, 0)) == [1, 1, 0, 0]
    assert neighbor_statuses(window, config, (1, 1)) == [0, 0, 0, 0]
    descriptor = ConfigDescriptor.named("AllInactive", {(0, 0): "Active"})
    assert neighbor_statuses(z2, descriptor, (0, 1)) == [0, 1, 0, 0]
    full = WindowConfig.from_descriptor(window, ConfigDescriptor.named("AllActive"))
    assert np.all(full.statuses)
