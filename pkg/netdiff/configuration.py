"""
Configurations: finitely-describable descriptors on infinite networks,
dense window configurations, and the block taxonomy.

A ConfigDescriptor is a base pattern per parity block (Inactive, Active or
Mixed) plus a finite set of exceptions that contradict the base.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import FiniteNetwork, InvalidConfiguration, NotBipartite, OutOfRegion, SpecError
from .models import (
    BlockDescriptor,
    Cardinality,
    NodeId,
    Pattern,
    PlainBlock,
    Status,
    node_json,
    node_key,
    parse_node,
)
from .network import Bipartition, Network, Window, pattern_bit
from .setops import NodeSet, ParityBlock

BASES: Dict[str, Tuple[Pattern, Pattern]] = {
    "AllInactive": (Pattern.INACTIVE, Pattern.INACTIVE),
    "AllActive": (Pattern.ACTIVE, Pattern.ACTIVE),
    "EvenActive": (Pattern.ACTIVE, Pattern.INACTIVE),
    "OddActive": (Pattern.INACTIVE, Pattern.ACTIVE),
}
_BASE_NAMES = {v: k for k, v in BASES.items()}

_FLIP = {Pattern.ACTIVE: Pattern.INACTIVE, Pattern.INACTIVE: Pattern.ACTIVE, Pattern.MIXED: Pattern.MIXED}


class ConfigDescriptor(BaseModel):
    """Homogeneous base per parity block plus finitely many exceptions."""

    model_config = ConfigDict(frozen=True)

    even: Pattern = Pattern.INACTIVE
    odd: Pattern = Pattern.INACTIVE
    exceptions: Tuple[Tuple[NodeId, Status], ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _parse(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        base = data.pop("base", None)
        if isinstance(base, str):
            if base not in BASES:
                raise ValueError(f"unknown base {base!r}")
            data["even"], data["odd"] = BASES[base]
        elif isinstance(base, dict):
            data["even"], data["odd"] = base.get("even", "Inactive"), base.get("odd", "Inactive")
        entries = []
        for entry in data.get("exceptions", ()):
            node, status = entry
            entries.append((parse_node(node), Status(status)))
        nodes = [n for n, _ in entries]
        if len(set(nodes)) != len(nodes):
            raise ValueError("a node appears twice among the exceptions")
        data["exceptions"] = tuple(sorted(entries, key=lambda e: node_key(e[0])))
        return data

    @classmethod
    def named(cls, base: str, exceptions: Union[Dict[NodeId, Status], Iterable[Tuple[NodeId, Status]]] = ()) -> "ConfigDescriptor":
        items = exceptions.items() if isinstance(exceptions, dict) else exceptions
        return cls(base=base, exceptions=[(n, s) for n, s in items])

    @classmethod
    def from_nodeset(cls, X: NodeSet) -> "ConfigDescriptor":
        if X.cofinite:
            return cls.named("AllActive", {x: Status.INACTIVE for x in X.members})
        return cls.named("AllInactive", {x: Status.ACTIVE for x in X.members})

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ConfigDescriptor":
        try:
            with open(path, "r") as f:
                return cls.model_validate(json.load(f))
        except (OSError, ValueError) as e:
            raise InvalidConfiguration(f"cannot read descriptor {path}: {str(e)}")

    @property
    def base_name(self) -> str:
        return _BASE_NAMES.get((self.even, self.odd), f"Even{self.even.value}/Odd{self.odd.value}")

    @property
    def homogeneous(self) -> bool:
        return Pattern.MIXED not in (self.even, self.odd)

    @cached_property
    def exception_map(self) -> Dict[NodeId, Status]:
        return dict(self.exceptions)

    @property
    def exception_nodes(self) -> List[NodeId]:
        return [n for n, _ in self.exceptions]

    def active_exceptions(self) -> List[NodeId]:
        return [n for n, s in self.exceptions if s is Status.ACTIVE]

    def inactive_exceptions(self) -> List[NodeId]:
        return [n for n, s in self.exceptions if s is Status.INACTIVE]

    def pattern_at(self, x: NodeId, net: Optional[Network] = None) -> Pattern:
        if self.even == self.odd:
            return self.even
        if net is None:
            raise SpecError(f"base {self.base_name} needs a network to resolve parities")
        return self.even if net.parity_hint(x) == 0 else self.odd

    def base_bit(self, x: NodeId, net: Optional[Network] = None) -> bool:
        pattern = self.pattern_at(x, net)
        if pattern is Pattern.MIXED and net is None:
            raise SpecError("a network is needed to resolve a Mixed pattern")
        return pattern_bit(pattern, net, x)

    def status_of(self, x: NodeId, net: Optional[Network] = None) -> Status:
        status = self.exception_map.get(x)
        if status is not None:
            return status
        return Status.of(self.base_bit(x, net))

    def is_active(self, x: NodeId, net: Optional[Network] = None) -> bool:
        return self.status_of(x, net) is Status.ACTIVE

    def normalized(self, net: Optional[Network] = None) -> "ConfigDescriptor":
        """Drop exceptions that agree with the base."""
        kept = [(n, s) for n, s in self.exceptions if Status.of(self.base_bit(n, net)) is not s]
        if len(kept) == len(self.exceptions):
            return self
        return ConfigDescriptor(even=self.even, odd=self.odd, exceptions=kept)

    def swap(self) -> "ConfigDescriptor":
        """Exchange Active and Inactive everywhere."""
        return ConfigDescriptor(
            even=_FLIP[self.even],
            odd=_FLIP[self.odd],
            exceptions=tuple((n, s.flipped()) for n, s in self.exceptions),
        )

    def base_image(self) -> "ConfigDescriptor":
        """Deterministic image of the base under one step of a bipartite network."""
        return ConfigDescriptor(even=self.odd, odd=self.even)

    def to_nodeset(self) -> NodeSet:
        if (self.even, self.odd) == BASES["AllInactive"]:
            return NodeSet.of(self.active_exceptions())
        if (self.even, self.odd) == BASES["AllActive"]:
            return NodeSet.all_but(self.inactive_exceptions())
        raise SpecError(f"base {self.base_name} is neither finite nor cofinite")

    def active_set(self) -> Union[NodeSet, ParityBlock]:
        """NodeSet view of AllInactive/AllActive bases, block view of a bare Even/Odd base."""
        if (self.even, self.odd) == BASES["EvenActive"] and not self.exceptions:
            return ParityBlock.EVEN
        if (self.even, self.odd) == BASES["OddActive"] and not self.exceptions:
            return ParityBlock.ODD
        return self.to_nodeset()

    def canonical(self) -> Tuple:
        return (self.even.value, self.odd.value, tuple((node_key(n), s.value) for n, s in self.exceptions))

    def to_json(self) -> Dict[str, Any]:
        base: Any = self.base_name if (self.even, self.odd) in _BASE_NAMES else {"even": self.even.value, "odd": self.odd.value}
        return {"base": base, "exceptions": [[node_json(n), s.value] for n, s in self.exceptions]}


@dataclass
class WindowConfig:
    """Dense status array over a window region (in window.nodes() order)."""

    window: Window
    statuses: np.ndarray
    step: int = 0

    def __post_init__(self):
        self.statuses = np.asarray(self.statuses, dtype=bool)
        if self.statuses.shape != (len(self.window.region),):
            raise InvalidConfiguration(
                f"status array of shape {self.statuses.shape} for a region of {len(self.window.region)} nodes"
            )

    @classmethod
    def empty(cls, window: Window) -> "WindowConfig":
        return cls(window, np.zeros(len(window.region), dtype=bool))

    @classmethod
    def full(cls, window: Window) -> "WindowConfig":
        return cls(window, np.ones(len(window.region), dtype=bool))

    @classmethod
    def from_nodeset(cls, window: Window, X: NodeSet, step: int = 0) -> "WindowConfig":
        return cls(window, np.array([X.contains(x) for x in window.nodes()], dtype=bool), step)

    @classmethod
    def from_descriptor(cls, window: Window, config: ConfigDescriptor) -> "WindowConfig":
        return cls(window, np.array([config.is_active(x, window.base) for x in window.nodes()], dtype=bool))

    @classmethod
    def checkerboard(cls, window: Window, parity: int = 0) -> "WindowConfig":
        """Nodes of the given coordinate parity active."""
        return cls(window, np.array([window.parity_hint(x) == parity for x in window.nodes()], dtype=bool))

    @classmethod
    def from_rows(cls, window: Window, rows: Sequence[str]) -> "WindowConfig":
        """Row-major rows, top row = largest y, x ascending; '#'/'1' active, '.'/'0' inactive."""
        (x0, x1), (y0, y1) = _plane_bounds(window)
        if len(rows) != y1 - y0 + 1 or any(len(r) != x1 - x0 + 1 for r in rows):
            raise InvalidConfiguration(f"rows do not match a {x1 - x0 + 1}x{y1 - y0 + 1} window")
        active = set()
        for r, row in enumerate(rows):
            y = y1 - r
            for c, ch in enumerate(row):
                if ch not in "#.01":
                    raise InvalidConfiguration(f"unexpected character {ch!r} in rows")
                if ch in "#1":
                    active.add((x0 + c, y))
        return cls.from_nodeset(window, NodeSet.of(active))

    def to_rows(self, on: str = "1", off: str = "0") -> List[str]:
        (x0, x1), (y0, y1) = _plane_bounds(self.window)
        index = self.window.index
        return [
            "".join(on if self.statuses[index[(x, y)]] else off for x in range(x0, x1 + 1))
            for y in range(y1, y0 - 1, -1)
        ]

    def status_of(self, x: NodeId) -> Status:
        if x not in self.window.index:
            raise OutOfRegion(f"{x!r} is outside the window", {"node": node_json(x)})
        return Status.of(self.statuses[self.window.index[x]])

    def is_active(self, x: NodeId) -> bool:
        return self.status_of(x) is Status.ACTIVE

    def active_set(self) -> NodeSet:
        nodes = self.window.nodes()
        return NodeSet.of(nodes[i] for i in np.flatnonzero(self.statuses))

    def count(self) -> int:
        return int(self.statuses.sum())

    def with_statuses(self, statuses: np.ndarray, step: Optional[int] = None) -> "WindowConfig":
        return WindowConfig(self.window, statuses, self.step + 1 if step is None else step)


def _plane_bounds(window: Window) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    if window.bounds is None or len(window.bounds) != 2:
        raise InvalidConfiguration("row layout needs a two-dimensional box window")
    return window.bounds[0], window.bounds[1]


def neighbor_statuses(net: Network, config: Union[ConfigDescriptor, WindowConfig], x: NodeId) -> List[int]:
    """Ordered 0/1 statuses of Γ(x) under config (window boundary resolved at config.step)."""
    if isinstance(config, WindowConfig):
        window = config.window
        index = window.index
        statuses = config.statuses

        def inside(z: NodeId) -> bool:
            return bool(statuses[index[z]])

        out = []
        for y in window.full_neighbors(x):
            out.append(int(inside(y) if y in index else window.outside_status(y, inside, config.step)))
        return out
    return [int(config.is_active(y, net)) for y in net.full_neighbors(x)]


# Taxonomy labels for the 25 blocks (even-inactive, even-active, odd-inactive, odd-active).
_LABEL_GROUPS: Dict[str, List[Tuple[str, str, str, str]]] = {
    "class-1": [("0", "Inf", "0", "Inf")],
    "class-2": [("Inf", "0", "Inf", "0")],
    "class-3": [("0", "Inf", "Inf", "0"), ("Inf", "0", "0", "Inf")],
    "class-4": [("Inf", "Inf", "Inf", "Inf")],
    "class-5": [("Inf", "0", "Inf", "Inf"), ("Inf", "Inf", "Inf", "0")],
    "class-6": [("0", "Inf", "Inf", "Inf"), ("Inf", "Inf", "0", "Inf")],
    "transient-a": [("Inf", "F", "Inf", "F")],
    "transient-b": [("F", "Inf", "F", "Inf")],
    "transient-c": [("F", "Inf", "Inf", "F"), ("Inf", "F", "F", "Inf")],
    "transient-d": [("Inf", "F", "Inf", "Inf"), ("Inf", "Inf", "Inf", "F")],
    "transient-e": [("F", "Inf", "Inf", "Inf"), ("Inf", "Inf", "F", "Inf")],
    "transient-f": [("Inf", "F", "Inf", "0"), ("Inf", "0", "Inf", "F")],
    "transient-g": [("F", "Inf", "0", "Inf"), ("0", "Inf", "F", "Inf")],
    "transient-h": [("0", "Inf", "Inf", "F"), ("Inf", "F", "0", "Inf")],
    "transient-i": [("F", "Inf", "Inf", "0"), ("Inf", "0", "F", "Inf")],
}
BLOCK_LABELS: Dict[Tuple[str, str, str, str], str] = {
    block: label for label, blocks in _LABEL_GROUPS.items() for block in blocks
}

PLAIN_LABELS: Dict[Tuple[str, str], str] = {
    ("Inf", "0"): "finite-class",
    ("0", "Inf"): "finite-class",
    ("Inf", "Inf"): "infinite-class",
    ("Inf", "F"): "transient",
    ("F", "Inf"): "transient",
}


def _block_pair(pattern: Pattern, active_exc: int, inactive_exc: int) -> Tuple[Cardinality, Cardinality]:
    if pattern is Pattern.INACTIVE:
        return Cardinality.inf(), Cardinality.from_count(active_exc)
    if pattern is Pattern.ACTIVE:
        return Cardinality.from_count(inactive_exc), Cardinality.inf()
    return Cardinality.inf(), Cardinality.inf()


def block_classify(net: Network, config: ConfigDescriptor) -> BlockDescriptor:
    """Exact (even-inactive, even-active, odd-inactive, odd-active) block and its label."""
    if net.is_finite:
        raise FiniteNetwork("block taxonomy needs an infinite network; use window_counts")
    if not net.bipartite:
        raise NotBipartite(f"{net.name} is not bipartite")
    config = config.normalized(net)
    tallies = {(p, s): 0 for p in (0, 1) for s in Status}
    for node, status in config.exceptions:
        tallies[(net.parity(node), status)] += 1
    even = _block_pair(config.even, tallies[(0, Status.ACTIVE)], tallies[(0, Status.INACTIVE)])
    odd = _block_pair(config.odd, tallies[(1, Status.ACTIVE)], tallies[(1, Status.INACTIVE)])
    block = BlockDescriptor(even_inactive=even[0], even_active=even[1], odd_inactive=odd[0], odd_active=odd[1])
    return block.model_copy(update={"taxonomy_label": BLOCK_LABELS.get(block.symbols)})


def block_classify_plain(net: Network, config: ConfigDescriptor) -> PlainBlock:
    """(inactive, active) counts over the whole network, valid with or without a bipartition."""
    if net.is_finite:
        raise FiniteNetwork("block taxonomy needs an infinite network; use window_counts")
    config = config.normalized(net)
    patterns = {config.even, config.odd}
    n_active = len(config.active_exceptions())
    n_inactive = len(config.inactive_exceptions())
    inactive = Cardinality.inf() if patterns & {Pattern.INACTIVE, Pattern.MIXED} else Cardinality.from_count(n_inactive)
    active = Cardinality.inf() if patterns & {Pattern.ACTIVE, Pattern.MIXED} else Cardinality.from_count(n_active)
    block = PlainBlock(inactive=inactive, active=active)
    return block.model_copy(update={"taxonomy_label": PLAIN_LABELS.get(block.symbols)})


def window_counts(config: WindowConfig, bip: Bipartition) -> BlockDescriptor:
    """Per-block counts inside the window, all censored."""
    tallies = {(p, s): 0 for p in (0, 1) for s in (0, 1)}
    for x, bit in zip(config.window.nodes(), config.statuses):
        tallies[(bip.parity(x), int(bit))] += 1

    def card(p: int, s: int) -> Cardinality:
        return Cardinality.fin(tallies[(p, s)], censored=True)

    return BlockDescriptor(
        even_inactive=card(0, 0),
        even_active=card(0, 1),
        odd_inactive=card(1, 0),
        odd_active=card(1, 1),
    )
