from __future__ import annotations

from enum import Enum, IntEnum
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# A node is a lattice coordinate vector, a nonnegative index (hierarchies) or a label.
NodeId = Union[Tuple[int, ...], int, str]


def node_key(x: NodeId) -> Tuple[int, Any]:
    """Total order on nodes: lattice < indexed < named, then by value."""
    if isinstance(x, tuple):
        return (0, x)
    if isinstance(x, int):
        return (1, x)
    return (2, x)


def sort_nodes(nodes) -> List[NodeId]:
    return sorted(nodes, key=node_key)


def parse_node(raw: Any) -> NodeId:
    """Convert a JSON node id (array, integer or string) into a NodeId."""
    if isinstance(raw, (list, tuple)):
        return tuple(int(c) for c in raw)
    if isinstance(raw, bool):
        raise ValueError(f"invalid node id: {raw!r}")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, str):
        return raw
    raise ValueError(f"invalid node id: {raw!r}")


def node_json(x: NodeId) -> Any:
    return list(x) if isinstance(x, tuple) else x


class Status(str, Enum):
    ACTIVE = "Active"
    INACTIVE = "Inactive"

    @property
    def value_bit(self) -> int:
        return 1 if self is Status.ACTIVE else 0

    def flipped(self) -> "Status":
        return Status.INACTIVE if self is Status.ACTIVE else Status.ACTIVE

    @classmethod
    def of(cls, bit: Union[bool, int]) -> "Status":
        return cls.ACTIVE if bit else cls.INACTIVE


class Parity(IntEnum):
    EVEN = 0
    ODD = 1

    @property
    def label(self) -> str:
        return "Even" if self is Parity.EVEN else "Odd"


class Pattern(str, Enum):
    """Homogeneous status of one parity block in a configuration base."""

    INACTIVE = "Inactive"
    ACTIVE = "Active"
    MIXED = "Mixed"


class Boundary(str, Enum):
    FROZEN_INACTIVE = "FrozenInactive"
    FROZEN_ACTIVE = "FrozenActive"
    TORUS = "Torus"
    EXTEND_BASE = "ExtendBase"
    EXTEND_NEAREST = "ExtendNearest"


class Cardinality(BaseModel):
    """Cardinality code of a block: 0, F (finite, positive) or Inf."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["Zero", "Fin", "Inf"]
    count: Optional[int] = Field(None, description="Exact count for Fin, when known")
    censored: bool = Field(False, description="Count observed inside a finite window only")

    @model_validator(mode="after")
    def _check_count(self) -> "Cardinality":
        if self.kind == "Fin" and not self.censored and self.count is not None and self.count < 1:
            raise ValueError("exact Fin count must be at least 1")
        return self

    @classmethod
    def zero(cls) -> "Cardinality":
        return cls(kind="Zero")

    @classmethod
    def fin(cls, count: Optional[int] = None, censored: bool = False) -> "Cardinality":
        return cls(kind="Fin", count=count, censored=censored)

    @classmethod
    def inf(cls) -> "Cardinality":
        return cls(kind="Inf")

    @classmethod
    def from_count(cls, count: int) -> "Cardinality":
        return cls.zero() if count == 0 else cls.fin(count)

    @property
    def symbol(self) -> str:
        return {"Zero": "0", "Fin": "F", "Inf": "Inf"}[self.kind]


class BlockDescriptor(BaseModel):
    """Position of a configuration in the 25-block taxonomy.

    Tuple order is (even-inactive, even-active, odd-inactive, odd-active).
    """

    even_inactive: Cardinality
    even_active: Cardinality
    odd_inactive: Cardinality
    odd_active: Cardinality
    taxonomy_label: Optional[str] = None

    @property
    def symbols(self) -> Tuple[str, str, str, str]:
        return (
            self.even_inactive.symbol,
            self.even_active.symbol,
            self.odd_inactive.symbol,
            self.odd_active.symbol,
        )

    def report(self) -> Dict[str, Any]:
        return {"tuple": list(self.symbols), "label": self.taxonomy_label}


class BlockForecast(BaseModel):
    """Possible next-step cardinality kinds of one block, with a size bound when finite."""

    kinds: List[Literal["Zero", "Fin", "Inf"]]
    bound: Optional[int] = Field(None, description="Upper bound on the finite count")


class CardinalityForecast(BaseModel):
    even_inactive: BlockForecast
    even_active: BlockForecast
    odd_inactive: BlockForecast
    odd_active: BlockForecast


class PlainBlock(BaseModel):
    """Two-coordinate (inactive, active) block used on non-bipartite networks."""

    inactive: Cardinality
    active: Cardinality
    taxonomy_label: Optional[str] = None

    @property
    def symbols(self) -> Tuple[str, str]:
        return (self.inactive.symbol, self.active.symbol)

    def report(self) -> Dict[str, Any]:
        return {"tuple": list(self.symbols), "label": self.taxonomy_label}


class Cylinder(BaseModel):
    """Partial configuration (X, Y): X forced active, Y forced inactive."""

    model_config = ConfigDict(frozen=True)

    X: Tuple[NodeId, ...] = ()
    Y: Tuple[NodeId, ...] = ()

    @field_validator("X", "Y", mode="before")
    @classmethod
    def _parse_nodes(cls, value: Any) -> Tuple[NodeId, ...]:
        return tuple(sort_nodes({parse_node(v) for v in value}))

    @model_validator(mode="after")
    def _disjoint(self) -> "Cylinder":
        overlap = set(self.X) & set(self.Y)
        if overlap:
            raise ValueError(f"cylinder sets overlap on {sort_nodes(overlap)}")
        return self

    @classmethod
    def of(cls, X=(), Y=()) -> "Cylinder":
        return cls(X=list(X), Y=list(Y))

    @property
    def nodes(self) -> Tuple[NodeId, ...]:
        return self.X + self.Y

    def to_json(self) -> Dict[str, Any]:
        return {"X": [node_json(x) for x in self.X], "Y": [node_json(y) for y in self.Y]}


class TraceRecord(BaseModel):
    """One JSONL trace line. Field order is fixed for diffing."""

    step: int
    support_size: int
    active: List[Any]
    event: str
    base: Optional[str] = None
    inactive: Optional[List[Any]] = None
    truncated: Optional[bool] = None
    window: Optional[Dict[str, Any]] = None


class ValidationReport(BaseModel):
    irreflexive: bool
    symmetric: bool
    bounded: bool
    connected: bool
    gamma: int = Field(..., description="Maximum degree observed")
    failures: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


class AbsorbingReport(BaseModel):
    absorbing: bool
    violations: List[Dict[str, Any]] = Field(default_factory=list)


class CaterpillarReport(BaseModel):
    is_caterpillar: bool
    spine: List[Any] = Field(default_factory=list)
    spine_kind: Optional[Literal["path", "cycle", "trivial"]] = None
    pendants: Dict[str, List[Any]] = Field(default_factory=dict)


class SampleStorability(BaseModel):
    X: List[Any]
    Y: List[Any]
    parity: Optional[str] = None
    storable: bool
    witness: Optional[Dict[str, Any]] = None


class RichnessReport(BaseModel):
    star_count: int
    star_threshold: int
    stars_consistent: bool
    samples: List[SampleStorability] = Field(default_factory=list)
    verdict: str = Field(..., description="'consistent with richness' or 'violated: <clause>'")


class TrajectoryCheck(BaseModel):
    valid: bool
    failing_step: Optional[int] = None
    failing_node: Optional[Any] = None
    certificates: List[Dict[str, Any]] = Field(default_factory=list)


class Trajectory(BaseModel):
    """Sequence of cylinders; every step has positive probability under strict A."""

    steps: List[Cylinder]
    prob_lower_bound: Optional[float] = None
    prob_lower_bound_exact: Optional[str] = None
    checker_verified: Optional[bool] = None
    certificates: Optional[List[Dict[str, Any]]] = None
    notes: Dict[str, Any] = Field(default_factory=dict)

    @property
    def length(self) -> int:
        return len(self.steps) - 1

    def with_bound(self, bound: Fraction) -> "Trajectory":
        return self.model_copy(
            update={"prob_lower_bound": float(bound), "prob_lower_bound_exact": str(bound)}
        )

    def to_json(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"steps": [c.to_json() for c in self.steps]}
        if self.prob_lower_bound is not None:
            doc["prob_lower_bound"] = self.prob_lower_bound
            doc["prob_lower_bound_exact"] = self.prob_lower_bound_exact
        if self.checker_verified is not None:
            doc["checker_verified"] = self.checker_verified
        if self.certificates is not None:
            doc["certificates"] = self.certificates
        if self.notes:
            doc["notes"] = self.notes
        return doc


class RunSummary(BaseModel):
    run: int
    outcome: Literal["Absorbed", "Cycle", "BudgetExceeded"]
    absorbed_at: Optional[Literal["Empty", "Full"]] = None
    step: Optional[int] = None
    support_sizes: List[int] = Field(default_factory=list)
    interval_violations: int = 0


class MonteCarloReport(BaseModel):
    n_runs: int
    horizon: int
    seed: int
    freq_empty: float
    freq_full: float
    freq_cycle: float
    freq_budget: float
    mean_absorption_time: Optional[float] = None
    interval_violations: int = 0
    runs: List[RunSummary] = Field(default_factory=list)


class GalleryEntry(BaseModel):
    shape: str
    net: str
    q: str
    expected: bool
    observed: bool
    fixpoint: bool = Field(..., description="boolean_step(X) == X")
    agrees: bool
    violations: List[Dict[str, Any]] = Field(default_factory=list)


class ThresholdEstimate(BaseModel):
    estimate: Optional[str] = Field(None, description="Largest grid q that spreads, as a fraction")
    label: str
    witness_seed: Optional[List[Any]] = None
    verdicts: Dict[str, str] = Field(default_factory=dict)
    morris_violation: bool = False


class ExperimentSpec(BaseModel):
    """Self-contained description of one CLI experiment. CLI flags override fields."""

    net: str = Field("z2-l1", description="Network name or path to an explicit JSON graph")
    init: Optional[str] = Field(None, description="Initial configuration keyword or JSON file")
    agg: str = Field("proportion", description="Aggregation function spec")
    mode: Literal["stochastic", "deterministic", "law", "classify", "analyze", "contagion", "trajectory"] = "stochastic"
    seed: Optional[int] = None
    steps: Optional[int] = None
    runs: int = 1
    radius: Optional[int] = None
    boundary: Optional[Boundary] = None
    target: Optional[str] = Field(None, description="Target cylinder JSON file")
    out: Optional[str] = None
    format: Literal["json", "jsonl", "pgm", "ascii"] = "jsonl"

    @model_validator(mode="after")
    def _seed_for_stochastic(self) -> "ExperimentSpec":
        if self.mode == "stochastic" and self.seed is None:
            raise ValueError("seed is required in stochastic mode")
        return self
