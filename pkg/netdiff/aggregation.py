"""
Aggregation functions: monotone maps from a neighbor status vector to an activation probability.

All comparisons are exact (fractions.Fraction). Classification is decided on
binary vectors only, since statuses in the dynamics are always 0/1.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

from .configuration import neighbor_statuses
from .errors import ArityExceeded, EndpointViolation, InvalidAggregation, NotMonotone, TooLarge

logger = logging.getLogger("netdiff.aggregation")

# Exhaustive checks on non-anonymous functions enumerate 2^gamma vectors per arity.
MAX_GENERAL_ARITY = 16


def to_fraction(value: Union[int, float, str, Fraction]) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class Threshold:
    """Boolean: 1 iff the fraction of active neighbors is at least q."""

    q: Fraction
    gamma: int
    anonymous = True

    def value(self, ones: int, arity: int) -> Fraction:
        return Fraction(1) if Fraction(ones, arity) >= self.q else Fraction(0)

    def describe(self) -> str:
        return f"threshold:{self.q}"


@dataclass(frozen=True)
class Proportion:
    """Strict: arithmetic mean of the status vector."""

    gamma: int
    anonymous = True

    def value(self, ones: int, arity: int) -> Fraction:
        return Fraction(ones, arity)

    def describe(self) -> str:
        return "proportion"


@dataclass(frozen=True)
class AnonymousTable:
    """Per-arity table of probabilities indexed by the number of active neighbors."""

    rows: Tuple[Tuple[int, Tuple[Fraction, ...]], ...]
    gamma: int
    anonymous = True

    @classmethod
    def from_rows(cls, rows: Dict[Any, Sequence[Any]], gamma: int) -> "AnonymousTable":
        parsed = []
        for arity, probs in rows.items():
            arity = int(arity)
            values = tuple(to_fraction(p) for p in probs)
            if len(values) != arity + 1:
                raise InvalidAggregation(f"row for arity {arity} needs {arity + 1} entries, got {len(values)}")
            if any(v < 0 or v > 1 for v in values):
                raise InvalidAggregation(f"row for arity {arity} leaves [0, 1]")
            parsed.append((arity, values))
        return cls(rows=tuple(sorted(parsed)), gamma=gamma)

    def row(self, arity: int) -> Tuple[Fraction, ...]:
        for a, values in self.rows:
            if a == arity:
                return values
        raise ArityExceeded(f"no table row for arity {arity}")

    def value(self, ones: int, arity: int) -> Fraction:
        return self.row(arity)[ones]

    def describe(self) -> str:
        return "table"


@dataclass(frozen=True)
class General:
    """Arbitrary function of the ordered status vector."""

    func: Callable[[Tuple[int, ...]], Any]
    gamma: int
    name: str = "general"
    anonymous = False

    def describe(self) -> str:
        return self.name


AggregationFunction = Union[Threshold, Proportion, AnonymousTable, General]


def _check_arity(A: AggregationFunction, arity: int) -> None:
    if arity < 1 or arity > A.gamma:
        raise ArityExceeded(f"arity {arity} outside [1, {A.gamma}]", {"arity": arity, "gamma": A.gamma})


def evaluate_exact(A: AggregationFunction, statuses: Sequence[int], arity: Optional[int] = None) -> Fraction:
    arity = len(statuses) if arity is None else arity
    if arity != len(statuses):
        raise ArityExceeded(f"vector of length {len(statuses)} given for arity {arity}")
    _check_arity(A, arity)
    if A.anonymous:
        return A.value(sum(1 for s in statuses if s), arity)
    return to_fraction(A.func(tuple(int(bool(s)) for s in statuses)))


def evaluate(A: AggregationFunction, statuses: Sequence[int], arity: Optional[int] = None) -> float:
    return float(evaluate_exact(A, statuses, arity))


def arities(A: AggregationFunction) -> Tuple[int, ...]:
    """Arities on which A is defined: every 1..gamma, or the rows present in a table."""
    if isinstance(A, AnonymousTable):
        return tuple(a for a, _ in A.rows if 1 <= a <= A.gamma)
    return tuple(range(1, A.gamma + 1))


def value_table(A: AggregationFunction, max_arity: int):
    """Float table T[arity, ones] for anonymous A, used by vectorised window steps.

    Arities A does not define are left as NaN.
    """
    import numpy as np

    table = np.full((max_arity + 1, max_arity + 1), np.nan, dtype=np.float64)
    for arity in arities(A):
        if arity > max_arity:
            continue
        for ones in range(arity + 1):
            table[arity, ones] = float(A.value(ones, arity))
    return table


@dataclass(frozen=True)
class AggClass:
    kind: str  # Strict | Boolean | Neither
    ell: Optional[int] = None
    r: Optional[int] = None


def _vectors(A: AggregationFunction, arity: int):
    """(ones, value) pairs, or (vector, value) pairs for non-anonymous A."""
    if A.anonymous:
        return [((k,), A.value(k, arity)) for k in range(arity + 1)]
    if arity > MAX_GENERAL_ARITY:
        raise TooLarge(f"exhaustive check over 2^{arity} vectors is too large")
    return [(v, evaluate_exact(A, v)) for v in itertools.product((0, 1), repeat=arity)]


@lru_cache(maxsize=64)
def classify(A: AggregationFunction) -> AggClass:
    """Strict, Boolean or Neither, after checking endpoints and monotonicity."""
    values_seen = set()
    mixed_values = []
    for arity in arities(A):
        table = dict(_vectors(A, arity))
        low = table[(0,)] if A.anonymous else table[(0,) * arity]
        high = table[(arity,)] if A.anonymous else table[(1,) * arity]
        if low != 0 or high != 1:
            raise EndpointViolation(f"A(0..0)={low}, A(1..1)={high} at arity {arity}", {"arity": arity})
        for vec, val in table.items():
            if val < 0 or val > 1:
                raise InvalidAggregation(f"value {val} outside [0, 1] at {vec}")
            if A.anonymous:
                k = vec[0]
                if k < arity and table[(k + 1,)] < val:
                    raise NotMonotone(f"decreasing from {k} to {k + 1} ones at arity {arity}")
                constant = k in (0, arity)
            else:
                for i, bit in enumerate(vec):
                    if bit == 0:
                        up = vec[:i] + (1,) + vec[i + 1:]
                        if table[up] < val:
                            raise NotMonotone(f"flipping coordinate {i} of {vec} decreases A")
                constant = len(set(vec)) <= 1
            values_seen.add(val)
            if not constant:
                mixed_values.append(val)

    boolean = all(v in (0, 1) for v in values_seen)
    strict = all(0 < v < 1 for v in mixed_values)
    # With gamma = 1 every vector is constant and both kinds hold; a Threshold reads as Boolean.
    if boolean and (mixed_values or isinstance(A, Threshold)):
        return AggClass("Boolean")
    if strict:
        return AggClass("Strict")
    if A.anonymous:
        top = max(arities(A))
        row = [A.value(k, top) for k in range(top + 1)]
        ell = max(k for k, v in enumerate(row) if v == 0)
        r = top - min(k for k, v in enumerate(row) if v == 1)
        if not (max(ell, r) > 0 and ell + r < top):
            logger.warning(f"Neither function with ell={ell}, r={r} breaks the side conditions")
        return AggClass("Neither", ell=ell, r=r)
    return AggClass("Neither")


def is_strict(A: AggregationFunction) -> bool:
    return classify(A).kind == "Strict"


def is_boolean(A: AggregationFunction) -> bool:
    return classify(A).kind == "Boolean"


def load_table(path: Union[str, Path]) -> AnonymousTable:
    """Load {"gamma": 4, "rows": {"1": [0, 1], "4": [0, 0.5, 1, 1, 1]}}."""
    try:
        with open(path, "r") as f:
            doc = json.load(f)
        return AnonymousTable.from_rows(doc["rows"], int(doc["gamma"]))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise InvalidAggregation(f"cannot read aggregation table {path}: {str(e)}")


def from_spec(text: str, gamma: int) -> AggregationFunction:
    """Parse 'proportion', 'threshold:q' or a table JSON path."""
    if text == "proportion":
        return Proportion(gamma=gamma)
    if text.startswith("threshold:"):
        try:
            q = Fraction(text.split(":", 1)[1])
        except (ValueError, ZeroDivisionError):
            raise InvalidAggregation(f"bad threshold in {text!r}")
        if not 0 <= q <= 1:
            raise InvalidAggregation(f"threshold {q} outside [0, 1]")
        return Threshold(q=q, gamma=gamma)
    path = text.split(":", 1)[1] if text.startswith("table:") else text
    if Path(path).exists():
        table = load_table(path)
        if table.gamma < gamma:
            logger.warning(f"table gamma {table.gamma} below network gamma {gamma}")
        return table
    raise InvalidAggregation(f"unknown aggregation spec {text!r}")


def activation_probability(net, A: AggregationFunction, config, x) -> Fraction:
    """P(x active next step | config) = A applied to the ordered statuses of Γ(x)."""
    return evaluate_exact(A, neighbor_statuses(net, config, x))


@lru_cache(maxsize=4096)
def anonymous_float(A: AggregationFunction, ones: int, arity: int) -> float:
    return float(A.value(ones, arity))


def probability_float(A: AggregationFunction, statuses: Sequence[int]) -> float:
    """Float activation probability, cached per (ones, arity) for anonymous A."""
    _check_arity(A, len(statuses))
    if A.anonymous:
        return anonymous_float(A, sum(statuses), len(statuses))
    return float(evaluate_exact(A, statuses))
