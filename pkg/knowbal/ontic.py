"""
Ontic configuration spaces and epistemic states.

A configuration of N elementary systems is a tuple of labels in {1,2,3,4};
it is stored as an index in [0, 4**N) with system 1 as the most significant
base-4 digit. An epistemic state is the set of ontic states consistent with
an agent's knowledge, stored as an integer bitmask over those indices.

Label j encodes the pair of bits (q, p) with j = 1 + 2q + p.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from math import isqrt
from typing import TYPE_CHECKING, Iterable, Iterator, List, Sequence, Tuple, Union

from .core.errors import (
    CoherentOperationError,
    EmptyStateError,
    OnticIndexError,
    ShapeMismatchError,
)

if TYPE_CHECKING:  # pragma: no cover
    from .validity import Catalog

LABELS = (1, 2, 3, 4)

Cell = Union[int, Sequence[int]]


@dataclass(frozen=True)
class SystemShape:
    """Number of elementary systems in a composite."""

    n_systems: int

    def __post_init__(self):
        if not isinstance(self.n_systems, int) or self.n_systems < 1:
            raise ValueError(f"n_systems must be a positive integer, got {self.n_systems!r}")

    @property
    def ontic_count(self) -> int:
        return 4 ** self.n_systems

    @property
    def pure_size(self) -> int:
        return 2 ** self.n_systems

    @property
    def question_count(self) -> int:
        return 2 * self.n_systems

    @property
    def full_mask(self) -> int:
        return (1 << self.ontic_count) - 1

    def encode(self, labels: Sequence[int]) -> int:
        """Map a label tuple (1-based) to its ontic index."""
        if len(labels) != self.n_systems:
            raise OnticIndexError(
                f"expected {self.n_systems} labels, got {len(labels)}: {tuple(labels)}"
            )
        index = 0
        for label in labels:
            if label not in LABELS:
                raise OnticIndexError(f"ontic label out of range: {label}")
            index = index * 4 + (label - 1)
        return index

    def decode(self, index: int) -> Tuple[int, ...]:
        """Map an ontic index back to its label tuple."""
        if not 0 <= index < self.ontic_count:
            raise OnticIndexError(f"ontic index {index} outside [0, {self.ontic_count})")
        digits = []
        for _ in range(self.n_systems):
            digits.append(index % 4 + 1)
            index //= 4
        return tuple(reversed(digits))

    def digit(self, index: int, position: int) -> int:
        """Label (1..4) of system `position` (1-based) in ontic state `index`."""
        return (index // 4 ** (self.n_systems - position)) % 4 + 1

    def combine(self, other: "SystemShape") -> "SystemShape":
        return SystemShape(self.n_systems + other.n_systems)

    def check_positions(self, positions: Iterable[int]) -> Tuple[int, ...]:
        """Validate 1-based system positions; returns them as a tuple."""
        positions = tuple(positions)
        if not positions:
            raise ShapeMismatchError("at least one system position is required")
        for pos in positions:
            if not isinstance(pos, int) or not 1 <= pos <= self.n_systems:
                raise ShapeMismatchError(f"system position {pos!r} outside 1..{self.n_systems}")
        if len(set(positions)) != len(positions):
            raise ShapeMismatchError(f"repeated system position in {positions}")
        return positions


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of a mask in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class EpistemicState:
    """A nonempty set of ontic states over a fixed system shape."""

    shape: SystemShape
    mask: int = field(repr=False)

    def __post_init__(self):
        if self.mask <= 0:
            raise EmptyStateError("epistemic state must contain at least one ontic state")
        if self.mask > self.shape.full_mask:
            raise OnticIndexError("state mask exceeds the configuration space")

    @property
    def members(self) -> Tuple[int, ...]:
        return tuple(iter_bits(self.mask))

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def __len__(self) -> int:
        return self.size

    def __contains__(self, index: int) -> bool:
        return 0 <= index < self.shape.ontic_count and bool(self.mask >> index & 1)

    def cells(self) -> List[Tuple[int, ...]]:
        """Member label tuples in ascending index order."""
        return [self.shape.decode(i) for i in self.members]

    def sort_key(self) -> Tuple[int, ...]:
        return self.members

    def __repr__(self) -> str:
        return f"EpistemicState(n={self.shape.n_systems}, {render(self)})"

    def __str__(self) -> str:
        return render(self)


class _Undefined:
    """Distinguished result of an undefined convex combination."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self) -> bool:
        return False

    def __repr__(self) -> str:
        return "UNDEFINED"


UNDEFINED = _Undefined()


class CoherentOp(Enum):
    """The four coherent binary operations on disjoint pure single-system states."""

    LOW_LOW = 1    # +1
    HIGH_HIGH = 2  # +2
    HIGH_LOW = 3   # +3
    LOW_HIGH = 4   # +4


def make_state(shape: SystemShape, members: Iterable[int]) -> EpistemicState:
    """Build a state from ontic indices."""
    mask = 0
    for index in members:
        if not isinstance(index, int) or not 0 <= index < shape.ontic_count:
            raise OnticIndexError(f"ontic index out of range: {index!r}")
        mask |= 1 << index
    if not mask:
        raise EmptyStateError("epistemic state must contain at least one ontic state")
    return EpistemicState(shape, mask)


def from_cells(shape: SystemShape, cells: Iterable[Cell]) -> EpistemicState:
    """Build a state from 1-based label tuples (plain ints allowed when N=1)."""
    indices = []
    for cell in cells:
        labels = (cell,) if isinstance(cell, int) else tuple(cell)
        indices.append(shape.encode(labels))
    return make_state(shape, indices)


def full_state(shape: SystemShape) -> EpistemicState:
    """Complete ignorance: every ontic state."""
    return EpistemicState(shape, shape.full_mask)


def _same_shape(s1: EpistemicState, s2: EpistemicState) -> None:
    if s1.shape != s2.shape:
        raise ShapeMismatchError(
            f"states live on {s1.shape.n_systems} and {s2.shape.n_systems} systems"
        )


def marginal(s: EpistemicState, keep: Iterable[int]) -> EpistemicState:
    """
    Project a state onto a subset of its systems.

    Args:
        s: State to project
        keep: 1-based positions to keep; they are sorted, so the result is
            always in ascending position order

    Returns:
        State over len(keep) systems
    """
    positions = tuple(sorted(s.shape.check_positions(keep)))
    if positions == tuple(range(1, s.shape.n_systems + 1)):
        return s
    target = SystemShape(len(positions))
    mask = 0
    for index in s.members:
        labels = s.shape.decode(index)
        mask |= 1 << target.encode([labels[p - 1] for p in positions])
    return EpistemicState(target, mask)


def conjoin(s1: EpistemicState, s2: EpistemicState) -> EpistemicState:
    """Cartesian product s1·s2 (systems of s1 first)."""
    shape = s1.shape.combine(s2.shape)
    width = s2.shape.ontic_count
    mask = 0
    for i in s1.members:
        mask |= s2.mask << (i * width)
    return EpistemicState(shape, mask)


def conjoin_all(states: Sequence[EpistemicState]) -> EpistemicState:
    if not states:
        raise ValueError("conjoin_all needs at least one state")
    result = states[0]
    for s in states[1:]:
        result = conjoin(result, s)
    return result


def union(s1: EpistemicState, s2: EpistemicState) -> EpistemicState:
    _same_shape(s1, s2)
    return EpistemicState(s1.shape, s1.mask | s2.mask)


def intersection_mask(s1: EpistemicState, s2: EpistemicState) -> int:
    _same_shape(s1, s2)
    return s1.mask & s2.mask


def overlap(s1: EpistemicState, s2: EpistemicState) -> int:
    """Number of ontic states common to both."""
    return intersection_mask(s1, s2).bit_count()


def fidelity_squared(s1: EpistemicState, s2: EpistemicState) -> Fraction:
    """Exact square of the classical fidelity."""
    _same_shape(s1, s2)
    common = (s1.mask & s2.mask).bit_count()
    return Fraction(common * common, s1.size * s2.size)


def fidelity(s1: EpistemicState, s2: EpistemicState) -> float:
    """
    Classical fidelity |s1∩s2| / sqrt(|s1|·|s2|).

    The sizes of valid states are powers of two, so the product under the
    square root is exact in floating point whenever it is a perfect square.
    """
    _same_shape(s1, s2)
    common = (s1.mask & s2.mask).bit_count()
    product = s1.size * s2.size
    root = isqrt(product)
    if root * root == product:
        return common / root
    return common / product ** 0.5


def is_disjoint(s1: EpistemicState, s2: EpistemicState) -> bool:
    return intersection_mask(s1, s2) == 0


def is_compatible(s1: EpistemicState, s2: EpistemicState, catalog: "Catalog") -> bool:
    """Two states are compatible when they overlap in a valid state."""
    common = intersection_mask(s1, s2)
    return common != 0 and catalog.contains_mask(common)


def is_pure(s: EpistemicState) -> bool:
    """Maximal knowledge: exactly 2**N ontic states."""
    return s.size == s.shape.pure_size


def convex_combine(states: Sequence[EpistemicState], catalog: "Catalog"):
    """
    Union of pairwise disjoint states, or UNDEFINED.

    Returns UNDEFINED when the inputs overlap or the union is not a valid
    state; shape mismatches still raise.
    """
    if len(states) < 2:
        raise ValueError("convex_combine needs at least two states")
    mask = 0
    for s in states:
        _same_shape(states[0], s)
        if mask & s.mask:
            return UNDEFINED
        mask |= s.mask
    if not catalog.contains_mask(mask):
        return UNDEFINED
    return EpistemicState(states[0].shape, mask)


def decompositions(s: EpistemicState, catalog: "Catalog") -> List[Tuple[EpistemicState, EpistemicState]]:
    """All splits of s into two disjoint pure catalog states (ordered by first part)."""
    half = s.size // 2
    if s.size % 2 or half != s.shape.pure_size:
        return []
    result = []
    for mask in catalog.masks(size=half):
        if mask & s.mask == mask:
            rest = s.mask ^ mask
            if catalog.contains_mask(rest) and mask < rest:
                result.append((EpistemicState(s.shape, mask), EpistemicState(s.shape, rest)))
    return result


def coherent_combine(s1: EpistemicState, s2: EpistemicState, op: CoherentOp) -> EpistemicState:
    """
    Coherent binary operation a∨b +k c∨d on disjoint pure single-system states.

    The result keeps the low or high element of each argument:
    +1 low/low, +2 high/high, +3 high(s1)/low(s2), +4 low(s1)/high(s2).
    """
    if s1.shape.n_systems != 1 or s2.shape.n_systems != 1:
        raise CoherentOperationError("coherent operations act on single systems")
    if not (is_pure(s1) and is_pure(s2)):
        raise CoherentOperationError("coherent operations need pure states")
    if not is_disjoint(s1, s2):
        raise CoherentOperationError("coherent operations need disjoint states")
    a, b = s1.members
    c, d = s2.members
    pick = {
        CoherentOp.LOW_LOW: (a, c),
        CoherentOp.HIGH_HIGH: (b, d),
        CoherentOp.HIGH_LOW: (b, c),
        CoherentOp.LOW_HIGH: (a, d),
    }[op]
    return make_state(s1.shape, pick)


def is_product(s: EpistemicState) -> bool:
    """True when s equals the conjunction of its single-system marginals."""
    n = s.shape.n_systems
    if n == 1:
        return True
    factors = [marginal(s, [i]) for i in range(1, n + 1)]
    return conjoin_all(factors).mask == s.mask


def _render_single(s: EpistemicState) -> str:
    return "∨".join(str(i + 1) for i in s.members)


def render(s: EpistemicState) -> str:
    """Human notation: (a∨b)·(c∨d) for products, (a·b)∨(c·d) otherwise."""
    n = s.shape.n_systems
    if n == 1:
        return _render_single(s)
    if is_product(s):
        return "·".join(f"({_render_single(marginal(s, [i]))})" for i in range(1, n + 1))
    return "∨".join("(" + "·".join(str(l) for l in cell) + ")" for cell in s.cells())


def all_subsets_of_size(shape: SystemShape, size: int) -> Iterator[int]:
    """Masks of every subset of the configuration space with `size` members."""
    for combo in combinations(range(shape.ontic_count), size):
        mask = 0
        for i in combo:
            mask |= 1 << i
        yield mask


# Canonical partitions of a single system, outcome order as written:
# z = {1∨2 | 3∨4}, x = {1∨3 | 2∨4}, y = {1∨4 | 2∨3}
CANONICAL_PARTITIONS = {
    "z": ((1, 2), (3, 4)),
    "x": ((1, 3), (2, 4)),
    "y": ((1, 4), (2, 3)),
}

# Every unordered pair of labels is one block of exactly one canonical partition.
LABEL_PAIRS = ((1, 2), (3, 4), (1, 3), (2, 4), (1, 4), (2, 3))
