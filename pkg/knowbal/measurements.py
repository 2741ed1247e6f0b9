"""
Measurements as partitions of the configuration space into valid states,
together with the rules that update an agent's knowledge after an outcome.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .core.errors import (
    MeasurementError,
    OutcomeImpossibleError,
    ShapeMismatchError,
    UnsupportedShapeError,
)
from .core.logging import get_logger
from .ontic import (
    CANONICAL_PARTITIONS,
    EpistemicState,
    SystemShape,
    conjoin,
    from_cells,
    is_product,
    iter_bits,
    marginal,
)
from .records import write_records
from .transforms import Permutation, embed, relation_permutation
from .validity import Catalog, local_swap_table, permute_mask

logger = get_logger(__name__)

MEASUREMENTS_FORMAT = "knowbal-measurements"
MEASUREMENTS_VERSION = 1
UPDATE_RULES = ("max-fidelity", "outcome-base")

ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X",
         "XI", "XII", "XIII", "XIV", "XV", "XVI")


def roman(k: int) -> str:
    return ROMAN[k] if k < len(ROMAN) else str(k + 1)


@dataclass(frozen=True)
class Measurement:
    """
    Partition of the target systems' configuration space.

    Outcomes live on the shape of the target systems; `host` is the shape
    of the composite the measurement acts on. Product measurements keep
    their single-system factors in `components` and update through them.
    """

    host: SystemShape
    targets: Tuple[int, ...]
    outcomes: Tuple[EpistemicState, ...]
    name: str = ""
    components: Tuple["Measurement", ...] = ()
    _bases: Tuple[int, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_bases", tuple(self._lift(o.mask) for o in self.outcomes))

    @property
    def target_shape(self) -> SystemShape:
        return SystemShape(len(self.targets))

    @property
    def is_local(self) -> bool:
        return len(self.targets) == 1

    @property
    def is_maximal(self) -> bool:
        return all(o.size == self.target_shape.pure_size for o in self.outcomes)

    @property
    def labels(self) -> List[str]:
        return [roman(k) for k in range(len(self.outcomes))]

    def outcome_base(self, k: int) -> EpistemicState:
        """Outcome k as a set of host ontic states."""
        return EpistemicState(self.host, self.base_mask(k))

    def base_mask(self, k: int) -> int:
        if not 0 <= k < len(self.outcomes):
            raise MeasurementError(f"outcome index {k} out of range for {len(self.outcomes)} outcomes")
        return self._bases[k]

    def outcome_of(self, index: int) -> int:
        """Outcome containing an ontic state of the host."""
        for k, base in enumerate(self._bases):
            if base >> index & 1:
                return k
        raise MeasurementError(f"ontic state {index} is not covered by any outcome")

    def _lift(self, target_mask: int) -> int:
        if self.targets == tuple(range(1, self.host.n_systems + 1)):
            return target_mask
        sub = self.target_shape
        mask = 0
        for index in range(self.host.ontic_count):
            labels = self.host.decode(index)
            if target_mask >> sub.encode([labels[p - 1] for p in self.targets]) & 1:
                mask |= 1 << index
        return mask

    def __str__(self) -> str:
        body = " | ".join(str(o) for o in self.outcomes)
        return f"{self.name or 'measurement'}{{{body}}} on {self.targets}"


def make_measurement(
    outcomes: Sequence[EpistemicState],
    catalog: Optional[Catalog] = None,
    host: Optional[SystemShape] = None,
    targets: Optional[Sequence[int]] = None,
    name: str = "",
) -> Measurement:
    """
    Build a measurement, checking that the outcomes partition the target space.

    Args:
        outcomes: Valid states over the target systems, pairwise disjoint and covering
        catalog: Catalog of the target shape used to check validity
        host: Composite shape (defaults to the outcome shape)
        targets: Host positions measured (defaults to all, in order)
        name: Display label
    """
    if not outcomes:
        raise MeasurementError("a measurement needs at least one outcome")
    shape = outcomes[0].shape
    covered = 0
    for o in outcomes:
        if o.shape != shape:
            raise ShapeMismatchError("outcomes live on different shapes")
        if covered & o.mask:
            raise MeasurementError(f"outcome {o} overlaps another outcome")
        if catalog is not None and not catalog.contains(o):
            raise MeasurementError(f"outcome {o} is not a valid state")
        covered |= o.mask
    if covered != shape.full_mask:
        raise MeasurementError("outcomes do not cover the configuration space")
    host = host or shape
    targets = host.check_positions(targets if targets is not None else range(1, shape.n_systems + 1))
    if len(targets) != shape.n_systems:
        raise ShapeMismatchError(f"{len(targets)} target systems for outcomes on {shape.n_systems}")
    return Measurement(host, tuple(targets), tuple(outcomes), name)


def canonical_partition(name: str) -> Measurement:
    """The single-system partition z, x or y."""
    if name not in CANONICAL_PARTITIONS:
        raise MeasurementError(f"unknown canonical partition {name!r}")
    shape = SystemShape(1)
    return make_measurement([from_cells(shape, pair) for pair in CANONICAL_PARTITIONS[name]], name=name)


def canonical_partitions() -> List[Measurement]:
    return [canonical_partition(n) for n in ("z", "x", "y")]


def on_systems(m: Measurement, host: SystemShape, targets: Sequence[int]) -> Measurement:
    """Re-target a measurement defined on its own systems onto positions of a larger host."""
    if len(targets) != len(m.targets):
        raise ShapeMismatchError(f"measurement acts on {len(m.targets)} systems, got {len(targets)} targets")
    mapping = dict(zip(m.targets, targets))
    components = tuple(on_systems(c, host, [mapping[t] for t in c.targets]) for c in m.components)
    result = make_measurement(list(m.outcomes), host=host, targets=targets, name=m.name)
    return Measurement(result.host, result.targets, result.outcomes, result.name, components)


def product(*locals_: Measurement) -> Measurement:
    """Product of single-system measurements; outcomes in lexicographic order."""
    if not locals_:
        raise MeasurementError("product needs at least one factor")
    for m in locals_:
        if m.target_shape.n_systems != 1:
            raise MeasurementError("product factors must be single-system measurements")
    host = SystemShape(len(locals_))
    outcomes = []
    for combo in cartesian(*(m.outcomes for m in locals_)):
        state = combo[0]
        for s in combo[1:]:
            state = conjoin(state, s)
        outcomes.append(state)
    name = "⊗".join(m.name or "m" for m in locals_)
    components = tuple(
        make_measurement(list(m.outcomes), host=host, targets=[i], name=m.name)
        for i, m in enumerate(locals_, start=1)
    )
    base = make_measurement(outcomes, name=name)
    return Measurement(host, base.targets, base.outcomes, name, components)


def bell_analogue(relabel_b: Optional[Permutation] = None) -> Measurement:
    """
    Joint measurement whose outcomes are the four relation states {(x, P x)}.

    Outcome order follows P = (1)(2)(3)(4), (12)(34), (13)(24), (14)(23).
    With `relabel_b`, every outcome is relabelled on the second system.
    """
    shape = SystemShape(2)
    outcomes = []
    for k in range(4):
        rel = relation_permutation(k)
        state = from_cells(shape, [(x, rel.image[x - 1] + 1) for x in (1, 2, 3, 4)])
        if relabel_b is not None:
            state = embed(relabel_b, [2], shape).apply(state)
        outcomes.append(state)
    return make_measurement(outcomes, name="bell" if relabel_b is None else f"bell[{relabel_b}]")


def coarse_grain(m: Measurement, blocks: Sequence[Sequence[int]], catalog: Optional[Catalog] = None,
                 name: str = "") -> Measurement:
    """Merge outcome blocks of a measurement into single outcomes."""
    flat = sorted(k for block in blocks for k in block)
    if flat != list(range(len(m.outcomes))):
        raise MeasurementError("blocks must partition the outcome indices")
    outcomes = []
    for block in blocks:
        mask = 0
        for k in block:
            mask |= m.outcomes[k].mask
        outcomes.append(EpistemicState(m.target_shape, mask))
    merged = make_measurement(outcomes, catalog, m.host, m.targets, name or f"coarse({m.name})")
    return merged


def parity_measurement() -> Measurement:
    """Non-maximal joint measurement: equal versus unequal z-outcomes on two systems."""
    zz = product(canonical_partition("z"), canonical_partition("z"))
    return coarse_grain(zz, [[0, 3], [1, 2]], name="zpar")


def outcome_probabilities(s: EpistemicState, m: Measurement) -> List[Fraction]:
    """Exact outcome probabilities |s ∩ O_k| / |s|."""
    if s.shape != m.host:
        raise ShapeMismatchError("state and measurement have different host shapes")
    return [Fraction((s.mask & m.base_mask(k)).bit_count(), s.size) for k in range(len(m.outcomes))]


def decompose_outcome(m: Measurement, k: int) -> List[int]:
    """Per-component outcome indices of a product-measurement outcome."""
    radices = [len(c.outcomes) for c in m.components]
    digits = []
    for radix in reversed(radices):
        digits.append(k % radix)
        k //= radix
    return list(reversed(digits))


def randomize_targets(shape: SystemShape, inter: int, targets: Sequence[int], outcome: EpistemicState) -> int:
    """Outcome cells on the targets times the projection of `inter` onto the other systems."""
    rest = [p for p in range(1, shape.n_systems + 1) if p not in targets]
    if not rest:
        return outcome.mask
    rest_cells = {tuple(shape.decode(i)[p - 1] for p in rest) for i in iter_bits(inter)}
    mask = 0
    for target_cell in outcome.cells():
        for rest_cell in rest_cells:
            labels = [0] * shape.n_systems
            for p, label in zip(targets, target_cell):
                labels[p - 1] = label
            for p, label in zip(rest, rest_cell):
                labels[p - 1] = label
            mask |= 1 << shape.encode(labels)
    return mask


@dataclass(frozen=True)
class MaxFidelityUpdate:
    """Result of the maximum-fidelity rule with any tied alternatives."""

    state: EpistemicState
    fidelity_squared: Fraction
    tied: Tuple[EpistemicState, ...] = ()


def update_max_fidelity_detailed(s: EpistemicState, outcome: EpistemicState, catalog: Catalog) -> MaxFidelityUpdate:
    """
    Valid state inside the outcome base closest in fidelity to s.

    Ties are broken by catalog order (smaller states first, then
    lexicographic members) and reported.
    """
    if catalog.shape != s.shape or outcome.shape != s.shape:
        raise ShapeMismatchError("state, outcome and catalog must share a shape")
    if not s.mask & outcome.mask:
        raise OutcomeImpossibleError(f"outcome {outcome} is impossible for {s}")
    best: List[int] = []
    best_value = Fraction(-1)
    for c in catalog.masks():
        if c & ~outcome.mask:
            continue
        common = (c & s.mask).bit_count()
        value = Fraction(common * common, c.bit_count() * s.size)
        if value > best_value:
            best, best_value = [c], value
        elif value == best_value:
            best.append(c)
    chosen = EpistemicState(s.shape, best[0])
    tied = tuple(EpistemicState(s.shape, c) for c in best[1:])
    if tied:
        logger.warning("max_fidelity_tie", state=str(s), chosen=str(chosen), alternatives=len(tied))
    return MaxFidelityUpdate(chosen, best_value, tied)


def update_max_fidelity(s: EpistemicState, outcome: EpistemicState, catalog: Catalog) -> EpistemicState:
    return update_max_fidelity_detailed(s, outcome, catalog).state


def epistemic_update(
    s: EpistemicState,
    m: Measurement,
    outcome_index: int,
    rule: str = "max-fidelity",
    catalog: Optional[Catalog] = None,
) -> EpistemicState:
    """
    Knowledge after observing an outcome.

    Args:
        s: Prior state on the measurement's host
        m: Measurement
        outcome_index: Observed outcome
        rule: Update rule for non-maximal joint outcomes
        catalog: Host catalog, required by the max-fidelity rule

    Returns:
        Updated state
    """
    if rule not in UPDATE_RULES:
        raise MeasurementError(f"unknown update rule {rule!r}")
    if s.shape != m.host:
        raise ShapeMismatchError("state and measurement have different host shapes")
    base = m.base_mask(outcome_index)
    inter = s.mask & base
    if not inter:
        raise OutcomeImpossibleError(f"outcome {roman(outcome_index)} has probability 0 for {s}")

    if m.components:
        state = s
        for component, digit in zip(m.components, decompose_outcome(m, outcome_index)):
            state = epistemic_update(state, component, digit, rule, catalog)
        return state

    outcome = m.outcomes[outcome_index]
    if m.is_local:
        if outcome.size == 4:
            return s
        a, b = (i + 1 for i in outcome.members)
        table = local_swap_table(s.shape, m.targets[0], a, b)
        return EpistemicState(s.shape, inter | permute_mask(inter, table))

    if m.is_maximal or rule == "outcome-base":
        return EpistemicState(s.shape, randomize_targets(s.shape, inter, m.targets, outcome))

    if catalog is None:
        raise MeasurementError("the max-fidelity rule needs the host catalog")
    return update_max_fidelity(s, EpistemicState(s.shape, base), catalog)


def are_mutually_unbiased(m1: Measurement, m2: Measurement) -> bool:
    """Distinct measurements whose cross-outcome fidelities are all equal."""
    if m1.host != m2.host or m1.targets != m2.targets:
        raise ShapeMismatchError("measurements act on different systems")
    if set(o.mask for o in m1.outcomes) == set(o.mask for o in m2.outcomes):
        return False
    values = {
        Fraction((a.mask & b.mask).bit_count() ** 2, a.size * b.size)
        for a in m1.outcomes
        for b in m2.outcomes
    }
    return len(values) == 1


def enumerate_maximal(shape: SystemShape, catalog: Catalog) -> List[Measurement]:
    """
    Every partition of the configuration space into pure catalog states.

    Exact-cover search: the lowest uncovered ontic state must be covered by
    a pure state disjoint from those already chosen.
    """
    if shape.n_systems > 2:
        raise UnsupportedShapeError("maximal measurement enumeration supports at most 2 systems")
    pure = catalog.masks(size=shape.pure_size)
    by_low: Dict[int, List[int]] = {}
    for m in pure:
        by_low.setdefault((m & -m).bit_length() - 1, []).append(m)
    covering: Dict[int, List[int]] = {i: [m for m in pure if m >> i & 1] for i in range(shape.ontic_count)}

    found: List[Tuple[int, ...]] = []

    def search(covered: int, chosen: List[int]) -> None:
        if covered == shape.full_mask:
            found.append(tuple(sorted(chosen, key=lambda x: tuple(iter_bits(x)))))
            return
        free = ~covered & shape.full_mask
        low = (free & -free).bit_length() - 1
        for m in covering[low]:
            if not m & covered:
                chosen.append(m)
                search(covered | m, chosen)
                chosen.pop()

    search(0, [])
    found.sort(key=lambda t: [tuple(iter_bits(x)) for x in t])
    logger.info("maximal_measurements_enumerated", n_systems=shape.n_systems, count=len(found))
    return [
        make_measurement([EpistemicState(shape, x) for x in outcomes], name=f"M{idx}")
        for idx, outcomes in enumerate(found)
    ]


@dataclass(frozen=True)
class MupSet:
    """Mutually unbiased measurements with their shared squared fidelity."""

    measurements: Tuple[Measurement, ...]
    common_fidelity_squared: Fraction

    @property
    def common_fidelity(self) -> float:
        return float(self.common_fidelity_squared) ** 0.5


def _unbiased_graph(measurements: Sequence[Measurement]) -> List[set]:
    adjacency = [set() for _ in measurements]
    for i, a in enumerate(measurements):
        for j in range(i + 1, len(measurements)):
            if are_mutually_unbiased(a, measurements[j]):
                adjacency[i].add(j)
                adjacency[j].add(i)
    return adjacency


def find_mup_sets(
    shape: SystemShape,
    size: int,
    catalog: Catalog,
    exhaustive: bool = True,
    measurements: Optional[Sequence[Measurement]] = None,
) -> List[MupSet]:
    """
    Sets of `size` pairwise mutually unbiased maximal measurements.

    Args:
        shape: 1 or 2 systems
        size: Number of measurements per set
        catalog: Catalog of the shape
        exhaustive: Return every set; otherwise stop at the first one
        measurements: Precomputed maximal measurements

    Returns:
        List of MupSet (empty when none exist)
    """
    measurements = list(measurements) if measurements is not None else enumerate_maximal(shape, catalog)
    adjacency = _unbiased_graph(measurements)
    results: List[Tuple[int, ...]] = []

    def extend(clique: List[int], candidates: List[int]) -> bool:
        if len(clique) == size:
            results.append(tuple(clique))
            return not exhaustive
        for pos, v in enumerate(candidates):
            if len(clique) + len(candidates) - pos < size:
                break
            nxt = [w for w in candidates[pos + 1:] if w in adjacency[v]]
            clique.append(v)
            if extend(clique, nxt):
                return True
            clique.pop()
        return False

    extend([], list(range(len(measurements))))
    logger.info("mup_search_finished", n_systems=shape.n_systems, size=size, found=len(results))

    sets = []
    for clique in results:
        ms = tuple(measurements[i] for i in clique)
        a = ms[0].outcomes[0]
        b = ms[1].outcomes[0] if len(ms) > 1 else a
        value = Fraction((a.mask & b.mask).bit_count() ** 2, a.size * b.size)
        sets.append(MupSet(ms, value))
    return sets


def max_mup_size(shape: SystemShape, catalog: Catalog,
                 measurements: Optional[Sequence[Measurement]] = None) -> int:
    """Size of the largest set of mutually unbiased maximal measurements."""
    measurements = list(measurements) if measurements is not None else enumerate_maximal(shape, catalog)
    size = 1
    while find_mup_sets(shape, size + 1, catalog, exhaustive=False, measurements=measurements):
        size += 1
    return size


def classify(m: Measurement) -> str:
    """local, product, joint (no product outcome) or mixed-type."""
    if m.is_local:
        return "local"
    if m.components:
        return "product"
    if all(is_product(o) for o in m.outcomes):
        grid = 1
        for position in range(1, m.target_shape.n_systems + 1):
            grid *= len({marginal(o, [position]).mask for o in m.outcomes})
        if grid == len(m.outcomes):
            return "product"
    products = sum(1 for o in m.outcomes if is_product(o))
    return "joint" if products == 0 else "mixed-type"


def render_grid(m: Measurement) -> str:
    """Two-system outcome grid: rows are the first system's labels from 4 (top) to 1."""
    if m.target_shape.n_systems != 2:
        raise UnsupportedShapeError("grid rendering is for two-system measurements")
    shape = m.target_shape
    lines = []
    for a in (4, 3, 2, 1):
        row = []
        for b in (1, 2, 3, 4):
            index = shape.encode((a, b))
            k = next(k for k, o in enumerate(m.outcomes) if o.mask >> index & 1)
            row.append(f"{roman(k):>4}")
        lines.append(f"{a} |" + "".join(row))
    lines.append("   " + "".join(f"{b:>4}" for b in (1, 2, 3, 4)))
    return "\n".join(lines)


def save_measurements(measurements: Iterable[Measurement], path: Union[str, Path], shape: SystemShape) -> None:
    header = {"format": MEASUREMENTS_FORMAT, "version": MEASUREMENTS_VERSION, "n_systems": shape.n_systems}
    write_records(
        path,
        header,
        ({"name": m.name, "outcomes": [list(o.members) for o in m.outcomes]} for m in measurements),
    )
