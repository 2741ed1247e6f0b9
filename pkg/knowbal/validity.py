"""
Validity of epistemic states and the catalog of all valid states.

A state is valid when
  V1: its size is 2**(2N-k) for a knowledge count 0 <= k <= N,
  V2: every marginal on a nonempty proper subset of systems is valid,
  V3: for every single-system canonical question and each of its outcomes
      that the state allows, the post-measurement state (the allowed part,
      closed under the disturbing swap) is valid.
V3 recurses into sets of the same shape. Sets reached again while still being
checked are taken as valid; results that depend on such an assumption are
only cached once the outermost assumption has been confirmed.
"""

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Set, Tuple, Union

from .core.errors import (
    CacheMissError,
    CatalogFormatError,
    ShapeMismatchError,
    UnsupportedShapeError,
)
from .core.logging import get_logger
from .ontic import (
    LABEL_PAIRS,
    EpistemicState,
    SystemShape,
    all_subsets_of_size,
    is_product,
    iter_bits,
    marginal,
)
from .records import read_records, write_records

logger = get_logger(__name__)

CATALOG_FORMAT = "knowbal-catalog"
CATALOG_VERSION = 1
MAX_SYSTEMS_ENUMERATED = 3

_INF = float("inf")


@dataclass(frozen=True)
class KnowledgeCount:
    """How many of the 2N canonical questions are answered."""

    known: int
    unknown: int


@dataclass(frozen=True)
class Verdict:
    """Outcome of a validity check, naming the first failing rule."""

    valid: bool
    rule: Optional[str] = None
    detail: str = ""


def knowledge_count(s: EpistemicState) -> Optional[KnowledgeCount]:
    """Knowledge count implied by the size of s, or None if the size is not 2**j."""
    size = s.size
    if size & (size - 1):
        return None
    unknown = size.bit_length() - 1
    known = s.shape.question_count - unknown
    if known < 0:
        return None
    return KnowledgeCount(known=known, unknown=unknown)


def local_swap_table(shape: SystemShape, position: int, a: int, b: int) -> Tuple[int, ...]:
    """Index permutation exchanging labels a and b on one system."""
    key = (shape.n_systems, position, a, b)
    table = _SWAP_TABLES.get(key)
    if table is None:
        step = 4 ** (shape.n_systems - position)
        da, db = a - 1, b - 1
        entries = []
        for index in range(shape.ontic_count):
            d = (index // step) % 4
            if d == da:
                index += (db - da) * step
            elif d == db:
                index += (da - db) * step
            entries.append(index)
        table = tuple(entries)
        _SWAP_TABLES[key] = table
    return table


def cylinder_mask(shape: SystemShape, position: int, labels: Tuple[int, ...]) -> int:
    """Mask of every ontic state whose system `position` carries one of `labels`."""
    key = (shape.n_systems, position, labels)
    mask = _CYLINDERS.get(key)
    if mask is None:
        step = 4 ** (shape.n_systems - position)
        mask = 0
        for index in range(shape.ontic_count):
            if (index // step) % 4 + 1 in labels:
                mask |= 1 << index
        _CYLINDERS[key] = mask
    return mask


def permute_mask(mask: int, table: Tuple[int, ...]) -> int:
    out = 0
    for i in iter_bits(mask):
        out |= 1 << table[i]
    return out


_SWAP_TABLES: Dict[Tuple[int, int, int, int], Tuple[int, ...]] = {}
_CYLINDERS: Dict[Tuple[int, int, Tuple[int, ...]], int] = {}


def _mask_marginal(shape: SystemShape, mask: int, positions: Tuple[int, ...]) -> int:
    return marginal(EpistemicState(shape, mask), positions).mask


def _check_supported(shape: SystemShape) -> None:
    if shape.n_systems > MAX_SYSTEMS_ENUMERATED:
        raise UnsupportedShapeError(f"validity supports at most {MAX_SYSTEMS_ENUMERATED} systems")


class ValidityChecker:
    """Memoising evaluator of the validity predicate."""

    def __init__(self):
        self._memo: Dict[int, Dict[int, bool]] = {}

    def clear(self) -> None:
        self._memo.clear()

    def memo_size(self) -> int:
        return sum(len(m) for m in self._memo.values())

    def is_valid(self, s: EpistemicState) -> bool:
        _check_supported(s.shape)
        return self._valid(s.shape, s.mask)

    def is_valid_mask(self, shape: SystemShape, mask: int) -> bool:
        _check_supported(shape)
        if mask <= 0 or mask > shape.full_mask:
            return False
        return self._valid(shape, mask)

    def explain(self, s: EpistemicState) -> Verdict:
        """Validity plus the first failing rule and a short reason."""
        _check_supported(s.shape)
        shape, mask = s.shape, s.mask
        failure = self._static_failure(shape, mask)
        if failure is not None:
            return Verdict(False, failure[0], failure[1])
        for position, pair, update in self._updates(shape, mask):
            if update != mask and not self._valid(shape, update):
                return Verdict(
                    False,
                    "V3",
                    f"outcome {pair[0]}∨{pair[1]} on system {position} leads to the invalid "
                    f"set {EpistemicState(shape, update)}",
                )
        if not self._valid(shape, mask):
            return Verdict(False, "V3", "post-measurement states are not all valid")
        return Verdict(True)

    def _valid(self, shape: SystemShape, mask: int) -> bool:
        memo = self._memo.setdefault(shape.n_systems, {})
        cached = memo.get(mask)
        if cached is not None:
            return cached
        ok, _ = self._visit(shape, mask, {}, [])
        return ok

    def _static_failure(self, shape: SystemShape, mask: int) -> Optional[Tuple[str, str]]:
        size = mask.bit_count()
        if size & (size - 1) or size < shape.pure_size:
            return "V1", f"size {size} is not 2^(2N-k) with 0 <= k <= {shape.n_systems}"
        n = shape.n_systems
        for r in range(1, n):
            for positions in combinations(range(1, n + 1), r):
                sub = SystemShape(r)
                if not self._valid(sub, _mask_marginal(shape, mask, positions)):
                    return "V2", f"marginal on systems {positions} is invalid"
        return None

    def _updates(self, shape: SystemShape, mask: int) -> Iterator[Tuple[int, Tuple[int, int], int]]:
        for position in range(1, shape.n_systems + 1):
            for pair in LABEL_PAIRS:
                inter = mask & cylinder_mask(shape, position, pair)
                if inter:
                    swapped = permute_mask(inter, local_swap_table(shape, position, *pair))
                    yield position, pair, inter | swapped

    def _visit(self, shape: SystemShape, mask: int, on_stack: Dict[int, int], pending: List[int]) -> Tuple[bool, float]:
        memo = self._memo[shape.n_systems]
        cached = memo.get(mask)
        if cached is not None:
            return cached, _INF
        if mask in on_stack:
            return True, on_stack[mask]
        if self._static_failure(shape, mask) is not None:
            memo[mask] = False
            return False, _INF

        depth = len(on_stack)
        on_stack[mask] = depth
        marker = len(pending)
        ok, low = True, _INF
        for _, _, update in self._updates(shape, mask):
            if update == mask:
                continue
            child_ok, child_low = self._visit(shape, update, on_stack, pending)
            if not child_ok:
                ok = False
                break
            low = min(low, child_low)
        del on_stack[mask]

        if not ok:
            memo[mask] = False
            del pending[marker:]
            return False, _INF
        if low >= depth:
            memo[mask] = True
            for m in pending[marker:]:
                memo[m] = True
            del pending[marker:]
            return True, _INF
        pending.append(mask)
        return True, low


default_checker = ValidityChecker()


def is_valid(s: EpistemicState) -> bool:
    """Validity under V1, V2 and V3."""
    return default_checker.is_valid(s)


def explain(s: EpistemicState) -> Verdict:
    return default_checker.explain(s)


def _lex_key(mask: int) -> Tuple[int, ...]:
    return tuple(iter_bits(mask))


@dataclass
class Catalog:
    """Valid states of one shape, grouped by size, each group in lexicographic member order."""

    shape: SystemShape
    by_size: Dict[int, Tuple[int, ...]]
    _index: Set[int] = field(default_factory=set, repr=False, compare=False)

    def __post_init__(self):
        self.by_size = {
            size: tuple(sorted(masks, key=_lex_key)) for size, masks in sorted(self.by_size.items())
        }
        self._index = {m for masks in self.by_size.values() for m in masks}

    def __len__(self) -> int:
        return len(self._index)

    def __iter__(self) -> Iterator[EpistemicState]:
        return iter(self.states())

    def contains(self, s: EpistemicState) -> bool:
        if s.shape != self.shape:
            raise ShapeMismatchError(
                f"catalog is for {self.shape.n_systems} systems, state has {s.shape.n_systems}"
            )
        return s.mask in self._index

    def contains_mask(self, mask: int) -> bool:
        return mask in self._index

    def sizes(self) -> List[int]:
        return list(self.by_size)

    def counts(self) -> Dict[int, int]:
        return {size: len(masks) for size, masks in self.by_size.items()}

    def masks(self, size: Optional[int] = None) -> List[int]:
        if size is not None:
            return list(self.by_size.get(size, ()))
        return [m for masks in self.by_size.values() for m in masks]

    def states(self, size: Optional[int] = None) -> List[EpistemicState]:
        return [EpistemicState(self.shape, m) for m in self.masks(size)]

    def pure_states(self) -> List[EpistemicState]:
        return self.states(self.shape.pure_size)

    def merged(self, other: "Catalog") -> "Catalog":
        if other.shape != self.shape:
            raise ShapeMismatchError("cannot merge catalogs of different shapes")
        by_size = dict(self.by_size)
        by_size.update(other.by_size)
        return Catalog(self.shape, by_size)


def enumerate_valid(
    shape: SystemShape,
    include_mixed: bool = False,
    checker: Optional[ValidityChecker] = None,
    base: Optional[Catalog] = None,
) -> Catalog:
    """
    Build the catalog of valid states.

    Args:
        shape: 1, 2 or 3 systems
        include_mixed: For N=3 also build sizes 16 and 32 (slow)
        checker: Validity evaluator to share memo tables with
        base: Two-system catalog used to prune the three-system search

    Returns:
        Catalog of every valid state (N=3: pure states and the full space,
        plus mixed sizes on request)
    """
    checker = checker or default_checker
    n = shape.n_systems
    if n > MAX_SYSTEMS_ENUMERATED:
        raise UnsupportedShapeError(f"enumeration supports at most {MAX_SYSTEMS_ENUMERATED} systems")
    logger.info("enumeration_started", n_systems=n, include_mixed=include_mixed)

    by_size: Dict[int, List[int]] = {}
    if n <= 2:
        for size in (2 ** j for j in range(n, 2 * n + 1)):
            found = [m for m in all_subsets_of_size(shape, size) if checker.is_valid_mask(shape, m)]
            by_size[size] = found
            logger.debug("enumeration_size_done", n_systems=n, size=size, count=len(found))
    else:
        base = base or enumerate_valid(SystemShape(2), checker=checker)
        by_size[shape.pure_size] = _three_system_pure(shape, base, checker)
        by_size[shape.ontic_count] = [shape.full_mask]

    catalog = Catalog(shape, by_size)
    if n == 3 and include_mixed:
        catalog = extend_mixed(catalog, 16, checker)
        catalog = extend_mixed(catalog, 32, checker)
    logger.info("enumeration_finished", n_systems=n, counts=catalog.counts())
    return catalog


def _three_system_pure(shape: SystemShape, base: Catalog, checker: ValidityChecker) -> List[int]:
    """
    Pure three-system states by row search over the first system.

    Row T_x holds the BC cells paired with A-label x. Measuring the canonical
    outcome {a, b} on A forces T_a ∪ T_b to be empty or a valid two-system
    state, so either exactly two rows are nonempty pure states, or all four
    rows are disjoint pairs whose pairwise unions are pure.
    """
    pure2 = base.masks(size=4)
    candidates: Set[int] = set()

    def pack(rows: Tuple[int, int, int, int]) -> int:
        mask = 0
        for x, row in enumerate(rows):
            mask |= row << (16 * x)
        return mask

    for a, b in combinations(range(4), 2):
        for ta in pure2:
            for tb in pure2:
                if base.contains_mask(ta | tb):
                    rows = [0, 0, 0, 0]
                    rows[a], rows[b] = ta, tb
                    candidates.add(pack(tuple(rows)))

    partners: Dict[int, Set[int]] = {}
    for p in pure2:
        cells = list(iter_bits(p))
        for pair in combinations(cells, 2):
            m1 = (1 << pair[0]) | (1 << pair[1])
            partners.setdefault(m1, set()).add(p ^ m1)
    for t0, p0 in partners.items():
        for t1 in p0:
            for t2 in p0 & partners[t1]:
                for t3 in p0 & partners[t1] & partners[t2]:
                    if base.contains_mask(t0 | t1 | t2 | t3):
                        candidates.add(pack((t0, t1, t2, t3)))

    logger.debug("three_system_candidates", count=len(candidates))
    return [m for m in candidates if checker.is_valid_mask(shape, m)]


def extend_mixed(catalog: Catalog, size: int, checker: Optional[ValidityChecker] = None) -> Catalog:
    """
    Add valid states of `size` built as unions of two disjoint valid states of size/2.
    """
    checker = checker or default_checker
    if size in catalog.by_size:
        return catalog
    halves = catalog.masks(size=size // 2)
    if not halves:
        raise CatalogFormatError(f"catalog has no states of size {size // 2} to combine")
    logger.info("mixed_extension_started", n_systems=catalog.shape.n_systems, size=size)
    unions = {p | q for p, q in combinations(halves, 2) if not p & q}
    found = [m for m in unions if checker.is_valid_mask(catalog.shape, m)]
    logger.info("mixed_extension_finished", size=size, candidates=len(unions), count=len(found))
    return catalog.merged(Catalog(catalog.shape, {size: found}))


def correlation_type(s: EpistemicState) -> str:
    """
    Classify correlations.

    Two systems: product, perfectly-correlated (pure, not product),
    correlated-mixed, or other. Three systems, pure: product,
    pair-correlated or triplet-correlated by the number of pure
    single-system marginals.
    """
    n = s.shape.n_systems
    if n == 1 or is_product(s):
        return "product"
    if n == 2:
        if s.size == 4:
            return "perfectly-correlated"
        if s.size == 8:
            return "correlated-mixed"
        return "other"
    if s.size == s.shape.pure_size:
        pure_marginals = sum(1 for i in range(1, n + 1) if marginal(s, [i]).size == 2)
        return "pair-correlated" if pure_marginals == 1 else "triplet-correlated"
    return "other"


def purification_scan(small: Catalog, large: Catalog, keep: Tuple[int, ...]) -> List[EpistemicState]:
    """Mixed states of `small` that are not a marginal of any pure state of `large`."""
    covered = {marginal(s, keep).mask for s in large.pure_states()}
    return [
        s
        for size in small.sizes()
        if size > small.shape.pure_size
        for s in small.states(size)
        if s.mask not in covered
    ]


def save_catalog(catalog: Catalog, path: Union[str, Path]) -> None:
    header = {"format": CATALOG_FORMAT, "version": CATALOG_VERSION, "n_systems": catalog.shape.n_systems}
    records = (
        {"size": size, "members": list(iter_bits(mask))}
        for size, masks in catalog.by_size.items()
        for mask in masks
    )
    write_records(path, header, records)


def load_catalog(path: Union[str, Path]) -> Catalog:
    header, records = read_records(path, CATALOG_FORMAT, CATALOG_VERSION)
    n = header.get("n_systems")
    if not isinstance(n, int) or n < 1:
        raise CatalogFormatError(f"{path}: bad n_systems in header")
    shape = SystemShape(n)
    by_size: Dict[int, List[int]] = {}
    for record in records:
        members = record.get("members")
        size = record.get("size")
        if not isinstance(members, list) or size != len(members):
            raise CatalogFormatError(f"{path}: malformed record {record!r}")
        mask = 0
        for i in members:
            if not isinstance(i, int) or not 0 <= i < shape.ontic_count:
                raise CatalogFormatError(f"{path}: ontic index out of range in {record!r}")
            mask |= 1 << i
        by_size.setdefault(size, []).append(mask)
    return Catalog(shape, by_size)


class CatalogStore:
    """On-disk cache of catalogs; a cache hit returns the same catalog as a cold build."""

    def __init__(self, cache_dir: Union[str, Path], offline: bool = False,
                 checker: Optional[ValidityChecker] = None):
        self.cache_dir = Path(cache_dir)
        self.offline = offline
        self.checker = checker or default_checker
        self._loaded: Dict[Tuple[int, bool], Catalog] = {}

    def path_for(self, name: str) -> Path:
        return self.cache_dir / name

    def catalog_path(self, n_systems: int, include_mixed: bool = False) -> Path:
        suffix = "-mixed" if include_mixed and n_systems == 3 else ""
        return self.path_for(f"catalog-n{n_systems}{suffix}.jsonl")

    def load_or_build(self, shape: SystemShape, include_mixed: bool = False) -> Catalog:
        include_mixed = include_mixed and shape.n_systems == 3
        key = (shape.n_systems, include_mixed)
        if key in self._loaded:
            return self._loaded[key]
        path = self.catalog_path(shape.n_systems, include_mixed)
        if path.exists():
            logger.info("catalog_cache_hit", path=str(path))
            catalog = load_catalog(path)
        elif self.offline:
            raise CacheMissError(f"no cached catalog at {path} and offline mode is on")
        else:
            base = self.load_or_build(SystemShape(2)) if shape.n_systems == 3 else None
            catalog = enumerate_valid(shape, include_mixed=include_mixed, checker=self.checker, base=base)
            save_catalog(catalog, path)
            logger.info("catalog_cached", path=str(path))
        self._loaded[key] = catalog
        return catalog
