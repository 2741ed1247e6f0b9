"""
Reversible transformations: permutations of the ontic configuration space.

A permutation is allowed when it maps every valid state to a valid state.
"""

import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .core.errors import (
    CacheMissError,
    CatalogFormatError,
    ShapeMismatchError,
    TransformationError,
    UnsupportedShapeError,
)
from .core.logging import get_logger
from .ontic import EpistemicState, SystemShape, from_cells, iter_bits
from .records import read_records, write_records
from .validity import Catalog, CatalogStore, permute_mask

logger = get_logger(__name__)

GROUP_FORMAT = "knowbal-group"
GROUP_VERSION = 1


@dataclass(frozen=True)
class Permutation:
    """Bijection of ontic indices; image[i] is where index i goes."""

    shape: SystemShape
    image: Tuple[int, ...]

    def __post_init__(self):
        if len(self.image) != self.shape.ontic_count:
            raise TransformationError(
                f"permutation needs {self.shape.ontic_count} entries, got {len(self.image)}"
            )
        if sorted(self.image) != list(range(self.shape.ontic_count)):
            raise TransformationError("image is not a bijection of the configuration space")

    def apply(self, s: EpistemicState) -> EpistemicState:
        if s.shape != self.shape:
            raise ShapeMismatchError("permutation and state have different shapes")
        return EpistemicState(self.shape, permute_mask(s.mask, self.image))

    def apply_index(self, index: int) -> int:
        return self.image[index]

    def is_identity(self) -> bool:
        return all(i == v for i, v in enumerate(self.image))

    def __str__(self) -> str:
        if self.shape.n_systems == 1:
            return cycle_notation(self)
        return "[" + " ".join(str(v) for v in self.image) + "]"


def identity(shape: SystemShape) -> Permutation:
    return Permutation(shape, tuple(range(shape.ontic_count)))


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Apply p, then q."""
    if p.shape != q.shape:
        raise ShapeMismatchError("cannot compose permutations of different shapes")
    return Permutation(p.shape, tuple(q.image[v] for v in p.image))


def invert(p: Permutation) -> Permutation:
    inverse = [0] * len(p.image)
    for i, v in enumerate(p.image):
        inverse[v] = i
    return Permutation(p.shape, tuple(inverse))


def cycles(p: Permutation) -> List[Tuple[int, ...]]:
    """Disjoint cycles over 0-based indices, each starting at its smallest element."""
    seen = set()
    result = []
    for start in range(len(p.image)):
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        nxt = p.image[start]
        while nxt != start:
            cycle.append(nxt)
            seen.add(nxt)
            nxt = p.image[nxt]
        result.append(tuple(cycle))
    return result


def parity(p: Permutation) -> int:
    """+1 for even permutations, -1 for odd ones."""
    transpositions = sum(len(c) - 1 for c in cycles(p))
    return -1 if transpositions % 2 else 1


def cycle_notation(p: Permutation) -> str:
    """Single-system cycle notation: nontrivial cycles first, then fixed points, e.g. (234)(1)."""
    if p.shape.n_systems != 1:
        raise UnsupportedShapeError("cycle notation is only used for single systems")
    cs = cycles(p)
    moving = [c for c in cs if len(c) > 1]
    fixed = [c for c in cs if len(c) == 1]
    return "".join("(" + "".join(str(i + 1) for i in c) + ")" for c in moving + fixed)


_CYCLE_RE = re.compile(r"^(\((?:[1-4]+)\))+$")


def from_cycles(text: str) -> Permutation:
    """Parse single-system cycle notation such as "(123)(4)" or "(12)(34)"."""
    compact = text.replace(" ", "")
    if not _CYCLE_RE.match(compact):
        raise TransformationError(f"malformed cycle notation: {text!r}")
    image = list(range(4))
    seen: Set[int] = set()
    for group in re.findall(r"\(([1-4]+)\)", compact):
        labels = [int(ch) - 1 for ch in group]
        if seen & set(labels) or len(set(labels)) != len(labels):
            raise TransformationError(f"label repeated in cycle notation: {text!r}")
        seen.update(labels)
        for k, label in enumerate(labels):
            image[label] = labels[(k + 1) % len(labels)]
    return Permutation(SystemShape(1), tuple(image))


def from_label_map(mapping: Sequence[int]) -> Permutation:
    """Single-system permutation from the images of labels 1..4."""
    if len(mapping) != 4:
        raise TransformationError("label map needs four entries")
    return Permutation(SystemShape(1), tuple(label - 1 for label in mapping))


def embed(p: Permutation, positions: Sequence[int], shape: SystemShape) -> Permutation:
    """
    Act with a k-system permutation on the given systems of a larger shape.

    Args:
        p: Permutation on len(positions) systems
        positions: Host positions (1-based); positions[0] plays p's system 1
        shape: Host shape

    Returns:
        Permutation on the host shape leaving other systems alone
    """
    positions = shape.check_positions(positions)
    if p.shape.n_systems != len(positions):
        raise ShapeMismatchError(
            f"permutation acts on {p.shape.n_systems} systems, {len(positions)} positions given"
        )
    image = []
    for index in range(shape.ontic_count):
        labels = list(shape.decode(index))
        sub = p.shape.decode(p.image[p.shape.encode([labels[q - 1] for q in positions])])
        for q, label in zip(positions, sub):
            labels[q - 1] = label
        image.append(shape.encode(labels))
    return Permutation(shape, tuple(image))


def local(perms: Sequence[Permutation]) -> Permutation:
    """Product of single-system permutations, one per system."""
    shape = SystemShape(len(perms))
    result = identity(shape)
    for position, p in enumerate(perms, start=1):
        if p.shape.n_systems != 1:
            raise ShapeMismatchError("local() takes single-system permutations")
        if not p.is_identity():
            result = compose(result, embed(p, [position], shape))
    return result


def system_swap(shape: SystemShape, i: int, j: int) -> Permutation:
    """Exchange the labels of systems i and j."""
    shape.check_positions([i, j])
    image = []
    for index in range(shape.ontic_count):
        labels = list(shape.decode(index))
        labels[i - 1], labels[j - 1] = labels[j - 1], labels[i - 1]
        image.append(shape.encode(labels))
    return Permutation(shape, tuple(image))


def relation_permutation(k: int) -> Permutation:
    """Klein relations: 0 (1)(2)(3)(4), 1 (12)(34), 2 (13)(24), 3 (14)(23)."""
    if k not in range(4):
        raise TransformationError(f"relation index must be 0..3, got {k}")
    return Permutation(SystemShape(1), tuple(i ^ k for i in range(4)))


def _bits(label: int) -> Tuple[int, int]:
    return (label - 1) >> 1, (label - 1) & 1


def _label(q: int, p: int) -> int:
    return 1 + 2 * q + p


def cnot_analogue() -> Permutation:
    """
    Two-system entangling permutation: q_B ← q_B⊕q_A and p_A ← p_A⊕p_B.

    Takes (1∨3)·(1∨2) to (1·1)∨(2·2)∨(3·3)∨(4·4).
    """
    shape = SystemShape(2)
    image = []
    for index in range(shape.ontic_count):
        x, y = shape.decode(index)
        qa, pa = _bits(x)
        qb, pb = _bits(y)
        image.append(shape.encode((_label(qa, pa ^ pb), _label(qb ^ qa, pb))))
    return Permutation(shape, tuple(image))


def entangling_transition_source() -> EpistemicState:
    """Product state sent to the diagonal correlated state by cnot_analogue."""
    return from_cells(SystemShape(2), [(1, 1), (1, 2), (3, 1), (3, 2)])


def is_allowed(p: Permutation, catalog: Catalog) -> bool:
    """True if p maps every catalog state to a catalog state."""
    if p.shape != catalog.shape:
        raise ShapeMismatchError("permutation and catalog have different shapes")
    return all(catalog.contains_mask(permute_mask(m, p.image)) for m in catalog.masks())


def standard_generators(shape: SystemShape) -> List[Tuple[str, Permutation]]:
    """Named generators: (12) and (1234) on each system, adjacent swaps, CNOTs on adjacent pairs."""
    transposition = from_cycles("(12)")
    four_cycle = from_cycles("(1234)")
    result = []
    n = shape.n_systems
    for position in range(1, n + 1):
        result.append((f"(12)@{position}", embed(transposition, [position], shape)))
        result.append((f"(1234)@{position}", embed(four_cycle, [position], shape)))
    for position in range(1, n):
        result.append((f"swap@{position},{position + 1}", system_swap(shape, position, position + 1)))
        result.append((f"cnot@{position},{position + 1}", embed(cnot_analogue(), [position, position + 1], shape)))
    return result


@dataclass
class TransformationGroup:
    """A finite set of permutations closed under composition."""

    shape: SystemShape
    elements: Tuple[Permutation, ...]
    generators: Tuple[Permutation, ...] = ()
    generator_names: Tuple[str, ...] = ()
    method: str = "closure"
    _images: FrozenSet[Tuple[int, ...]] = field(default=frozenset(), repr=False, compare=False)

    def __post_init__(self):
        self.elements = tuple(sorted(self.elements, key=lambda p: p.image))
        self._images = frozenset(p.image for p in self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return self.order

    def __contains__(self, p: Permutation) -> bool:
        return p.shape == self.shape and p.image in self._images

    def images(self) -> FrozenSet[Tuple[int, ...]]:
        return self._images


def closure(
    generators: Sequence[Permutation],
    catalog: Optional[Catalog] = None,
    names: Sequence[str] = (),
) -> TransformationGroup:
    """
    Group generated by the given permutations.

    Args:
        generators: Nonempty list of permutations of one shape
        catalog: When given, every generator must be allowed
        names: Optional labels for the generators

    Returns:
        TransformationGroup of every product of generators
    """
    if not generators:
        raise TransformationError("closure needs at least one generator")
    shape = generators[0].shape
    for g in generators:
        if g.shape != shape:
            raise ShapeMismatchError("generators live on different shapes")
        if catalog is not None and not is_allowed(g, catalog):
            raise TransformationError(f"generator {g} is not an allowed transformation")

    start = identity(shape).image
    seen: Set[Tuple[int, ...]] = {start}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        for g in generators:
            nxt = tuple(g.image[v] for v in current)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    logger.info("closure_finished", n_systems=shape.n_systems, order=len(seen))
    return TransformationGroup(
        shape,
        tuple(Permutation(shape, img) for img in seen),
        tuple(generators),
        tuple(names),
        "closure",
    )


def _submasks(mask: int) -> Iterable[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def enumerate_allowed(
    shape: SystemShape, catalog: Catalog, reference: Optional[TransformationGroup] = None
) -> TransformationGroup:
    """
    Every allowed permutation, by backtracking over ontic images.

    A partial assignment is pruned as soon as the image of the assigned part
    of some catalog state fits inside no catalog state of the same size.
    With a transitive reference group of allowed permutations, only
    permutations fixing index 0 are searched and the rest are recovered as
    products with reference elements moving 0.
    """
    n = shape.n_systems
    if n > 2:
        raise UnsupportedShapeError("backtracking over allowed permutations supports at most 2 systems")
    if catalog.shape != shape:
        raise ShapeMismatchError("catalog shape differs from the requested shape")

    size = shape.ontic_count
    states = [m for m in catalog.masks() if m != shape.full_mask]
    sizes = [m.bit_count() for m in states]
    extendable: Dict[int, Set[int]] = {}
    for m, k in zip(states, sizes):
        extendable.setdefault(k, set()).update(_submasks(m))
    containing = [[c for c, m in enumerate(states) if m >> i & 1] for i in range(size)]

    movers: Dict[int, Permutation] = {}
    if reference is not None:
        for p in reference.elements:
            movers.setdefault(p.image[0], p)
    quotient = len(movers) == size
    logger.info("backtracking_started", n_systems=n, quotient=quotient)

    img = [0] * len(states)
    image = [-1] * size
    found: List[Tuple[int, ...]] = []
    nodes = 0

    def assign(i: int, used: int) -> None:
        nonlocal nodes
        nodes += 1
        if i == size:
            found.append(tuple(image))
            return
        choices = (0,) if quotient and i == 0 else range(size)
        for v in choices:
            bit = 1 << v
            if used & bit:
                continue
            touched = []
            ok = True
            for c in containing[i]:
                img[c] |= bit
                touched.append(c)
                if img[c] not in extendable[sizes[c]]:
                    ok = False
                    break
            if ok:
                image[i] = v
                assign(i + 1, used | bit)
                image[i] = -1
            for c in touched:
                img[c] ^= bit

    assign(0, 0)

    elements = [Permutation(shape, img_) for img_ in found]
    if quotient:
        elements = [compose(s, t) for t in movers.values() for s in elements]
    logger.info("backtracking_finished", n_systems=n, order=len(elements), nodes=nodes)
    return TransformationGroup(shape, tuple(elements), method="backtracking")


def orbit(seeds: Iterable[EpistemicState], generators: Sequence[Permutation]) -> Set[int]:
    """Masks reachable from the seeds under the generators."""
    seen: Set[int] = set()
    queue = deque()
    for s in seeds:
        if s.mask not in seen:
            seen.add(s.mask)
            queue.append(s.mask)
    while queue:
        m = queue.popleft()
        for g in generators:
            nxt = permute_mask(m, g.image)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def canonical_three_system_forms() -> List[EpistemicState]:
    """Representatives of the product, pair-correlated and triplet-correlated pure forms."""
    shape = SystemShape(3)
    product = from_cells(shape, [(a, b, c) for a in (1, 2) for b in (1, 2) for c in (1, 2)])
    pair = from_cells(shape, [(x, x, c) for x in (1, 2, 3, 4) for c in (1, 2)])
    ghz = from_cells(
        shape,
        [(1, 1, 1), (1, 2, 2), (2, 1, 2), (2, 2, 1), (3, 3, 3), (3, 4, 4), (4, 3, 4), (4, 4, 3)],
    )
    return [product, pair, ghz]


def induced_matrix(p: Permutation) -> np.ndarray:
    """3x3 action of a single-system permutation on the Bloch directions of the pure states."""
    from .quantum_ref import AXIS_STATES, bloch_vector

    if p.shape.n_systems != 1:
        raise UnsupportedShapeError("induced_matrix is defined for single systems")
    columns = [bloch_vector(p.apply(from_cells(p.shape, cells))) for cells in AXIS_STATES]
    return np.column_stack(columns)


def classify_n1(p: Permutation) -> str:
    """'rotation' when the induced Bloch map has determinant +1, otherwise 'reflection'."""
    det = float(np.linalg.det(induced_matrix(p)))
    return "rotation" if det > 0 else "reflection"


def save_group(group: TransformationGroup, path: Union[str, Path]) -> None:
    header = {
        "format": GROUP_FORMAT,
        "version": GROUP_VERSION,
        "n_systems": group.shape.n_systems,
        "method": group.method,
    }
    write_records(path, header, ({"image": list(p.image)} for p in group.elements))


def load_group(path: Union[str, Path]) -> TransformationGroup:
    header, records = read_records(path, GROUP_FORMAT, GROUP_VERSION)
    shape = SystemShape(header["n_systems"])
    try:
        elements = tuple(Permutation(shape, tuple(r["image"])) for r in records)
    except (KeyError, TypeError, TransformationError) as e:
        raise CatalogFormatError(f"{path}: malformed group record: {e}") from e
    return TransformationGroup(shape, elements, method=header.get("method", "closure"))


def allowed_group(store: CatalogStore, shape: SystemShape, catalog: Catalog) -> TransformationGroup:
    """Full allowed group for N <= 2, cached next to the catalogs."""
    path = store.path_for(f"group-n{shape.n_systems}.jsonl")
    if path.exists():
        return load_group(path)
    if store.offline:
        raise CacheMissError(f"no cached group at {path} and offline mode is on")
    names, gens = zip(*standard_generators(shape))
    reference = closure(gens, catalog, names)
    group = enumerate_allowed(shape, catalog, reference)
    save_group(group, path)
    return group
