"""
Permutations of ontic states and the allowed transformation groups.
"""

import numpy as np
import pytest

from knowbal.core.errors import CacheMissError, ShapeMismatchError, TransformationError
from knowbal.ontic import SystemShape, conjoin, from_cells
from knowbal.transforms import (
    Permutation,
    allowed_group,
    classify_n1,
    closure,
    cnot_analogue,
    compose,
    cycle_notation,
    embed,
    entangling_transition_source,
    from_cycles,
    from_label_map,
    identity,
    induced_matrix,
    invert,
    is_allowed,
    load_group,
    local,
    orbit,
    parity,
    relation_permutation,
    save_group,
    standard_generators,
    system_swap,
)
from knowbal.validity import CatalogStore


def single(*labels):
    return from_cells(SystemShape(1), labels)


class TestSingleSystem:
    """Permutations of the four labels."""

    def setup_method(self):
        self.cycle = from_cycles("(123)(4)")

    def test_cycle_notation(self):
        assert self.cycle.image == (1, 2, 0, 3)
        assert cycle_notation(self.cycle) == "(123)(4)"
        assert cycle_notation(from_cycles("(13)")) == "(13)(2)(4)"
        assert str(identity(SystemShape(1))) == "(1)(2)(3)(4)"

    def test_malformed_cycles(self):
        with pytest.raises(TransformationError):
            from_cycles("(125)")
        with pytest.raises(TransformationError):
            from_cycles("(12)(23)")
        with pytest.raises(TransformationError):
            from_cycles("12")

    def test_compose_applies_left_first(self):
        p = compose(from_cycles("(12)"), from_cycles("(23)"))
        assert p.apply(single(1, 4)) == single(3, 4)

    def test_inverse(self):
        assert compose(self.cycle, invert(self.cycle)).is_identity()
        assert invert(self.cycle) == from_cycles("(132)(4)")

    def test_label_map(self):
        assert from_label_map([2, 3, 1, 4]) == self.cycle

    def test_parity(self):
        assert parity(from_cycles("(12)")) == -1
        assert parity(self.cycle) == 1
        assert parity(from_cycles("(1234)")) == -1

    def test_not_a_bijection(self):
        with pytest.raises(TransformationError):
            Permutation(SystemShape(1), (0, 0, 1, 2))

    def test_all_permutations_allowed(self, catalog1):
        group = closure([from_cycles("(12)"), from_cycles("(1234)")], catalog1)
        assert group.order == 24
        assert all(is_allowed(p, catalog1) for p in group.elements)

    def test_rotations_and_reflections(self, catalog1):
        assert classify_n1(from_cycles("(123)(4)")) == "rotation"
        assert classify_n1(from_cycles("(13)(24)")) == "rotation"
        assert classify_n1(from_cycles("(13)(2)(4)")) == "reflection"
        assert classify_n1(from_cycles("(1234)")) == "reflection"
        group = closure([from_cycles("(12)"), from_cycles("(1234)")], catalog1)
        for p in group.elements:
            assert (classify_n1(p) == "rotation") == (parity(p) == 1)

    def test_induced_matrix_of_identity(self):
        assert np.allclose(induced_matrix(identity(SystemShape(1))), np.eye(3))

    def test_relation_permutations(self):
        assert relation_permutation(0).is_identity()
        assert relation_permutation(1) == from_cycles("(12)(34)")
        assert relation_permutation(2) == from_cycles("(13)(24)")
        assert relation_permutation(3) == from_cycles("(14)(23)")
        with pytest.raises(TransformationError):
            relation_permutation(4)


class TestPairTransformations:
    """Embedding, swaps and the CNOT analogue."""

    def setup_method(self):
        self.two = SystemShape(2)

    def test_embed_on_second_system(self):
        p = embed(from_cycles("(12)"), [2], self.two)
        assert p.apply(conjoin(single(1, 3), single(1, 3))) == conjoin(single(1, 3), single(2, 3))

    def test_embed_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            embed(cnot_analogue(), [1], self.two)

    def test_local_product(self):
        p = local([from_cycles("(12)"), from_cycles("(34)")])
        assert p.apply(conjoin(single(1, 3), single(1, 3))) == conjoin(single(2, 3), single(1, 4))

    def test_system_swap(self):
        s = conjoin(single(1, 2), single(3, 4))
        assert system_swap(self.two, 1, 2).apply(s) == conjoin(single(3, 4), single(1, 2))

    def test_cnot_entangles(self, catalog2, diagonal):
        assert is_allowed(cnot_analogue(), catalog2)
        assert cnot_analogue().apply(entangling_transition_source()) == diagonal
        assert cnot_analogue().apply(conjoin(single(1, 2), single(1, 2))) == conjoin(single(1, 2), single(1, 2))

    def test_single_transposition_not_allowed(self, catalog2):
        image = list(range(16))
        image[0], image[1] = 1, 0
        assert not is_allowed(Permutation(self.two, tuple(image)), catalog2)

    def test_orbit_of_product_state(self, catalog2):
        generators = [g for _, g in standard_generators(self.two)]
        reached = orbit([conjoin(single(1, 2), single(1, 2))], generators)
        assert reached == set(catalog2.masks(4))

    def test_group_round_trip(self, tmp_path, catalog1):
        group = closure([from_cycles("(12)"), from_cycles("(1234)")], catalog1)
        path = tmp_path / "group.jsonl"
        save_group(group, path)
        assert load_group(path).images() == group.images()


@pytest.mark.slow
class TestAllowedGroup:
    """Full allowed group of a pair."""

    def test_order_and_membership(self, store, catalog2):
        names, gens = zip(*standard_generators(SystemShape(2)))
        generated = closure(gens, catalog2, names)
        full = allowed_group(store, SystemShape(2), catalog2)
        assert full.order == 11520
        assert generated.images() <= full.images()
        assert full.order % 576 == 0
        assert cnot_analogue() in full
        assert system_swap(SystemShape(2), 1, 2) in full

    def test_offline_without_cache(self, tmp_path, catalog2):
        with pytest.raises(CacheMissError):
            allowed_group(CatalogStore(tmp_path, offline=True), SystemShape(2), catalog2)
