"""
Measurements, update rules and mutually unbiased sets.
"""

import pytest
from fractions import Fraction

from knowbal.core.errors import (
    MeasurementError,
    OutcomeImpossibleError,
    ShapeMismatchError,
    UnsupportedShapeError,
)
from knowbal.measurements import (
    are_mutually_unbiased,
    bell_analogue,
    canonical_partition,
    canonical_partitions,
    classify,
    enumerate_maximal,
    epistemic_update,
    find_mup_sets,
    make_measurement,
    max_mup_size,
    on_systems,
    outcome_probabilities,
    parity_measurement,
    product,
    render_grid,
    save_measurements,
    update_max_fidelity_detailed,
)
from knowbal.ontic import SystemShape, conjoin, from_cells, full_state
from knowbal.records import read_records
from knowbal.transforms import from_cycles


def single(*labels):
    return from_cells(SystemShape(1), labels)


class TestConstruction:
    """Partitions into valid states."""

    def test_canonical_partitions(self):
        z, x, y = canonical_partitions()
        assert [str(o) for o in z.outcomes] == ["1∨2", "3∨4"]
        assert [str(o) for o in x.outcomes] == ["1∨3", "2∨4"]
        assert z.is_local and z.is_maximal
        assert z.labels == ["I", "II"]

    def test_unknown_partition(self):
        with pytest.raises(MeasurementError):
            canonical_partition("w")

    def test_overlapping_outcomes(self):
        with pytest.raises(MeasurementError):
            make_measurement([single(1, 2), single(2, 3)])

    def test_outcomes_must_cover(self):
        with pytest.raises(MeasurementError):
            make_measurement([single(1, 2)])

    def test_outcomes_must_be_valid(self, catalog1):
        with pytest.raises(MeasurementError):
            make_measurement([single(1), single(2, 3, 4)], catalog1)

    def test_retargeted_measurement(self, two):
        z2 = on_systems(canonical_partition("z"), two, [2])
        assert z2.targets == (2,)
        assert z2.outcome_of(two.encode((4, 1))) == 0
        assert z2.outcome_of(two.encode((1, 4))) == 1

    def test_classify(self):
        z, x, _ = canonical_partitions()
        assert classify(z) == "local"
        assert classify(product(z, x)) == "product"
        assert classify(bell_analogue()) == "joint"
        assert classify(parity_measurement()) == "joint"

    def test_render_bell_grid(self):
        lines = render_grid(bell_analogue()).splitlines()
        assert lines[0] == "4 |  IV III  II   I"
        assert lines[3] == "1 |   I  II III  IV"
        with pytest.raises(UnsupportedShapeError):
            render_grid(canonical_partition("z"))

    def test_save_measurements(self, tmp_path, one):
        path = tmp_path / "m.jsonl"
        save_measurements(canonical_partitions(), path, one)
        header, records = read_records(path, "knowbal-measurements", 1)
        assert header["n_systems"] == 1
        assert records[0] == {"name": "z", "outcomes": [[0, 1], [2, 3]]}


class TestUpdates:
    """Probabilities and knowledge updates."""

    def setup_method(self):
        self.z, self.x, self.y = canonical_partitions()
        self.prepared = conjoin(single(2, 3), single(1, 2))

    def test_single_system_probabilities(self):
        assert outcome_probabilities(single(1, 2), self.x) == [Fraction(1, 2), Fraction(1, 2)]
        assert outcome_probabilities(single(1, 2), self.z) == [1, 0]

    def test_local_update_disturbs(self):
        assert epistemic_update(single(1, 2), self.x, 0) == single(1, 3)
        assert epistemic_update(single(1, 2), self.x, 1) == single(2, 4)

    def test_trivial_update(self):
        trivial = make_measurement([full_state(SystemShape(1))])
        assert epistemic_update(single(1, 3), trivial, 0) == single(1, 3)

    def test_impossible_outcome(self):
        with pytest.raises(OutcomeImpossibleError):
            epistemic_update(single(1, 2), self.z, 1)

    def test_update_errors(self, two):
        with pytest.raises(MeasurementError):
            epistemic_update(single(1, 2), self.z, 0, rule="nearest")
        with pytest.raises(ShapeMismatchError):
            epistemic_update(single(1, 2), bell_analogue(), 0)
        with pytest.raises(MeasurementError):
            epistemic_update(self.prepared, parity_measurement(), 0)
        with pytest.raises(MeasurementError):
            self.z.base_mask(2)

    def test_product_measurement_on_correlated_state(self, diagonal):
        zz = product(self.z, self.z)
        assert outcome_probabilities(diagonal, zz) == [Fraction(1, 2), 0, 0, Fraction(1, 2)]
        assert epistemic_update(diagonal, zz, 0) == conjoin(single(1, 2), single(1, 2))

    def test_local_measurement_on_one_system(self, diagonal, two):
        x2 = on_systems(self.x, two, [2])
        after = epistemic_update(diagonal, x2, 0)
        assert after.size == 4
        assert outcome_probabilities(after, x2) == [1, 0]

    def test_bell_outcomes(self, diagonal):
        bell = bell_analogue()
        assert outcome_probabilities(self.prepared, bell) == [Fraction(1, 4)] * 4
        assert epistemic_update(self.prepared, bell, 0) == diagonal

    def test_parity_max_fidelity(self, catalog2):
        zpar = parity_measurement()
        assert outcome_probabilities(self.prepared, zpar) == [Fraction(1, 2), Fraction(1, 2)]
        detailed = update_max_fidelity_detailed(self.prepared, zpar.outcome_base(0), catalog2)
        assert detailed.state == conjoin(single(1, 2), single(1, 2))
        assert detailed.fidelity_squared == Fraction(1, 4)
        assert detailed.tied == ()
        assert epistemic_update(self.prepared, zpar, 0, catalog=catalog2) == detailed.state

    def test_parity_outcome_base(self):
        zpar = parity_measurement()
        after = epistemic_update(self.prepared, zpar, 0, rule="outcome-base")
        assert after == zpar.outcome_base(0)
        assert after.size == 8


class TestUnbiased:
    """Mutually unbiased measurement sets."""

    def test_pairwise_relation(self):
        z, x, y = canonical_partitions()
        assert are_mutually_unbiased(z, x)
        assert are_mutually_unbiased(x, y)
        assert not are_mutually_unbiased(z, z)

    def test_single_system_set(self, one, catalog1):
        assert len(enumerate_maximal(one, catalog1)) == 3
        sets = find_mup_sets(one, 3, catalog1)
        assert len(sets) == 1
        assert sets[0].common_fidelity_squared == Fraction(1, 4)
        assert sets[0].common_fidelity == 0.5
        assert max_mup_size(one, catalog1) == 3
        assert find_mup_sets(one, 4, catalog1) == []

    def test_pair_quintuple(self):
        z, x, y = canonical_partitions()
        quintuple = [
            product(z, z),
            product(x, x),
            product(y, y),
            bell_analogue(from_cycles("(123)(4)")),
            bell_analogue(from_cycles("(132)(4)")),
        ]
        for i, a in enumerate(quintuple):
            for b in quintuple[i + 1:]:
                assert are_mutually_unbiased(a, b), (a.name, b.name)

    def test_enumerate_rejects_three_systems(self, catalog1):
        with pytest.raises(UnsupportedShapeError):
            enumerate_maximal(SystemShape(3), catalog1)


@pytest.mark.slow
class TestPairMups:
    """Exhaustive search over maximal pair measurements."""

    def test_largest_set(self, two, catalog2):
        measurements = enumerate_maximal(two, catalog2)
        assert all(m.is_maximal for m in measurements)
        assert max_mup_size(two, catalog2, measurements) == 5
        first = find_mup_sets(two, 5, catalog2, exhaustive=False, measurements=measurements)[0]
        assert first.common_fidelity_squared == Fraction(1, 16)
