"""
Exact branch expansion and Monte Carlo simulation.
"""

import numpy as np
import pytest
from fractions import Fraction

from knowbal.core.errors import KnowbalError, MeasurementError, SimulationInvariantError
from knowbal.measurements import canonical_partition, on_systems, parity_measurement
from knowbal.ontic import EpistemicState, SystemShape, conjoin, from_cells, marginal
from knowbal.ontic_sim import (
    Measure,
    Prepare,
    RunConfig,
    Transform,
    disturb,
    epistemic_branches,
    expected_distribution,
    run_trial,
    run_trials,
    trial_rng,
    validate_program,
)
from knowbal.transforms import cnot_analogue, from_cycles


def single(*labels):
    return from_cells(SystemShape(1), labels)


class TestProgramChecks:
    """Structure of step lists and run parameters."""

    def test_run_config_validation(self):
        with pytest.raises(ValueError):
            RunConfig(seed=-1)
        with pytest.raises(ValueError):
            RunConfig(n_trials=0)
        with pytest.raises(ValueError):
            RunConfig(update_rule="nearest")

    def test_program_must_start_with_prepare(self):
        with pytest.raises(KnowbalError):
            validate_program([])
        with pytest.raises(KnowbalError):
            validate_program([Measure(canonical_partition("z"), "a")])

    def test_single_prepare(self):
        with pytest.raises(KnowbalError):
            validate_program([Prepare(single(1, 2)), Prepare(single(1, 3))])

    def test_shape_checks(self):
        with pytest.raises(KnowbalError):
            validate_program([Prepare(single(1, 2)), Transform(cnot_analogue())])
        with pytest.raises(KnowbalError):
            validate_program([Prepare(single(1, 2)), Measure(parity_measurement(), "a")])

    def test_bindings(self):
        z = canonical_partition("z")
        with pytest.raises(KnowbalError):
            validate_program([Prepare(single(1, 2)), Measure(z, "a"), Measure(z, "a")])
        with pytest.raises(KnowbalError):
            validate_program([Prepare(single(1, 2)), Transform(from_cycles("(12)"), when=("a", 0))])
        assert validate_program([Prepare(single(1, 2)), Measure(z, "a")]) == SystemShape(1)


class TestBranches:
    """Exact outcome histories."""

    def test_measurement_splits_branches(self):
        steps = [Prepare(single(1, 2)), Measure(canonical_partition("x"), "a")]
        branches = epistemic_branches(steps)
        assert [b.probability for b in branches] == [Fraction(1, 2), Fraction(1, 2)]
        assert [str(b.state) for b in branches] == ["1∨3", "2∨4"]
        assert branches[1].binding("a") == 1
        assert expected_distribution(branches) == {"a": {0: Fraction(1, 2), 1: Fraction(1, 2)}}

    def test_guarded_transform(self):
        steps = [
            Prepare(single(1, 2)),
            Measure(canonical_partition("x"), "a"),
            Transform(from_cycles("(12)(34)"), when=("a", 1)),
        ]
        assert {str(b.state) for b in epistemic_branches(steps)} == {"1∨3"}

    def test_steering_through_correlation(self, diagonal, two):
        steps = [Prepare(diagonal), Measure(on_systems(canonical_partition("x"), two, [1]), "a")]
        for branch in epistemic_branches(steps):
            expected = ("1∨3", "2∨4")[branch.binding("a")]
            assert str(marginal(branch.state, [2])) == expected

    def test_non_maximal_joint_needs_catalog(self, catalog2):
        steps = [Prepare(conjoin(single(2, 3), single(1, 2))), Measure(parity_measurement(), "p")]
        with pytest.raises(MeasurementError):
            epistemic_branches(steps)
        assert len(epistemic_branches(steps, catalog=catalog2)) == 2


class TestMonteCarlo:
    """Sampled trials against exact expectations."""

    def setup_method(self):
        self.steps = [
            Prepare(single(1, 2)),
            Measure(canonical_partition("x"), "a"),
            Measure(canonical_partition("z"), "b"),
        ]
        self.cfg = RunConfig(seed=11, n_trials=2000)

    def test_trial_streams(self):
        first = trial_rng(3, 5).random(4)
        assert np.array_equal(first, trial_rng(3, 5).random(4))
        assert not np.array_equal(first, trial_rng(3, 6).random(4))

    def test_frequencies_within_three_sigma(self):
        result = run_trials(self.steps, RunConfig(seed=11, n_trials=10_000))
        assert list(result.frequencies.columns[:4]) == ["binding", "outcome", "label", "count"]
        assert result.within_three_sigma
        assert sum(result.final_states.values()) == 10_000
        assert set(result.chi_square) == {"a", "b"}

    def test_seeded_runs_are_reproducible(self):
        a = run_trials(self.steps, self.cfg)
        b = run_trials(self.steps, self.cfg)
        assert a.to_csv() == b.to_csv()
        assert a.to_csv().splitlines()[0] == "binding,outcome,label,count,frequency,expected,expected_exact"

    def test_records_track_the_hidden_state(self):
        cfg = RunConfig(seed=2, n_trials=50, keep_records=True)
        result = run_trials(self.steps, cfg)
        assert len(result.records) == 50
        for record in result.records:
            for step in record.steps:
                assert step.state_mask >> step.ontic & 1

    def test_certain_outcome(self, diagonal, two):
        steps = [
            Prepare(diagonal),
            Measure(on_systems(canonical_partition("z"), two, [1]), "a"),
            Measure(on_systems(canonical_partition("z"), two, [2]), "b"),
        ]
        for trial in range(20):
            record = run_trial(steps, trial, RunConfig(seed=5))
            assert record.outcome("a") == record.outcome("b")

    def test_local_disturbance_stays_in_outcome(self):
        x = canonical_partition("x")
        seen = {disturb(0, x, 0, trial_rng(1, t)) for t in range(40)}
        assert seen == {0, 2}

    def test_joint_disturbance_needs_updated_state(self, two):
        rng = trial_rng(0, 0)
        with pytest.raises(KnowbalError):
            disturb(0, parity_measurement(), 0, rng)
        updated = EpistemicState(two, 0b11)
        assert disturb(0, parity_measurement(), 0, rng, updated) in (0, 1)


class TestLocality:
    """Measurements leave unmeasured systems' labels alone."""

    def setup_method(self):
        self.three = SystemShape(3)
        self.zpar = on_systems(parity_measurement(), self.three, [1, 2])
        self.state = conjoin(conjoin(single(1, 2), single(1, 2)), single(1, 3))

    def test_joint_disturbance_keeps_unmeasured_label(self):
        for label in (1, 3):
            index = self.three.encode((1, 2, label))
            for trial in range(40):
                moved = disturb(index, self.zpar, 0, trial_rng(4, trial), self.state)
                assert self.three.decode(moved)[2] == label
                assert self.state.mask >> moved & 1

    def test_disturbance_without_agreeing_state(self):
        index = self.three.encode((1, 1, 2))
        with pytest.raises(SimulationInvariantError):
            disturb(index, self.zpar, 0, trial_rng(0, 0), self.state)

    @pytest.mark.slow
    def test_trial_keeps_unmeasured_system(self, catalog3):
        steps = [Prepare(self.state), Measure(self.zpar, "p"), Measure(self.zpar, "q")]
        for trial in range(100):
            record = run_trial(steps, trial, RunConfig(seed=9), catalog3)
            third = {self.three.decode(record.initial_ontic)[2]}
            third |= {self.three.decode(step.ontic)[2] for step in record.steps}
            assert len(third) == 1
            assert record.outcome("p") == record.outcome("q") == 0
