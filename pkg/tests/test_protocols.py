"""
Protocol reports reproduce the toy theory's phenomena.
"""

import pytest

from knowbal.protocols import (
    PROTOCOLS,
    cloner_search,
    dense_coding_run,
    relation_state,
    run_suite,
    single,
    teleportation_run,
    toy_correlation_rows,
)
from knowbal.transforms import relation_permutation


def failures(report):
    return [c.description for c in report.checks if not c.passed]


class TestFastProtocols:
    """Protocols over one and two systems without the full group."""

    @pytest.mark.parametrize(
        "name",
        [
            "analogy",
            "interference",
            "noncommutativity",
            "inverter",
            "steering",
            "broadcast",
            "measurement_updates",
            "toy_table",
            "quantum_table",
        ],
    )
    def test_protocol_passes(self, ctx, name):
        report = PROTOCOLS[name](ctx)
        assert report.checks
        assert failures(report) == []

    def test_dense_coding(self, ctx):
        report = dense_coding_run(ctx, trials=200)
        assert failures(report) == []

    def test_teleportation(self, ctx):
        report = teleportation_run(ctx)
        assert failures(report) == []
        assert report.name == "teleportation"

    def test_teleportation_with_cyclic_relations(self, ctx):
        report = PROTOCOLS["teleportation_cyclic"](ctx)
        assert failures(report) == []
        assert "(1234)" in report.summary

    def test_toy_rows(self):
        rows = toy_correlation_rows()
        assert [r["relation"] for r in rows] == ["(1)(2)(3)(4)", "(12)(34)", "(13)(24)", "(14)(23)"]
        assert all(r["parity"] == 0 for r in rows)

    def test_relation_state(self, diagonal):
        assert relation_state(relation_permutation(0)) == diagonal

    def test_report_text(self, ctx):
        text = PROTOCOLS["inverter"](ctx).to_text()
        assert text.splitlines()[0] == "== inverter [PASS]"

    def test_unknown_protocol(self, ctx):
        with pytest.raises(ValueError):
            run_suite(ctx, ["interference", "telekinesis"])

    def test_suite_is_reproducible(self, ctx):
        first = [r.model_dump() for r in run_suite(ctx, ["interference", "steering"])]
        second = [r.model_dump() for r in run_suite(ctx, ["interference", "steering"])]
        assert first == second


@pytest.mark.slow
class TestSlowProtocols:
    """Protocols needing the three-system catalog or the allowed pair group."""

    @pytest.mark.parametrize(
        "name", ["cloning", "transformations", "catalogs", "monogamy", "purification", "mups"]
    )
    def test_protocol_passes(self, ctx, name):
        assert failures(PROTOCOLS[name](ctx)) == []

    def test_overlapping_states_cannot_be_cloned(self, ctx):
        report = cloner_search(ctx, (single(3, 4), single(1, 3)))
        assert report.passed
        assert "witness" not in report.artifacts
        assert report.artifacts["overlap_before"] != report.artifacts["overlap_after"]

    def test_disjoint_states_can_be_cloned(self, ctx):
        report = cloner_search(ctx, (single(1, 2), single(3, 4)))
        assert report.passed
        assert "witness" in report.artifacts

    def test_cloning_rejects_mixed_targets(self, ctx):
        with pytest.raises(ValueError):
            cloner_search(ctx, (single(1, 2), single(1, 2, 3, 4)))

    def test_closure_against_backtracking(self, ctx):
        artifacts = PROTOCOLS["transformations"](ctx).artifacts
        assert artifacts["allowed_order"] == 11520
        assert artifacts["closure_order"] <= artifacts["allowed_order"]
