"""
Toy program language: parsing, printing, resolution and execution.
"""

from fractions import Fraction
from pathlib import Path

import pytest

from knowbal.core.errors import DslResolutionError, DslSyntaxError, KnowbalError
from knowbal.dsl import (
    CellsExpr,
    FreqPred,
    PrepareStmt,
    Program,
    compile_program,
    execute,
    format_program,
    parse,
    parse_state_literal,
)
from knowbal.ontic import SystemShape
from knowbal.ontic_sim import RunConfig

SCRIPTS = sorted((Path(__file__).resolve().parent.parent / "scripts").glob("*.toy"))


class TestParser:
    """Text to AST and back."""

    def test_minimal_program(self):
        program = parse("systems 1\nprepare 1|2\n")
        assert program == Program(1, (PrepareStmt(CellsExpr(((1,), (2,)))),))

    def test_comments_and_blank_lines(self):
        program = parse("# header\n\nsystems 1\n\nprepare 1|2  # pure\n")
        assert len(program.statements) == 1

    def test_canonical_text(self):
        text = "systems 2\nprepare prod(1|3,1|2)\ntransform cnot on 1,2\nmeasure bell on 1,2 as r\n"
        assert format_program(parse(text)) == (
            "systems 2\nprepare prod(1 | 3, 1 | 2)\ntransform cnot on 1,2\nmeasure bell on 1,2 as r\n"
        )

    @pytest.mark.parametrize("path", SCRIPTS, ids=lambda p: p.stem)
    def test_scripts_print_back(self, path):
        program = parse(path.read_text(encoding="utf-8"))
        assert parse(format_program(program)) == program

    def test_frequency_bounds(self):
        program = parse("systems 1\nprepare 1|2\nmeasure x on 1 as r\nassert freq r == 0 between 1/4 and 0.3\n")
        predicate = program.statements[-1].predicate
        assert predicate == FreqPred("r", 0, Fraction(1, 4), Fraction(3, 10))

    def test_error_position(self):
        with pytest.raises(DslSyntaxError) as info:
            parse("systems 1\nprepare 1|2\nmeasure w on 1 as r\n")
        assert (info.value.line, info.value.column) == (3, 9)
        assert str(info.value).startswith("line 3, column 9:")

    def test_dangling_bar_points_at_bar(self):
        with pytest.raises(DslSyntaxError) as info:
            parse("systems 1\nprepare 1|\n")
        assert (info.value.line, info.value.column) == (2, 10)
        with pytest.raises(DslSyntaxError) as info:
            parse("systems 1\nprepare 1|2|\n")
        assert (info.value.line, info.value.column) == (2, 12)

    def test_unexpected_character(self):
        with pytest.raises(DslSyntaxError) as info:
            parse("systems 1\nprepare 1@2\n")
        assert info.value.line == 2

    def test_bad_header(self):
        with pytest.raises(DslSyntaxError):
            parse("prepare 1|2\n")
        with pytest.raises(DslSyntaxError):
            parse("systems 0\n")

    def test_state_literal(self):
        s = parse_state_literal("(1,1) | (2,2)")
        assert s.shape == SystemShape(2)
        assert s.size == 2
        with pytest.raises(DslSyntaxError):
            parse_state_literal("1|2 extra")


class TestResolution:
    """Names, shapes and bindings."""

    def test_system_out_of_range(self):
        with pytest.raises(DslResolutionError) as info:
            compile_program(parse("systems 1\nprepare 1|2\nmeasure z on 2 as r\n"))
        assert info.value.line == 3

    def test_unbound_outcome(self):
        with pytest.raises(DslResolutionError):
            compile_program(parse("systems 1\nprepare 1|2\nassert outcome r == 0\n"))
        with pytest.raises(DslResolutionError):
            compile_program(parse("systems 1\nprepare 1|2\ntransform (12) on 1 when r == 0\n"))

    def test_prepared_shape_must_match(self):
        with pytest.raises(DslResolutionError):
            compile_program(parse("systems 2\nprepare 1|2\n"))

    def test_prepare_first(self):
        with pytest.raises(DslResolutionError):
            compile_program(parse("systems 1\nmeasure z on 1 as r\n"))

    def test_joint_partition_arity(self):
        with pytest.raises(DslResolutionError):
            compile_program(parse("systems 1\nprepare 1|2\nmeasure bell on 1 as r\n"))

    def test_explicit_partition(self, catalog1):
        compiled = compile_program(
            parse("systems 1\nprepare 1|2\nmeasure {1|4, 2|3} on 1 as r\n"), {1: catalog1}
        )
        assert len(compiled.steps) == 2
        with pytest.raises(DslResolutionError):
            compile_program(parse("systems 1\nprepare 1|2\nmeasure {1, 2|3|4} on 1 as r\n"), {1: catalog1})


class TestExecution:
    """Exact and sampled runs of programs."""

    @pytest.mark.parametrize("path", SCRIPTS, ids=lambda p: p.stem)
    def test_scripts_pass_exactly(self, path, catalog1, catalog2):
        report = execute(parse(path.read_text(encoding="utf-8")), catalogs={1: catalog1, 2: catalog2})
        assert report.checks
        assert report.passed, [c for c in report.checks if not c.passed]

    @pytest.mark.parametrize("stem", ["interference_c", "entangling", "dense_coding"])
    def test_certain_scripts_pass_sampled(self, stem, catalog1, catalog2):
        path = next(p for p in SCRIPTS if p.stem == stem)
        report = execute(
            parse(path.read_text(encoding="utf-8")),
            mode="monte-carlo",
            cfg=RunConfig(seed=3, n_trials=300),
            catalogs={1: catalog1, 2: catalog2},
        )
        assert report.passed
        assert report.trials == 300

    @pytest.mark.slow
    @pytest.mark.parametrize("path", SCRIPTS, ids=lambda p: p.stem)
    def test_scripts_pass_sampled(self, path, catalog1, catalog2):
        report = execute(
            parse(path.read_text(encoding="utf-8")),
            mode="monte-carlo",
            cfg=RunConfig(seed=7, n_trials=10_000),
            catalogs={1: catalog1, 2: catalog2},
        )
        assert report.trials == 10_000
        assert report.passed, [c for c in report.checks if not c.passed]

    def test_failed_assertion_is_reported(self):
        report = execute(parse("systems 1\nprepare 1|2\nmeasure x on 1 as r\nassert outcome r == 0\n"))
        assert not report.passed
        assert report.checks[0].observed == "0,1"
        assert report.checks[0].description == "assert outcome r == 0"

    def test_branches(self):
        report = execute(parse("systems 1\nprepare 1|2\nmeasure x on 1 as r\n"))
        assert [b["probability"] for b in report.branches] == ["1/2", "1/2"]

    def test_unknown_mode(self):
        with pytest.raises(KnowbalError):
            execute(parse("systems 1\nprepare 1|2\n"), mode="quantum")
