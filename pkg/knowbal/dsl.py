"""
A small line-oriented language for toy-theory experiments.

    systems 2
    prepare prod(1|3, 1|2)
    transform cnot on 1,2
    measure bell on 1,2 as r
    assert outcome r == 0

Programs parse to an AST that prints back to canonical text, resolve to
simulator steps, and execute either exactly (branch expansion) or by
Monte Carlo sampling.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .core.errors import DslResolutionError, DslSyntaxError, KnowbalError
from .core.logging import get_logger
from .measurements import (
    bell_analogue,
    canonical_partition,
    make_measurement,
    on_systems,
    parity_measurement,
    product,
)
from .ontic import EpistemicState, SystemShape, conjoin, from_cells, full_state, marginal
from .ontic_sim import (
    Branch,
    Measure,
    Prepare,
    RunConfig,
    Step,
    Transform,
    epistemic_step,
    run_trials,
    validate_program,
)
from .reports import Check, ExecutionReport
from .transforms import (
    canonical_three_system_forms,
    cnot_analogue,
    compose,
    embed,
    from_cycles,
    identity,
    system_swap,
)
from .validity import Catalog

logger = get_logger(__name__)

KEYWORDS = {
    "systems", "prepare", "transform", "measure", "assert", "on", "as", "when",
    "outcome", "state", "marginal", "freq", "between", "and", "prod",
}
NAMED_STATES = ("bell0", "bell1", "bell2", "bell3", "ghz", "mixed")
NAMED_PERMS = ("cnot", "swap", "id")
NAMED_PARTITIONS = ("z", "x", "y", "bell", "zpar")


#######################################
# POSITION / TOKENS
#######################################


@dataclass(frozen=True)
class Span:
    line: int
    column: int


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    span: Span


class Lexer:
    SINGLE = {
        "(": "LPAREN", ")": "RPAREN", "{": "LBRACE", "}": "RBRACE",
        ",": "COMMA", "|": "BAR", "∨": "BAR", "/": "SLASH",
    }

    def __init__(self, text: str):
        self.text = text
        self.idx = 0
        self.line = 1
        self.col = 1

    def _advance(self) -> str:
        ch = self.text[self.idx]
        self.idx += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def _peek(self, offset: int = 0) -> str:
        i = self.idx + offset
        return self.text[i] if i < len(self.text) else ""

    def tokens(self) -> List[Token]:
        result: List[Token] = []
        while self.idx < len(self.text):
            ch = self._peek()
            span = Span(self.line, self.col)
            if ch == "#":
                while self._peek() and self._peek() != "\n":
                    self._advance()
            elif ch == "\n":
                self._advance()
                if result and result[-1].kind != "NEWLINE":
                    result.append(Token("NEWLINE", "\n", span))
            elif ch in " \t\r":
                self._advance()
            elif ch.isdigit():
                digits = ""
                while self._peek().isdigit():
                    digits += self._advance()
                if self._peek() == "." and self._peek(1).isdigit():
                    digits += self._advance()
                    while self._peek().isdigit():
                        digits += self._advance()
                    result.append(Token("DECIMAL", digits, span))
                else:
                    result.append(Token("INT", digits, span))
            elif ch.isalpha() or ch == "_":
                word = ""
                while self._peek().isalnum() or self._peek() == "_":
                    word += self._advance()
                result.append(Token("KEYWORD" if word in KEYWORDS else "IDENT", word, span))
            elif ch == "=" and self._peek(1) == "=":
                self._advance()
                self._advance()
                result.append(Token("EQEQ", "==", span))
            elif ch in self.SINGLE:
                self._advance()
                result.append(Token(self.SINGLE[ch], ch, span))
            else:
                raise DslSyntaxError(f"unexpected character {ch!r}", span.line, span.column)
        end = Span(self.line, self.col)
        if result and result[-1].kind != "NEWLINE":
            result.append(Token("NEWLINE", "\n", end))
        result.append(Token("EOF", "", end))
        return result


#######################################
# AST
#######################################

def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CellsExpr:
    cells: Tuple[Tuple[int, ...], ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class NamedState:
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class ProductExpr:
    parts: Tuple["StateExpr", ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class UnionExpr:
    terms: Tuple["StateExpr", ...]
    span: Optional[Span] = _span()


StateExpr = Union[CellsExpr, NamedState, ProductExpr, UnionExpr]


@dataclass(frozen=True)
class CyclePerm:
    cycles: Tuple[Tuple[int, ...], ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class NamedPerm:
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class NamedPartition:
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class ExplicitPartition:
    outcomes: Tuple[StateExpr, ...]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class PrepareStmt:
    state: StateExpr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class TransformStmt:
    perm: Union[CyclePerm, NamedPerm]
    systems: Tuple[int, ...]
    when: Optional[Tuple[str, int]] = None
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class MeasureStmt:
    partition: Union[NamedPartition, ExplicitPartition]
    systems: Tuple[int, ...]
    binding: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class OutcomePred:
    binding: str
    value: int


@dataclass(frozen=True)
class StatePred:
    state: StateExpr


@dataclass(frozen=True)
class MarginalPred:
    systems: Tuple[int, ...]
    state: StateExpr


@dataclass(frozen=True)
class FreqPred:
    binding: str
    value: int
    low: Fraction
    high: Fraction


Predicate = Union[OutcomePred, StatePred, MarginalPred, FreqPred]


@dataclass(frozen=True)
class AssertStmt:
    predicate: Predicate
    span: Optional[Span] = _span()


Statement = Union[PrepareStmt, TransformStmt, MeasureStmt, AssertStmt]


@dataclass(frozen=True)
class Program:
    n_systems: int
    statements: Tuple[Statement, ...]


#######################################
# PARSER
#######################################


class Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _error(self, message: str, token: Optional[Token] = None):
        token = token or self.current
        found = token.value if token.kind not in ("NEWLINE", "EOF") else token.kind.lower()
        raise DslSyntaxError(f"{message} (found {found!r})", token.span.line, token.span.column)

    def _accept(self, kind: str, value: Optional[str] = None) -> Optional[Token]:
        tok = self.current
        if tok.kind == kind and (value is None or tok.value == value):
            self.pos += 1
            return tok
        return None

    def _expect(self, kind: str, value: Optional[str] = None) -> Token:
        tok = self._accept(kind, value)
        if tok is None:
            self._error(f"expected {value or kind.lower()}")
        return tok

    def _int(self) -> int:
        return int(self._expect("INT").value)

    def program(self) -> Program:
        while self._accept("NEWLINE"):
            pass
        self._expect("KEYWORD", "systems")
        n = self._int()
        if n < 1:
            self._error("systems must be positive", self.tokens[self.pos - 1])
        self._expect("NEWLINE")
        statements = []
        while self.current.kind != "EOF":
            statements.append(self.statement())
            self._expect("NEWLINE")
        return Program(n, tuple(statements))

    def statement(self) -> Statement:
        tok = self.current
        if self._accept("KEYWORD", "prepare"):
            return PrepareStmt(self.state_expr(), tok.span)
        if self._accept("KEYWORD", "transform"):
            perm = self.perm_expr()
            self._expect("KEYWORD", "on")
            systems = self.syslist()
            when = None
            if self._accept("KEYWORD", "when"):
                name = self._expect("IDENT").value
                self._expect("EQEQ")
                when = (name, self._int())
            return TransformStmt(perm, systems, when, tok.span)
        if self._accept("KEYWORD", "measure"):
            part = self.partition_expr()
            self._expect("KEYWORD", "on")
            systems = self.syslist()
            self._expect("KEYWORD", "as")
            binding = self._expect("IDENT").value
            return MeasureStmt(part, systems, binding, tok.span)
        if self._accept("KEYWORD", "assert"):
            return AssertStmt(self.predicate(), tok.span)
        self._error("expected a statement")

    def syslist(self) -> Tuple[int, ...]:
        systems = [self._int()]
        while self._accept("COMMA"):
            systems.append(self._int())
        return tuple(systems)

    def state_expr(self) -> StateExpr:
        start = self.current.span
        terms = [self.state_term()]
        while True:
            bar = self._accept("BAR")
            if bar is None:
                break
            if not self._starts_state_term():
                self._error("expected a state expression after '|'", bar)
            terms.append(self.state_term())
        if len(terms) == 1:
            return terms[0]
        if all(isinstance(t, CellsExpr) for t in terms):
            return CellsExpr(tuple(c for t in terms for c in t.cells), start)
        return UnionExpr(tuple(terms), start)

    def _starts_state_term(self) -> bool:
        tok = self.current
        return tok.kind in ("INT", "LPAREN", "IDENT") or (tok.kind == "KEYWORD" and tok.value == "prod")

    def state_term(self) -> StateExpr:
        tok = self.current
        if self._accept("INT"):
            if len(tok.value) != 1:
                self._error("single-system cells are one label 1..4", tok)
            return CellsExpr(((int(tok.value),),), tok.span)
        if self._accept("LPAREN"):
            cell = [self._int()]
            while self._accept("COMMA"):
                cell.append(self._int())
            self._expect("RPAREN")
            return CellsExpr((tuple(cell),), tok.span)
        if self._accept("KEYWORD", "prod"):
            self._expect("LPAREN")
            parts = [self.state_expr()]
            while self._accept("COMMA"):
                parts.append(self.state_expr())
            self._expect("RPAREN")
            return ProductExpr(tuple(parts), tok.span)
        if self._accept("IDENT"):
            if tok.value not in NAMED_STATES:
                self._error("unknown state name", tok)
            return NamedState(tok.value, tok.span)
        self._error("expected a state expression")

    def perm_expr(self) -> Union[CyclePerm, NamedPerm]:
        tok = self.current
        if tok.kind == "IDENT":
            self.pos += 1
            if tok.value not in NAMED_PERMS:
                self._error("unknown transformation name", tok)
            return NamedPerm(tok.value, tok.span)
        cycles = []
        while self._accept("LPAREN"):
            digits = self._expect("INT")
            self._expect("RPAREN")
            cycles.append(tuple(int(d) for d in digits.value))
        if not cycles:
            self._error("expected cycle notation or a transformation name")
        return CyclePerm(tuple(cycles), tok.span)

    def partition_expr(self) -> Union[NamedPartition, ExplicitPartition]:
        tok = self.current
        if self._accept("IDENT"):
            if tok.value not in NAMED_PARTITIONS:
                self._error("unknown partition name", tok)
            return NamedPartition(tok.value, tok.span)
        if self._accept("LBRACE"):
            outcomes = [self.state_expr()]
            while self._accept("COMMA"):
                outcomes.append(self.state_expr())
            self._expect("RBRACE")
            return ExplicitPartition(tuple(outcomes), tok.span)
        self._error("expected a partition")

    def number(self) -> Fraction:
        tok = self.current
        if self._accept("DECIMAL"):
            return Fraction(tok.value)
        value = Fraction(self._int())
        if self._accept("SLASH"):
            denominator = self._int()
            if denominator == 0:
                self._error("zero denominator", self.tokens[self.pos - 1])
            value /= denominator
        return value

    def predicate(self) -> Predicate:
        if self._accept("KEYWORD", "outcome"):
            name = self._expect("IDENT").value
            self._expect("EQEQ")
            return OutcomePred(name, self._int())
        if self._accept("KEYWORD", "state"):
            self._expect("EQEQ")
            return StatePred(self.state_expr())
        if self._accept("KEYWORD", "marginal"):
            systems = self.syslist()
            self._expect("EQEQ")
            return MarginalPred(systems, self.state_expr())
        if self._accept("KEYWORD", "freq"):
            name = self._expect("IDENT").value
            self._expect("EQEQ")
            value = self._int()
            self._expect("KEYWORD", "between")
            low = self.number()
            self._expect("KEYWORD", "and")
            high = self.number()
            return FreqPred(name, value, low, high)
        self._error("expected outcome, state, marginal or freq")


def parse(text: str) -> Program:
    """Parse program text; raises DslSyntaxError with line and column."""
    return Parser(Lexer(text).tokens()).program()


#######################################
# PRINTER
#######################################


def _fmt_number(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def format_state(expr: StateExpr) -> str:
    if isinstance(expr, CellsExpr):
        return " | ".join(
            str(c[0]) if len(c) == 1 else "(" + ",".join(str(l) for l in c) + ")" for c in expr.cells
        )
    if isinstance(expr, NamedState):
        return expr.name
    if isinstance(expr, ProductExpr):
        return "prod(" + ", ".join(format_state(p) for p in expr.parts) + ")"
    return " | ".join(format_state(t) for t in expr.terms)


def _fmt_systems(systems: Sequence[int]) -> str:
    return ",".join(str(s) for s in systems)


def format_program(program: Program) -> str:
    """Canonical program text; parse(format_program(p)) == p."""
    lines = [f"systems {program.n_systems}"]
    for stmt in program.statements:
        if isinstance(stmt, PrepareStmt):
            lines.append(f"prepare {format_state(stmt.state)}")
        elif isinstance(stmt, TransformStmt):
            if isinstance(stmt.perm, NamedPerm):
                perm = stmt.perm.name
            else:
                perm = "".join("(" + "".join(str(d) for d in c) + ")" for c in stmt.perm.cycles)
            line = f"transform {perm} on {_fmt_systems(stmt.systems)}"
            if stmt.when is not None:
                line += f" when {stmt.when[0]} == {stmt.when[1]}"
            lines.append(line)
        elif isinstance(stmt, MeasureStmt):
            if isinstance(stmt.partition, NamedPartition):
                part = stmt.partition.name
            else:
                part = "{" + ", ".join(format_state(o) for o in stmt.partition.outcomes) + "}"
            lines.append(f"measure {part} on {_fmt_systems(stmt.systems)} as {stmt.binding}")
        else:
            p = stmt.predicate
            if isinstance(p, OutcomePred):
                lines.append(f"assert outcome {p.binding} == {p.value}")
            elif isinstance(p, StatePred):
                lines.append(f"assert state == {format_state(p.state)}")
            elif isinstance(p, MarginalPred):
                lines.append(f"assert marginal {_fmt_systems(p.systems)} == {format_state(p.state)}")
            else:
                lines.append(
                    f"assert freq {p.binding} == {p.value} between "
                    f"{_fmt_number(p.low)} and {_fmt_number(p.high)}"
                )
    return "\n".join(lines) + "\n"


#######################################
# RESOLUTION
#######################################


def _fail(message: str, span: Optional[Span]):
    raise DslResolutionError(message, span.line if span else None, span.column if span else None)


def resolve_state(expr: StateExpr) -> EpistemicState:
    """Evaluate a state expression; its shape follows from its cells."""
    span = getattr(expr, "span", None)
    try:
        if isinstance(expr, CellsExpr):
            widths = {len(c) for c in expr.cells}
            if len(widths) != 1:
                _fail("cells of one state must have the same number of systems", span)
            return from_cells(SystemShape(widths.pop()), expr.cells)
        if isinstance(expr, NamedState):
            if expr.name.startswith("bell"):
                return bell_analogue().outcomes[int(expr.name[4:])]
            if expr.name == "ghz":
                return canonical_three_system_forms()[2]
            return full_state(SystemShape(1))
        if isinstance(expr, ProductExpr):
            state = resolve_state(expr.parts[0])
            for part in expr.parts[1:]:
                state = conjoin(state, resolve_state(part))
            return state
        states = [resolve_state(t) for t in expr.terms]
        mask = 0
        for s in states:
            if s.shape != states[0].shape:
                _fail("union of states over different numbers of systems", span)
            mask |= s.mask
        return EpistemicState(states[0].shape, mask)
    except DslResolutionError:
        raise
    except KnowbalError as e:
        _fail(str(e), span)


def parse_state_literal(text: str) -> EpistemicState:
    """Parse and evaluate a standalone state expression such as "(1,1) | (2,2)"."""
    parser = Parser(Lexer(text).tokens())
    expr = parser.state_expr()
    parser._accept("NEWLINE")
    if parser.current.kind != "EOF":
        parser._error("unexpected text after state expression")
    return resolve_state(expr)


def _resolve_perm(stmt: TransformStmt, shape: SystemShape):
    systems = stmt.systems
    perm = stmt.perm
    if isinstance(perm, CyclePerm):
        local_perm = from_cycles("".join("(" + "".join(map(str, c)) + ")" for c in perm.cycles))
        result = identity(shape)
        for position in systems:
            result = compose(result, embed(local_perm, [position], shape))
        return result
    if perm.name == "id":
        return identity(shape)
    if len(systems) != 2:
        _fail(f"{perm.name} acts on exactly two systems", stmt.span)
    if perm.name == "swap":
        return system_swap(shape, *systems)
    return embed(cnot_analogue(), systems, shape)


def _resolve_measurement(stmt: MeasureStmt, shape: SystemShape, catalogs: Dict[int, Catalog]):
    systems = stmt.systems
    part = stmt.partition
    if isinstance(part, ExplicitPartition):
        outcomes = [resolve_state(o) for o in part.outcomes]
        catalog = catalogs.get(len(systems))
        m = make_measurement(outcomes, catalog, name="custom")
    elif part.name in ("z", "x", "y"):
        local_m = canonical_partition(part.name)
        m = local_m if len(systems) == 1 else product(*([local_m] * len(systems)))
    else:
        if len(systems) != 2:
            _fail(f"{part.name} acts on exactly two systems", stmt.span)
        m = bell_analogue() if part.name == "bell" else parity_measurement()
    return on_systems(m, shape, systems)


@dataclass
class CompiledProgram:
    """Simulator steps plus assertions keyed by the index of the step they follow."""

    shape: SystemShape
    steps: List[Step]
    assertions: List[Tuple[int, AssertStmt]]


def compile_program(program: Program, catalogs: Optional[Dict[int, Catalog]] = None) -> CompiledProgram:
    """Resolve names, shapes and systems into simulator steps."""
    catalogs = catalogs or {}
    shape = SystemShape(program.n_systems)
    steps: List[Step] = []
    assertions: List[Tuple[int, AssertStmt]] = []
    bindings = set()
    for stmt in program.statements:
        try:
            if isinstance(stmt, PrepareStmt):
                if steps:
                    _fail("prepare may only appear once, as the first statement", stmt.span)
                state = resolve_state(stmt.state)
                if state.shape != shape:
                    _fail(f"prepared state has {state.shape.n_systems} systems, "
                          f"program declares {shape.n_systems}", stmt.span)
                steps.append(Prepare(state))
                continue
            if not steps:
                _fail("the first statement must be prepare", stmt.span)
            if isinstance(stmt, TransformStmt):
                shape.check_positions(stmt.systems)
                if stmt.when is not None and stmt.when[0] not in bindings:
                    _fail(f"unbound outcome {stmt.when[0]!r}", stmt.span)
                steps.append(Transform(_resolve_perm(stmt, shape), stmt.when))
            elif isinstance(stmt, MeasureStmt):
                shape.check_positions(stmt.systems)
                if stmt.binding in bindings:
                    _fail(f"outcome name {stmt.binding!r} is already bound", stmt.span)
                bindings.add(stmt.binding)
                steps.append(Measure(_resolve_measurement(stmt, shape, catalogs), stmt.binding))
            else:
                p = stmt.predicate
                if isinstance(p, (OutcomePred, FreqPred)) and p.binding not in bindings:
                    _fail(f"unbound outcome {p.binding!r}", stmt.span)
                if isinstance(p, MarginalPred):
                    shape.check_positions(p.systems)
                assertions.append((len(steps) - 1, stmt))
        except DslResolutionError:
            raise
        except KnowbalError as e:
            _fail(str(e), stmt.span)
    if not steps:
        raise DslResolutionError("program has no prepare statement")
    validate_program(steps)
    return CompiledProgram(shape, steps, assertions)


#######################################
# EXECUTION
#######################################


def _describe(stmt: AssertStmt) -> str:
    return format_program(Program(1, (stmt,))).splitlines()[1]


def _state_check(stmt: AssertStmt, states: Sequence[EpistemicState]) -> Check:
    p = stmt.predicate
    expected = resolve_state(p.state)
    if isinstance(p, MarginalPred):
        observed = [marginal(s, p.systems) for s in states]
    else:
        observed = list(states)
    distinct = sorted({str(s) for s in observed})
    passed = all(s.shape == expected.shape and s.mask == expected.mask for s in observed)
    return Check(description=_describe(stmt), expected=str(expected),
                 observed=", ".join(distinct), passed=passed)


def _check_branches(stmt: AssertStmt, branches: Sequence[Branch]) -> Check:
    p = stmt.predicate
    if isinstance(p, OutcomePred):
        seen = sorted({b.binding(p.binding) for b in branches})
        return Check(description=_describe(stmt), expected=str(p.value),
                     observed=",".join(map(str, seen)), passed=seen == [p.value])
    if isinstance(p, FreqPred):
        prob = sum((b.probability for b in branches if b.binding(p.binding) == p.value), Fraction(0))
        return Check(description=_describe(stmt), expected=f"[{p.low}, {p.high}]",
                     observed=str(prob), passed=p.low <= prob <= p.high)
    return _state_check(stmt, [b.state for b in branches])


def execute(
    program: Program,
    mode: str = "epistemic",
    cfg: Optional[RunConfig] = None,
    catalogs: Optional[Dict[int, Catalog]] = None,
) -> ExecutionReport:
    """
    Run a program and evaluate its assertions.

    Args:
        program: Parsed program
        mode: "epistemic" (exact branches) or "monte-carlo"
        cfg: Seed, trials and update rule
        catalogs: Catalogs by number of systems, for validation and max-fidelity updates

    Returns:
        ExecutionReport with one check per assertion
    """
    cfg = cfg or RunConfig()
    catalogs = catalogs or {}
    compiled = compile_program(program, catalogs)
    catalog = catalogs.get(compiled.shape.n_systems)
    report = ExecutionReport(mode=mode, n_systems=compiled.shape.n_systems, seed=cfg.seed)

    if mode == "epistemic":
        snapshots: Dict[int, List[Branch]] = {}
        branches = [Branch(Fraction(1), compiled.steps[0].state)]
        snapshots[0] = branches
        for i, step in enumerate(compiled.steps[1:], start=1):
            branches = [b for br in branches for b in epistemic_step(br, step, cfg.update_rule, catalog)]
            snapshots[i] = branches
        for index, stmt in compiled.assertions:
            report.checks.append(_check_branches(stmt, snapshots[index]))
        report.branches = [
            {"probability": str(b.probability), "outcomes": dict(b.bindings), "state": str(b.state)}
            for b in branches
        ]
    elif mode == "monte-carlo":
        run_cfg = RunConfig(cfg.seed, cfg.n_trials, cfg.update_rule, keep_records=True)
        result = run_trials(compiled.steps, run_cfg, catalog)
        report.trials = run_cfg.n_trials
        report.frequencies = result.frequencies.to_dict(orient="records")
        initial = compiled.steps[0].state
        for index, stmt in compiled.assertions:
            states = [
                EpistemicState(compiled.shape, r.steps[index - 1].state_mask) if index else initial
                for r in result.records
            ]
            p = stmt.predicate
            if isinstance(p, OutcomePred):
                seen = sorted({r.outcome(p.binding) for r in result.records})
                check = Check(description=_describe(stmt), expected=str(p.value),
                              observed=",".join(map(str, seen)), passed=seen == [p.value])
            elif isinstance(p, FreqPred):
                hits = sum(1 for r in result.records if r.outcome(p.binding) == p.value)
                freq = Fraction(hits, run_cfg.n_trials)
                check = Check(description=_describe(stmt), expected=f"[{p.low}, {p.high}]",
                              observed=f"{float(freq):.4f}", passed=p.low <= freq <= p.high)
            else:
                check = _state_check(stmt, states)
            report.checks.append(check)
    else:
        raise KnowbalError(f"unknown execution mode {mode!r}")

    logger.info("program_executed", mode=mode, checks=len(report.checks), passed=report.passed)
    return report
