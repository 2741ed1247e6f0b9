"""
Self-checking reproductions of the toy theory's signature phenomena.

Every protocol returns a ProtocolReport whose checks are exact, except
Monte Carlo frequency checks, which use the 3-sigma binomial criterion.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .core.logging import get_logger
from .measurements import (
    are_mutually_unbiased,
    bell_analogue,
    canonical_partition,
    enumerate_maximal,
    find_mup_sets,
    make_measurement,
    on_systems,
    outcome_probabilities,
    parity_measurement,
    product,
    update_max_fidelity_detailed,
)
from .ontic import (
    EpistemicState,
    SystemShape,
    CoherentOp,
    coherent_combine,
    conjoin,
    convex_combine,
    fidelity,
    from_cells,
    full_state,
    is_product,
    marginal,
    overlap,
)
from .ontic_sim import Measure, Prepare, RunConfig, Transform, epistemic_branches, run_trials
from .quantum_ref import analog_state, analogy_audit, bell_table, quantum_fidelity
from .reports import ProtocolReport
from .transforms import (
    Permutation,
    TransformationGroup,
    allowed_group,
    canonical_three_system_forms,
    classify_n1,
    closure,
    cnot_analogue,
    cycle_notation,
    embed,
    from_cycles,
    invert,
    is_allowed,
    local,
    orbit,
    parity,
    relation_permutation,
    standard_generators,
    system_swap,
)
from .validity import Catalog, CatalogStore, correlation_type, explain, is_valid, purification_scan

logger = get_logger(__name__)

ONE = SystemShape(1)
TWO = SystemShape(2)
THREE = SystemShape(3)


@dataclass
class ProtocolContext:
    """Catalog access and run parameters shared by the protocols."""

    store: CatalogStore
    cfg: RunConfig = field(default_factory=RunConfig)

    _groups: Dict[int, TransformationGroup] = field(default_factory=dict, repr=False)

    def catalog(self, n: int) -> Catalog:
        return self.store.load_or_build(SystemShape(n))

    def group(self, n: int) -> TransformationGroup:
        if n not in self._groups:
            self._groups[n] = allowed_group(self.store, SystemShape(n), self.catalog(n))
        return self._groups[n]

    def run(self, steps, n_trials: Optional[int] = None, keep_records: bool = False):
        cfg = RunConfig(self.cfg.seed, n_trials or self.cfg.n_trials, self.cfg.update_rule, keep_records)
        catalog = self.catalog(steps[0].state.shape.n_systems) if steps[0].state.shape.n_systems <= 2 else None
        return run_trials(steps, cfg, catalog)


def single(*labels: int) -> EpistemicState:
    return from_cells(ONE, labels)


def diagonal() -> EpistemicState:
    return from_cells(TWO, [(x, x) for x in (1, 2, 3, 4)])


def _dist(probs: Sequence[Fraction]) -> str:
    return "(" + ", ".join(str(p) for p in probs) + ")"


def interference_report(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="interference", summary="1∨2, 3∨4 and 1∨3 measured in {1∨3|2∨4}")
    x = canonical_partition("x")
    cases = {"1∨2": single(1, 2), "3∨4": single(3, 4), "1∨3": single(1, 3)}
    expected = {
        "1∨2": [Fraction(1, 2), Fraction(1, 2)],
        "3∨4": [Fraction(1, 2), Fraction(1, 2)],
        "1∨3": [Fraction(1), Fraction(0)],
    }
    for name, s in cases.items():
        report.check(f"exact distribution for {name}", _dist(expected[name]), _dist(outcome_probabilities(s, x)))
        result = ctx.run([Prepare(s), Measure(x, "r")])
        report.check(f"Monte Carlo within 3σ for {name}", True, result.within_three_sigma)
        report.artifacts[f"frequencies_{name}"] = result.frequencies.to_dict(orient="records")
    coherent = coherent_combine(single(1, 2), single(3, 4), CoherentOp.LOW_LOW)
    convex = convex_combine([single(1, 2), single(3, 4)], ctx.catalog(1))
    report.check("coherent combination +1 of 1∨2 and 3∨4", "1∨3", str(coherent))
    report.check("convex combination of 1∨2 and 3∨4", "1∨2∨3∨4", str(convex))
    return report


def noncommutativity_report(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="noncommutativity", summary="1∨2 measured in z then x, and in x then z")
    z, x = canonical_partition("z"), canonical_partition("x")
    prep = single(1, 2)
    first_z = epistemic_branches([Prepare(prep), Measure(z, "a"), Measure(x, "b")])
    first_x = epistemic_branches([Prepare(prep), Measure(x, "a"), Measure(z, "b")])

    def marginal_dist(branches, name, k):
        return sum((b.probability for b in branches if b.binding(name) == k), Fraction(0))

    report.check("z first: z outcome 1∨2 is certain", Fraction(1), marginal_dist(first_z, "a", 0))
    report.check("z first: x outcomes equally likely", Fraction(1, 2), marginal_dist(first_z, "b", 0))
    report.check("x first: later z outcome 1∨2", Fraction(1, 2), marginal_dist(first_x, "b", 0))
    report.check("x first: later z outcome 3∨4", Fraction(1, 2), marginal_dist(first_x, "b", 1))
    result = ctx.run([Prepare(prep), Measure(x, "a"), Measure(z, "b")])
    report.check("Monte Carlo within 3σ", True, result.within_three_sigma)
    repeat = ctx.run([Prepare(prep), Measure(x, "a"), Measure(x, "b")], keep_records=True)
    same = all(r.outcome("a") == r.outcome("b") for r in repeat.records)
    report.check("immediate repetition reproduces the outcome", True, same)
    return report


def steering_report(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="steering", summary="measurements on A of (1·1)∨(2·2)∨(3·3)∨(4·4)")
    cases = [
        ("z", 0, "(1∨2)·(1∨2)"),
        ("z", 1, "(3∨4)·(3∨4)"),
        ("x", 0, "(1∨3)·(1∨3)"),
        ("x", 1, "(2∨4)·(2∨4)"),
    ]
    for name, k, expected in cases:
        m = on_systems(canonical_partition(name), TWO, [1])
        branches = epistemic_branches([Prepare(diagonal()), Measure(m, "r")])
        state = next(b.state for b in branches if b.binding("r") == k)
        report.check(f"{name} outcome {k} steers B", expected, str(state))
    for name in ("z", "x"):
        m = on_systems(canonical_partition(name), TWO, [1])
        result = ctx.run([Prepare(diagonal()), Measure(m, "r")], keep_records=True)
        constant = all(
            TWO.decode(r.steps[0].ontic)[1] == TWO.decode(r.initial_ontic)[1] for r in result.records
        )
        report.check(f"B ontic coordinate unchanged by {name} on A", True, constant)
    return report


def inverter_search(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="inverter", summary="universal inversion over all 24 permutations")
    required = [((1, 2), (3, 4)), ((1, 3), (2, 4)), ((2, 3), (1, 4))]
    group = closure([from_cycles("(12)"), from_cycles("(1234)")], ctx.catalog(1))
    pairs = [(single(*a), single(*b)) for a, b in required]

    def inverts(p: Permutation, a: EpistemicState, b: EpistemicState) -> bool:
        return p.apply(a) == b and p.apply(b) == a

    partial = [p for p in group.elements if all(inverts(p, a, b) for a, b in pairs[:2])]
    universal = [p for p in partial if inverts(p, *pairs[2])]
    report.check("permutations tested", 24, group.order)
    report.check("permutations performing all three inversions", 0, len(universal))
    report.artifacts["inverting_two_axes"] = [cycle_notation(p) for p in partial]
    p = from_cycles("(12)(34)")
    report.check("(12)(34) inverts 1∨3 and 2∨4", True, inverts(p, single(1, 3), single(2, 4)))
    return report


def cloner_search(ctx: ProtocolContext, states: Tuple[EpistemicState, EpistemicState],
                  blank: Optional[EpistemicState] = None) -> ProtocolReport:
    """Look for an allowed two-system permutation taking s·blank to s·s for both states."""
    blank = single(1, 2) if blank is None else blank
    s1, s2 = states
    for s in (s1, s2):
        if s.shape != ONE or s.size != 2:
            raise ValueError("cloning targets must be pure single-system states")
    report = ProtocolReport(name=f"cloner[{s1},{s2}]", summary=f"blank {blank}")
    group = ctx.group(2)
    sources = [conjoin(s1, blank), conjoin(s2, blank)]
    targets = [conjoin(s1, s1), conjoin(s2, s2)]
    witness = next(
        (p for p in group.elements if all(p.apply(a) == b for a, b in zip(sources, targets))), None
    )
    disjoint_or_equal = overlap(s1, s2) in (0, s1.size)
    report.check("allowed cloner exists", disjoint_or_equal, witness is not None)
    before = overlap(sources[0], sources[1])
    after = overlap(targets[0], targets[1])
    report.check("overlap preserved by required map", disjoint_or_equal, before == after)
    report.artifacts.update({"overlap_before": before, "overlap_after": after, "group_order": group.order})
    if witness is not None:
        report.artifacts["witness"] = list(witness.image)
    return report


def broadcast_check(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="broadcast", summary="pure marginals only arise from products")
    offenders = []
    for s in ctx.catalog(2).states():
        if (marginal(s, [1]).size == 2 or marginal(s, [2]).size == 2) and not is_product(s):
            offenders.append(str(s))
    report.check("correlated states with a pure marginal", 0, len(offenders))
    mixed = from_cells(TWO, [(a, b) for a in (1, 2) for b in (1, 2)] + [(a, b) for a in (3, 4) for b in (3, 4)])
    report.check("correlated mixed state has mixed marginals", (4, 4),
                 (marginal(mixed, [1]).size, marginal(mixed, [2]).size))
    return report


def _max_distinguishable(catalog: Catalog) -> int:
    states = catalog.masks()
    best = 1
    for k in range(2, len(states) + 1):
        if any(all(not a & b for a, b in combinations(group, 2)) for group in combinations(states, k)):
            best = k
        else:
            break
    return best


def dense_coding_run(ctx: ProtocolContext, trials: int = 1000) -> ProtocolReport:
    report = ProtocolReport(name="dense_coding", summary="two bits through one system with a shared relation")
    bell = bell_analogue()
    errors = 0
    for message in range(4):
        encode = embed(relation_permutation(message), [1], TWO)
        steps = [Prepare(diagonal()), Transform(encode), Measure(bell, "r")]
        branches = epistemic_branches(steps)
        report.check(f"message {message:02b} decodes deterministically",
                     [message], [b.binding("r") for b in branches])
        result = ctx.run(steps, n_trials=trials)
        row = result.frequencies
        errors += int(row[row["outcome"] != message]["count"].sum())
    report.check("decode errors over all trials", 0, errors)
    report.check("distinguishable preparations of one system", 2, _max_distinguishable(ctx.catalog(1)))
    return report


def relation_state(r: Permutation) -> EpistemicState:
    """The two-system state {(x, r x)}."""
    return from_cells(TWO, [(x, r.image[x - 1] + 1) for x in (1, 2, 3, 4)])


def relation_correction_steps(prepare: EpistemicState, relations: Sequence[Permutation],
                              measured: Sequence[int], corrected: int):
    """Relation measurement on two systems, then the matching inverse relation on a third."""
    shape = prepare.shape
    m = on_systems(make_measurement([relation_state(r) for r in relations], name="relations"), shape, measured)
    steps = [Prepare(prepare), Measure(m, "r")]
    for k, r in enumerate(relations):
        if not r.is_identity():
            steps.append(Transform(embed(invert(r), [corrected], shape), when=("r", k)))
    return steps


def teleportation_run(ctx: ProtocolContext, unknown: Optional[EpistemicState] = None,
                      relations: Optional[Sequence[Permutation]] = None,
                      name: str = "teleportation") -> ProtocolReport:
    """
    Teleport a single-system state over systems (A′, A, B) = (1, 2, 3).

    A joint relation measurement on A′A is followed by the inverse relation on B,
    guarded on the outcome. Also runs entanglement swapping over four systems.
    """
    unknown = single(1, 3) if unknown is None else unknown
    relations = list(relations) if relations is not None else [relation_permutation(k) for k in range(4)]
    names = ",".join(cycle_notation(r) for r in relations)
    report = ProtocolReport(name=name, summary=f"unknown {unknown}; relations {names}")

    steps = relation_correction_steps(conjoin(unknown, diagonal()), relations, [1, 2], 3)
    branches = epistemic_branches(steps)
    for b in branches:
        k = b.binding("r")
        report.check(f"outcome {k}: final state", str(conjoin(relation_state(relations[k]), unknown)), str(b.state))
        report.check(f"outcome {k}: probability", Fraction(1, 4), b.probability)
    report.check("two bits of communication", 4, len(branches))

    union = 0
    for b in branches:
        union |= marginal(b.state, [3]).mask
    report.check("B description without the outcome", str(unknown), str(EpistemicState(ONE, union)))

    uncorrected = epistemic_branches(steps[:2])
    union = 0
    for b in uncorrected:
        union |= marginal(b.state, [3]).mask
    report.check("B description with no message at all", str(full_state(ONE)), str(EpistemicState(ONE, union)))

    result = ctx.run(steps, keep_records=True)
    transferred = all(
        THREE.decode(r.steps[-1].ontic)[2] == THREE.decode(r.initial_ontic)[0] for r in result.records
    )
    report.check("ontic: B final equals A′ initial", True, transferred)

    cells = [(x, y, y, x) for x in (1, 2, 3, 4) for y in (1, 2, 3, 4)]
    swap_steps = relation_correction_steps(from_cells(SystemShape(4), cells), relations, [1, 2], 3)
    diag_bc = str(diagonal())
    swapped = [str(marginal(b.state, [3, 4])) for b in epistemic_branches(swap_steps)]
    report.check("entanglement swapping leaves B and C related", [diag_bc] * len(swapped), swapped)
    return report


def monogamy_check(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="monogamy", summary="three-system correlations")
    triple = from_cells(THREE, [(x, x, x) for x in (1, 2, 3, 4)])
    verdict = explain(triple)
    report.check("all-equal triple is invalid", False, verdict.valid)
    report.artifacts["triple_rule"] = verdict.rule
    ghz = canonical_three_system_forms()[2]
    report.check("GHZ analogue is valid", True, is_valid(ghz))
    pairs = [(1, 2), (1, 3), (2, 3)]
    report.check("GHZ pair marginals", ["correlated-mixed"] * 3,
                 [correlation_type(marginal(ghz, p)) for p in pairs])
    polygamous = 0
    for s in ctx.catalog(3).pure_states():
        if all(correlation_type(marginal(s, p)) == "perfectly-correlated" for p in pairs):
            polygamous += 1
    report.check("pure states with three perfectly correlated pairs", 0, polygamous)
    return report


def toy_correlation_rows() -> List[Dict[str, object]]:
    rows = []
    for k in range(4):
        relation = relation_permutation(k)
        state = relation_state(relation)
        letters = []
        for basis in ("z", "x", "y"):
            local_m = canonical_partition(basis)
            probs = outcome_probabilities(state, product(local_m, local_m))
            same = probs[0] + probs[3]
            letters.append("C" if same == 1 else ("A" if same == 0 else "-"))
        rows.append({"relation": cycle_notation(relation), "z": letters[0], "x": letters[1],
                     "y": letters[2], "parity": letters.count("A") % 2})
    return rows


def toy_correlation_table(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="toy_table", summary="relation states against same-partition measurements")
    rows = toy_correlation_rows()
    report.check("rows", ["CCC", "CAA", "ACA", "AAC"], [r["z"] + r["x"] + r["y"] for r in rows])
    report.check("every row has even anticorrelation parity", [0] * 4, [r["parity"] for r in rows])
    report.artifacts["table"] = rows
    return report


def quantum_table_report(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="quantum_table", summary="Bell states against same-basis measurements")
    table = bell_table()
    report.check("rows", ["CCA", "CAC", "ACC", "AAA"], ["".join(r) for r in table[["z", "x", "y"]].values])
    report.check("every row has odd anticorrelation parity", [1] * 4, list(table["parity"]))
    report.artifacts["table"] = table.reset_index().to_dict(orient="records")
    return report


def analogy_report(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="analogy", summary="coherent operations and fidelities against qubits")
    rows = analogy_audit()
    mismatches = [i + 1 for i, r in enumerate(rows) if not r.matches]
    report.check("coherent relations that fail to match", [7, 8], mismatches)
    states = ctx.catalog(1).states()
    worst = 0.0
    values = set()
    for a, b in combinations(states, 2):
        classical = fidelity(a, b)
        values.add(round(classical, 12))
        worst = max(worst, abs(classical - quantum_fidelity(analog_state(a), analog_state(b))))
    report.check("pairs compared", 21, len(list(combinations(states, 2))))
    report.check("classical and quantum fidelities agree", True, worst < 1e-12)
    report.check("fidelity values", sorted({0.0, 0.5, round(2 ** -0.5, 12)}), sorted(values))
    return report


def transformations_report(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="transformations", summary="single-system and pair transformation groups")
    c1 = ctx.catalog(1)
    group1 = closure([from_cycles("(12)"), from_cycles("(1234)")], c1)
    report.check("single-system permutations allowed", 24, sum(1 for p in group1.elements if is_allowed(p, c1)))
    named = {"(123)(4)": "rotation", "(13)(24)": "rotation", "(13)(2)(4)": "reflection", "(1234)": "reflection"}
    report.check("named classifications", named, {k: classify_n1(from_cycles(k)) for k in named})
    agree = all((classify_n1(p) == "rotation") == (parity(p) == 1) for p in group1.elements)
    report.check("rotation iff even permutation", True, agree)

    c2 = ctx.catalog(2)
    names, gens = zip(*standard_generators(TWO))
    generated = closure(gens, c2, names)
    full = ctx.group(2)
    report.artifacts.update({"closure_order": generated.order, "allowed_order": full.order,
                             "ratio": str(Fraction(full.order, generated.order)),
                             "closure_matches_backtracking": generated.order == full.order})
    report.check("closure contained in the allowed group", True, generated.images() <= full.images())
    locals_ok = all(local([a, b]) in full for a in group1.elements for b in group1.elements)
    report.check("all 576 local products allowed", True, locals_ok)
    report.check("system swap allowed", True, system_swap(TWO, 1, 2) in full)
    report.check("CNOT analogue allowed", True, cnot_analogue() in full)
    image = list(range(16))
    image[0], image[1] = 1, 0
    report.check("(1,1)↔(1,2) transposition excluded", False, Permutation(TWO, tuple(image)) in full)
    return report


def catalogs_report(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="catalogs", summary="valid states of one, two and three systems")
    c1, c2, c3 = ctx.catalog(1), ctx.catalog(2), ctx.catalog(3)
    report.check("one system", {2: 6, 4: 1}, c1.counts())
    report.check("two systems", {4: 60, 8: 30, 16: 1}, c2.counts())
    kinds = [correlation_type(s) for s in c2.pure_states()]
    report.check("two-system pure forms", (36, 24),
                 (kinds.count("product"), kinds.count("perfectly-correlated")))
    report.check("three-system pure states", 1080, len(c3.pure_states()))
    forms = [correlation_type(s) for s in c3.pure_states()]
    report.check("three-system pure forms", (216, 432, 432),
                 tuple(forms.count(k) for k in ("product", "pair-correlated", "triplet-correlated")))
    generators = [g for _, g in standard_generators(THREE)]
    reached = orbit(canonical_three_system_forms(), generators)
    report.check("orbit of canonical forms matches search", True, reached == set(c3.masks(size=8)))
    report.check("canonical three-system forms valid", [True] * 3,
                 [is_valid(s) for s in canonical_three_system_forms()])
    return report


def _mixed_only(catalog: Catalog, size: int) -> Catalog:
    return Catalog(catalog.shape, {catalog.shape.pure_size: catalog.masks(catalog.shape.pure_size),
                                   size: catalog.masks(size)})


def purification_report(ctx: ProtocolContext) -> ProtocolReport:
    """Mixed states as marginals of pure states on one more system."""
    report = ProtocolReport(name="purification", summary="mixed states recovered as marginals")
    c1, c2, c3 = ctx.catalog(1), ctx.catalog(2), ctx.catalog(3)
    report.check("one-system mixed states without a pure two-system extension", [],
                 [str(s) for s in purification_scan(c1, c2, (1,))])
    report.check("two-system size-8 states without a pure three-system extension", [],
                 [str(s) for s in purification_scan(_mixed_only(c2, 8), c3, (1, 2))])
    full = full_state(TWO)
    covered = any(marginal(s, [1, 2]) == full for s in c3.pure_states())
    report.check("complete ignorance of a pair is a three-system marginal", False, covered)
    return report


def measurement_updates_report(ctx: ProtocolContext) -> ProtocolReport:
    """Joint measurements on (2∨3)·(1∨2): maximal and non-maximal updates."""
    report = ProtocolReport(name="measurement_updates", summary="joint measurements on (2∨3)·(1∨2)")
    prior = from_cells(TWO, [(a, b) for a in (2, 3) for b in (1, 2)])
    branches = epistemic_branches([Prepare(prior), Measure(bell_analogue(), "r")])
    report.check("relation outcome probabilities", [Fraction(1, 4)] * 4, [b.probability for b in branches])
    report.check("relation outcome I leaves the relation state", str(diagonal()),
                 str(next(b.state for b in branches if b.binding("r") == 0)))

    zpar = parity_measurement()
    update = update_max_fidelity_detailed(prior, zpar.outcome_base(0), ctx.catalog(2))
    report.check("parity outcome I under the max-fidelity rule", "(1∨2)·(1∨2)", str(update.state))
    report.check("fidelity with the prior", 0.5, float(update.fidelity_squared) ** 0.5)
    report.check("unique maximum", 0, len(update.tied))
    result = ctx.run([Prepare(prior), Measure(zpar, "p")])
    report.check("Monte Carlo within 3σ", True, result.within_three_sigma)
    return report


def mup_report(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="mups", summary="mutually unbiased partitionings")
    c1, c2 = ctx.catalog(1), ctx.catalog(2)
    maximal1 = enumerate_maximal(ONE, c1)
    report.check("single-system maximal measurements", 3, len(maximal1))
    report.check("all three mutually unbiased", 1, len(find_mup_sets(ONE, 3, c1, measurements=maximal1)))
    z, x, y = (canonical_partition(n) for n in ("z", "x", "y"))
    quintuple = [product(z, z), product(x, x), product(y, y),
                 bell_analogue(from_cycles("(123)(4)")), bell_analogue(from_cycles("(132)(4)"))]
    pairwise = all(are_mutually_unbiased(a, b) for a, b in combinations(quintuple, 2))
    report.check("product and relation quintuple is mutually unbiased", True, pairwise)
    maximal2 = enumerate_maximal(TWO, c2)
    report.artifacts["two_system_maximal_measurements"] = len(maximal2)
    sixes = find_mup_sets(TWO, 6, c2, exhaustive=False, measurements=maximal2)
    report.check("sets of six at two systems", 0, len(sixes))
    return report


def cloning_suite(ctx: ProtocolContext) -> ProtocolReport:
    report = ProtocolReport(name="cloning", summary="cloning of overlapping and disjoint pairs")
    for pair in ((single(3, 4), single(1, 3)), (single(1, 2), single(3, 4)), (single(1, 3), single(1, 3))):
        sub = cloner_search(ctx, pair)
        report.checks.extend(c.model_copy(update={"description": f"{sub.name}: {c.description}"})
                             for c in sub.checks)
    return report


Protocol = Callable[[ProtocolContext], ProtocolReport]

PROTOCOLS: Dict[str, Protocol] = {
    "catalogs": catalogs_report,
    "analogy": analogy_report,
    "transformations": transformations_report,
    "interference": interference_report,
    "noncommutativity": noncommutativity_report,
    "inverter": inverter_search,
    "steering": steering_report,
    "cloning": cloning_suite,
    "broadcast": broadcast_check,
    "dense_coding": dense_coding_run,
    "teleportation": teleportation_run,
    "teleportation_cyclic": lambda ctx: teleportation_run(
        ctx, single(1, 2), [from_cycles(c) for c in ("(1)(2)(3)(4)", "(1234)", "(13)(24)", "(1432)")],
        "teleportation_cyclic",
    ),
    "monogamy": monogamy_check,
    "purification": purification_report,
    "measurement_updates": measurement_updates_report,
    "mups": mup_report,
    "toy_table": toy_correlation_table,
    "quantum_table": quantum_table_report,
}


def run_suite(ctx: ProtocolContext, names: Optional[Sequence[str]] = None) -> List[ProtocolReport]:
    """Run protocols in registry order (or the given order)."""
    names = list(names) if names else list(PROTOCOLS)
    unknown = [n for n in names if n not in PROTOCOLS]
    if unknown:
        raise ValueError(f"unknown protocol(s): {', '.join(unknown)}")
    reports = []
    for name in names:
        logger.info("protocol_started", protocol=name)
        report = PROTOCOLS[name](ctx)
        logger.info("protocol_finished", protocol=name, passed=report.passed)
        reports.append(report)
    return reports
