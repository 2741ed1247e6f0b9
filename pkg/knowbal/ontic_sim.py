"""
Ontic-level simulation.

A program is a list of steps (prepare, transform, measure). The exact
engine expands every measurement into outcome branches with Fraction
weights; the Monte Carlo engine samples a hidden ontic state per trial,
pushes it through the steps with random disturbances and tracks the
epistemic state alongside it.

Each trial draws from its own Philox stream keyed by (seed, trial index),
so results do not depend on scheduling or on how trials are chunked.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from .core.errors import KnowbalError, SimulationInvariantError
from .core.logging import get_logger
from .measurements import (
    UPDATE_RULES,
    Measurement,
    decompose_outcome,
    epistemic_update,
    outcome_probabilities,
    roman,
)
from .ontic import EpistemicState, SystemShape
from .transforms import Permutation
from .validity import Catalog, local_swap_table

logger = get_logger(__name__)


@dataclass(frozen=True)
class Prepare:
    state: EpistemicState


@dataclass(frozen=True)
class Transform:
    permutation: Permutation
    when: Optional[Tuple[str, int]] = None
    label: str = ""


@dataclass(frozen=True)
class Measure:
    measurement: Measurement
    binding: str


Step = Union[Prepare, Transform, Measure]


@dataclass(frozen=True)
class RunConfig:
    """Monte Carlo parameters."""

    seed: int = 0
    n_trials: int = 10000
    update_rule: str = "max-fidelity"
    keep_records: bool = False

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.n_trials < 1:
            raise ValueError("n_trials must be positive")
        if self.update_rule not in UPDATE_RULES:
            raise ValueError(f"update_rule must be one of {UPDATE_RULES}")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent counter-based stream for one trial."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def validate_program(steps: Sequence[Step]) -> SystemShape:
    """Check program structure; returns the host shape."""
    if not steps or not isinstance(steps[0], Prepare):
        raise KnowbalError("a program must start with a prepare step")
    shape = steps[0].state.shape
    bindings = set()
    for step in steps[1:]:
        if isinstance(step, Prepare):
            raise KnowbalError("prepare may only appear once, as the first step")
        if isinstance(step, Transform):
            if step.permutation.shape != shape:
                raise KnowbalError("transform shape differs from the prepared state")
            if step.when is not None and step.when[0] not in bindings:
                raise KnowbalError(f"guard refers to unbound outcome {step.when[0]!r}")
        elif isinstance(step, Measure):
            if step.measurement.host != shape:
                raise KnowbalError("measurement host differs from the prepared state")
            if step.binding in bindings:
                raise KnowbalError(f"outcome binding {step.binding!r} used twice")
            bindings.add(step.binding)
    return shape


def _guard_holds(step: Transform, bindings: Dict[str, int]) -> bool:
    return step.when is None or bindings.get(step.when[0]) == step.when[1]


# Exact branch expansion


@dataclass(frozen=True)
class Branch:
    """One outcome history with its probability and tracked state."""

    probability: Fraction
    state: EpistemicState
    bindings: Tuple[Tuple[str, int], ...] = ()

    def binding(self, name: str) -> Optional[int]:
        return dict(self.bindings).get(name)


def epistemic_step(branch: Branch, step: Step, rule: str = "max-fidelity",
                   catalog: Optional[Catalog] = None) -> List[Branch]:
    """Advance one branch by one step."""
    if isinstance(step, Prepare):
        return [Branch(branch.probability, step.state, branch.bindings)]
    if isinstance(step, Transform):
        if not _guard_holds(step, dict(branch.bindings)):
            return [branch]
        return [Branch(branch.probability, step.permutation.apply(branch.state), branch.bindings)]
    result = []
    for k, p in enumerate(outcome_probabilities(branch.state, step.measurement)):
        if p == 0:
            continue
        updated = epistemic_update(branch.state, step.measurement, k, rule, catalog)
        result.append(Branch(branch.probability * p, updated, branch.bindings + ((step.binding, k),)))
    return result


def epistemic_branches(steps: Sequence[Step], rule: str = "max-fidelity",
                       catalog: Optional[Catalog] = None) -> List[Branch]:
    """Every outcome history of a program, with exact probabilities."""
    validate_program(steps)
    branches = [Branch(Fraction(1), steps[0].state)]
    for step in steps[1:]:
        branches = [b for branch in branches for b in epistemic_step(branch, step, rule, catalog)]
    return branches


def expected_distribution(branches: Sequence[Branch]) -> Dict[str, Dict[int, Fraction]]:
    """Marginal outcome probabilities per binding."""
    dist: Dict[str, Dict[int, Fraction]] = {}
    for branch in branches:
        for name, k in branch.bindings:
            dist.setdefault(name, {})
            dist[name][k] = dist[name].get(k, Fraction(0)) + branch.probability
    return dist


# Monte Carlo


def sample_ontic(s: EpistemicState, rng: np.random.Generator) -> int:
    """Uniform draw from the members of s."""
    members = s.members
    return members[int(rng.integers(len(members)))]


def _set_targets(shape: SystemShape, index: int, targets: Sequence[int], cell: Sequence[int]) -> int:
    labels = list(shape.decode(index))
    for p, label in zip(targets, cell):
        labels[p - 1] = label
    return shape.encode(labels)


def disturb(index: int, m: Measurement, outcome: int, rng: np.random.Generator,
            updated: Optional[EpistemicState] = None, rule: str = "max-fidelity") -> int:
    """
    Random change of the ontic state caused by measuring outcome `outcome`.

    Single-system pure outcomes swap the two labels of the outcome with
    probability 1/2. Maximal joint outcomes resample the measured systems
    uniformly inside the outcome. Non-maximal joint outcomes resample the
    measured systems from the updated epistemic state under the
    max-fidelity rule, or inside the outcome otherwise. Unmeasured systems
    keep their labels.
    """
    if m.components:
        for component, digit in zip(m.components, decompose_outcome(m, outcome)):
            index = disturb(index, component, digit, rng)
        return index

    o = m.outcomes[outcome]
    if m.is_local:
        if o.size == 2 and rng.integers(2):
            a, b = (i + 1 for i in o.members)
            index = local_swap_table(m.host, m.targets[0], a, b)[index]
        return index

    if m.is_maximal or rule == "outcome-base":
        cells = o.cells()
        return _set_targets(m.host, index, m.targets, cells[int(rng.integers(len(cells)))])

    if updated is None:
        raise KnowbalError("non-maximal joint disturbance needs the updated epistemic state")
    return _resample_targets(index, m, updated, rng)


def _resample_targets(index: int, m: Measurement, updated: EpistemicState, rng: np.random.Generator) -> int:
    """Uniform draw from members of `updated` that keep every untouched system's label."""
    shape = m.host
    untouched = [p for p in range(1, shape.n_systems + 1) if p not in m.targets]
    current = shape.decode(index)
    candidates = [
        x for x in updated.members
        if all(shape.decode(x)[p - 1] == current[p - 1] for p in untouched)
    ]
    if not candidates:
        raise SimulationInvariantError(
            f"updated state {updated} has no ontic state agreeing with {current} off systems {m.targets}"
        )
    return candidates[int(rng.integers(len(candidates)))]


@dataclass(frozen=True)
class StepRecord:
    step: int
    kind: str
    binding: Optional[str]
    outcome: Optional[int]
    ontic: int
    state_mask: int


@dataclass
class TrialRecord:
    trial: int
    initial_ontic: int
    steps: List[StepRecord] = field(default_factory=list)
    final_state_mask: int = 0

    def outcome(self, binding: str) -> Optional[int]:
        for r in self.steps:
            if r.binding == binding:
                return r.outcome
        return None


def run_trial(steps: Sequence[Step], trial: int, cfg: RunConfig,
              catalog: Optional[Catalog] = None) -> TrialRecord:
    """Simulate one trial of a validated program."""
    rng = trial_rng(cfg.seed, trial)
    state = steps[0].state
    ontic = sample_ontic(state, rng)
    record = TrialRecord(trial, ontic)
    bindings: Dict[str, int] = {}

    for i, step in enumerate(steps[1:], start=1):
        if isinstance(step, Transform):
            if _guard_holds(step, bindings):
                ontic = step.permutation.apply_index(ontic)
                state = step.permutation.apply(state)
            record.steps.append(StepRecord(i, "transform", None, None, ontic, state.mask))
        else:
            m = step.measurement
            k = m.outcome_of(ontic)
            bindings[step.binding] = k
            state = epistemic_update(state, m, k, cfg.update_rule, catalog)
            ontic = disturb(ontic, m, k, rng, state, cfg.update_rule)
            record.steps.append(StepRecord(i, "measure", step.binding, k, ontic, state.mask))
        if not state.mask >> ontic & 1:
            raise SimulationInvariantError(
                f"trial {trial}, step {i}: ontic state {state.shape.decode(ontic)} left {state}"
            )
    record.final_state_mask = state.mask
    return record


@dataclass
class SimulationResult:
    """Aggregated Monte Carlo output."""

    config: RunConfig
    frequencies: pd.DataFrame
    chi_square: Dict[str, Tuple[float, float]]
    within_three_sigma: bool
    records: List[TrialRecord] = field(default_factory=list)
    final_states: Dict[int, int] = field(default_factory=dict)

    def to_csv(self) -> str:
        return self.frequencies.to_csv(index=False)


def _chi_square(observed: Sequence[int], expected: Sequence[Fraction], n: int) -> Tuple[float, float]:
    positive = [(o, float(p) * n) for o, p in zip(observed, expected) if p > 0]
    if any(o for o, p in zip(observed, expected) if p == 0):
        return float("inf"), 0.0
    if len(positive) < 2:
        return 0.0, 1.0
    statistic = sum((o - e) ** 2 / e for o, e in positive)
    return float(statistic), float(stats.chi2.sf(statistic, len(positive) - 1))


def run_trials(steps: Sequence[Step], cfg: RunConfig, catalog: Optional[Catalog] = None) -> SimulationResult:
    """
    Run a program for cfg.n_trials trials.

    Args:
        steps: Program steps (prepare first)
        cfg: Seed, trial count, update rule and record retention
        catalog: Host catalog (needed for non-maximal joint measurements)

    Returns:
        SimulationResult with outcome frequencies against exact expectations
    """
    validate_program(steps)
    logger.info("simulation_started", seed=cfg.seed, trials=cfg.n_trials)
    expected = expected_distribution(epistemic_branches(steps, cfg.update_rule, catalog))
    measures = [s for s in steps if isinstance(s, Measure)]
    counts = {s.binding: [0] * len(s.measurement.outcomes) for s in measures}
    records: List[TrialRecord] = []
    final_states: Dict[int, int] = {}

    for trial in range(cfg.n_trials):
        record = run_trial(steps, trial, cfg, catalog)
        for r in record.steps:
            if r.binding is not None:
                counts[r.binding][r.outcome] += 1
        final_states[record.final_state_mask] = final_states.get(record.final_state_mask, 0) + 1
        if cfg.keep_records:
            records.append(record)

    rows = []
    chi: Dict[str, Tuple[float, float]] = {}
    within = True
    n = cfg.n_trials
    for s in measures:
        probs = [expected.get(s.binding, {}).get(k, Fraction(0)) for k in range(len(s.measurement.outcomes))]
        chi[s.binding] = _chi_square(counts[s.binding], probs, n)
        for k, (count, p) in enumerate(zip(counts[s.binding], probs)):
            freq = count / n
            sigma = (float(p) * (1 - float(p)) / n) ** 0.5
            ok = count == 0 if p == 0 else (count == n if p == 1 else abs(freq - float(p)) <= 3 * sigma)
            within = within and ok
            rows.append({
                "binding": s.binding,
                "outcome": k,
                "label": roman(k),
                "count": count,
                "frequency": freq,
                "expected": float(p),
                "expected_exact": str(p),
            })
    frame = pd.DataFrame(rows, columns=["binding", "outcome", "label", "count", "frequency", "expected", "expected_exact"])
    logger.info("simulation_finished", seed=cfg.seed, trials=n, within_three_sigma=within)
    return SimulationResult(cfg, frame, chi, within, records, final_states)
