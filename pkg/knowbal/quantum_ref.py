"""
Quantum reference engine.

Small state-vector calculations used to compare toy-theory results with
their qubit counterparts: the state and operation analogy, fidelities,
coherent superpositions and the Bell-state correlation table.
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from .core.errors import KnowbalError, UnsupportedShapeError
from .ontic import CoherentOp, EpistemicState, SystemShape, coherent_combine, from_cells

TOLERANCE = 1e-12

SQRT_HALF = 1 / np.sqrt(2)

KET = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) * SQRT_HALF,
    "-": np.array([1, -1], dtype=complex) * SQRT_HALF,
    "+i": np.array([1, 1j], dtype=complex) * SQRT_HALF,
    "-i": np.array([1, -1j], dtype=complex) * SQRT_HALF,
}

# Pure single-system states and their qubit analogues
STATE_ANALOGY: Dict[Tuple[int, int], str] = {
    (1, 2): "0",
    (3, 4): "1",
    (1, 3): "+",
    (2, 4): "-",
    (2, 3): "+i",
    (1, 4): "-i",
}

# Relative phase of the second term for each coherent operation
PHASE_ANALOGY: Dict[CoherentOp, float] = {
    CoherentOp.LOW_LOW: 0.0,
    CoherentOp.HIGH_HIGH: np.pi,
    CoherentOp.HIGH_LOW: np.pi / 2,
    CoherentOp.LOW_HIGH: 3 * np.pi / 2,
}

BLOCH: Dict[str, Tuple[int, int, int]] = {
    "0": (0, 0, 1),
    "1": (0, 0, -1),
    "+": (1, 0, 0),
    "-": (-1, 0, 0),
    "+i": (0, 1, 0),
    "-i": (0, -1, 0),
}

# Cells of the +x, +y, +z pure states
AXIS_STATES = ((1, 3), (2, 3), (1, 2))


@dataclass(frozen=True)
class QuantumState:
    """Normalized state vector over n qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        norm = np.linalg.norm(self.amplitudes)
        if not np.isclose(norm, 1.0):
            raise KnowbalError(f"state vector must have unit norm, got {norm:.6g}")

    @property
    def n_qubits(self) -> int:
        return int(np.log2(len(self.amplitudes)))

    def __eq__(self, other) -> bool:
        return isinstance(other, QuantumState) and equal_up_to_phase(self, other)

    def __hash__(self):
        return hash(tuple(np.round(phase_normalized(self), 9)))


@dataclass(frozen=True)
class MaximallyMixed:
    """The completely mixed single-qubit density operator I/2."""

    n_qubits: int = 1


QuantumLike = Union[QuantumState, MaximallyMixed]


def ket(name: str) -> QuantumState:
    return QuantumState(KET[name].copy())


def tensor(*states: QuantumState) -> QuantumState:
    amplitudes = np.array([1], dtype=complex)
    for s in states:
        amplitudes = np.kron(amplitudes, s.amplitudes)
    return QuantumState(amplitudes)


def phase_normalized(s: QuantumState) -> np.ndarray:
    """Amplitudes rotated so the first nonzero amplitude is real and positive."""
    amps = s.amplitudes
    nonzero = np.flatnonzero(np.abs(amps) > TOLERANCE)
    if nonzero.size == 0:
        return amps
    first = amps[nonzero[0]]
    return amps * (abs(first) / first)


def equal_up_to_phase(a: QuantumState, b: QuantumState) -> bool:
    if a.amplitudes.shape != b.amplitudes.shape:
        return False
    return bool(np.allclose(phase_normalized(a), phase_normalized(b), atol=TOLERANCE, rtol=0))


def analog_name(s: EpistemicState) -> str:
    """Name of the qubit analogue of a pure single-system state ('mixed' for 1∨2∨3∨4)."""
    if s.shape.n_systems != 1:
        raise UnsupportedShapeError("the state analogy is defined for single systems")
    labels = tuple(i + 1 for i in s.members)
    if labels == (1, 2, 3, 4):
        return "mixed"
    if labels not in STATE_ANALOGY:
        raise ValueError(f"no qubit analogue for {s}")
    return STATE_ANALOGY[labels]


def analog_state(s: EpistemicState) -> QuantumLike:
    """Qubit analogue of a single-system state."""
    name = analog_name(s)
    if name == "mixed":
        return MaximallyMixed()
    return ket(name)


def bloch_vector(s: EpistemicState) -> np.ndarray:
    """Bloch vector of the analogue of a pure or completely mixed single-system state."""
    name = analog_name(s)
    if name == "mixed":
        return np.zeros(3)
    return np.array(BLOCH[name], dtype=float)


def ontic_vertex(label: int) -> np.ndarray:
    """Sum of the Bloch vectors of the three pure states containing an ontic state."""
    shape = SystemShape(1)
    total = np.zeros(3)
    for pair in STATE_ANALOGY:
        if label in pair:
            total += bloch_vector(from_cells(shape, pair))
    return total


def quantum_fidelity(a: QuantumLike, b: QuantumLike) -> float:
    """
    Tr sqrt(sqrt(rho) sigma sqrt(rho)) for the supported state kinds.

    Pure/pure gives |<a|b>|^2, pure/mixed 1/sqrt(2) and mixed/mixed 1.
    """
    if isinstance(a, MaximallyMixed) and isinstance(b, MaximallyMixed):
        return 1.0
    if isinstance(a, MaximallyMixed) or isinstance(b, MaximallyMixed):
        return float(SQRT_HALF)
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def superpose(a: QuantumState, b: QuantumState, relative_phase: float) -> QuantumState:
    """Normalized (a + e^{i phase} b)/sqrt(2) for orthogonal a and b."""
    if abs(np.vdot(a.amplitudes, b.amplitudes)) > TOLERANCE:
        raise ValueError("superposed states must be orthogonal")
    return QuantumState((a.amplitudes + np.exp(1j * relative_phase) * b.amplitudes) * SQRT_HALF)


@dataclass(frozen=True)
class AuditRow:
    """One coherent-operation relation compared against its qubit analogue."""

    left: str
    op: CoherentOp
    right: str
    toy_result: str
    quantum_result: str
    matches: bool


# Operand pairs whose four coherent combinations are audited, in order
AUDIT_OPERANDS = (((1, 2), (3, 4)), ((1, 3), (2, 4)), ((2, 3), (1, 4)))


def _closest_analog(q: QuantumState) -> str:
    for name in KET:
        if equal_up_to_phase(q, ket(name)):
            return name
    return "?"


def analogy_audit() -> List[AuditRow]:
    """The twelve coherent-operation relations compared with phase superpositions."""
    shape = SystemShape(1)
    rows = []
    for left_cells, right_cells in AUDIT_OPERANDS:
        left = from_cells(shape, left_cells)
        right = from_cells(shape, right_cells)
        for op in CoherentOp:
            toy = coherent_combine(left, right, op)
            quantum = superpose(analog_state(left), analog_state(right), PHASE_ANALOGY[op])
            toy_name = analog_name(toy)
            rows.append(
                AuditRow(
                    left=str(left),
                    op=op,
                    right=str(right),
                    toy_result=toy_name,
                    quantum_result=_closest_analog(quantum),
                    matches=equal_up_to_phase(quantum, ket(toy_name)),
                )
            )
    return rows


def bell_states() -> Dict[str, QuantumState]:
    """Phi+, Phi-, Psi+, Psi- over two qubits."""
    zero, one = ket("0"), ket("1")
    s00, s11 = tensor(zero, zero).amplitudes, tensor(one, one).amplitudes
    s01, s10 = tensor(zero, one).amplitudes, tensor(one, zero).amplitudes
    return {
        "Φ+": QuantumState((s00 + s11) * SQRT_HALF),
        "Φ-": QuantumState((s00 - s11) * SQRT_HALF),
        "Ψ+": QuantumState((s01 + s10) * SQRT_HALF),
        "Ψ-": QuantumState((s01 - s10) * SQRT_HALF),
    }


# Local bases in the column order of the correlation tables
BASES = {"z": ("0", "1"), "x": ("+", "-"), "y": ("+i", "-i")}


def correlation_letter(psi: QuantumState, basis: str) -> str:
    """'C' when equal-index local outcomes are certain, 'A' when opposite ones are."""
    first, second = BASES[basis]
    same = 0.0
    for name in (first, second):
        proj = tensor(ket(name), ket(name)).amplitudes
        same += abs(np.vdot(proj, psi.amplitudes)) ** 2
    if abs(same - 1.0) < 1e-9:
        return "C"
    if abs(same) < 1e-9:
        return "A"
    return "-"


def bell_table() -> pd.DataFrame:
    """Correlation letters of the Bell states in the z, x and y bases, plus anticorrelation parity."""
    rows = []
    for name, psi in bell_states().items():
        letters = [correlation_letter(psi, b) for b in ("z", "x", "y")]
        rows.append({"state": name, "z": letters[0], "x": letters[1], "y": letters[2],
                     "parity": letters.count("A") % 2})
    return pd.DataFrame(rows).set_index("state")

