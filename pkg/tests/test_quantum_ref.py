"""
Qubit analogues of toy states.
"""

import numpy as np
import pytest

from knowbal.core.errors import KnowbalError, UnsupportedShapeError
from knowbal.ontic import CoherentOp, SystemShape, from_cells, full_state
from knowbal.quantum_ref import (
    MaximallyMixed,
    QuantumState,
    analog_name,
    analog_state,
    analogy_audit,
    bell_states,
    bell_table,
    bloch_vector,
    correlation_letter,
    equal_up_to_phase,
    ket,
    ontic_vertex,
    quantum_fidelity,
    superpose,
    tensor,
)


def single(*labels):
    return from_cells(SystemShape(1), labels)


class TestAnalogy:
    """State correspondence and fidelities."""

    def test_names(self):
        assert analog_name(single(1, 2)) == "0"
        assert analog_name(single(2, 3)) == "+i"
        assert analog_name(full_state(SystemShape(1))) == "mixed"
        assert isinstance(analog_state(full_state(SystemShape(1))), MaximallyMixed)

    def test_pair_has_no_single_analogue(self, diagonal):
        with pytest.raises(UnsupportedShapeError):
            analog_name(diagonal)

    def test_bloch_geometry(self):
        assert np.array_equal(bloch_vector(single(1, 3)), [1, 0, 0])
        assert np.array_equal(ontic_vertex(1), [1, -1, 1])
        assert np.array_equal(ontic_vertex(4), [-1, -1, -1])
        assert np.allclose(sum(ontic_vertex(j) for j in (1, 2, 3, 4)), 0)

    def test_fidelities(self):
        assert quantum_fidelity(ket("0"), ket("1")) == pytest.approx(0.0)
        assert quantum_fidelity(ket("0"), ket("+")) == pytest.approx(0.5)
        assert quantum_fidelity(ket("0"), MaximallyMixed()) == pytest.approx(2 ** -0.5)
        assert quantum_fidelity(MaximallyMixed(), MaximallyMixed()) == 1.0

    def test_unit_norm_required(self):
        with pytest.raises(KnowbalError):
            QuantumState(np.array([1, 1], dtype=complex))
        assert QuantumState(np.array([0, 1j], dtype=complex)) == ket("1")

    def test_global_phase_is_ignored(self):
        assert equal_up_to_phase(ket("+i"), type(ket("+i"))(1j * ket("+i").amplitudes))
        assert not equal_up_to_phase(ket("+i"), ket("-i"))

    def test_superposition(self):
        assert superpose(ket("0"), ket("1"), 0.0) == ket("+")
        assert superpose(ket("0"), ket("1"), np.pi / 2) == ket("+i")
        with pytest.raises(ValueError):
            superpose(ket("0"), ket("+"), 0.0)


class TestAudit:
    """Coherent operations against phase superpositions."""

    def test_rows(self):
        rows = analogy_audit()
        assert len(rows) == 12
        assert [i + 1 for i, r in enumerate(rows) if not r.matches] == [7, 8]
        assert rows[0].op is CoherentOp.LOW_LOW
        assert rows[0].toy_result == "+"


class TestBellTable:
    """Correlations of the Bell states."""

    def test_letters(self):
        table = bell_table()
        assert list(table.index) == ["Φ+", "Φ-", "Ψ+", "Ψ-"]
        assert ["".join(r) for r in table[["z", "x", "y"]].values] == ["CCA", "CAC", "ACC", "AAA"]
        assert set(table["parity"]) == {1}

    def test_uncorrelated_state(self):
        assert correlation_letter(tensor(ket("0"), ket("+")), "z") == "-"
        assert correlation_letter(bell_states()["Φ+"], "y") == "A"
