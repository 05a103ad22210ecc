import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyhybrid.clifford import CliffordGate, cnot
from noisyhybrid.oracle import (
    DenseState,
    GateEvent,
    MeasureEvent,
    ReplayDivergence,
    ResetEvent,
    dump_events,
    load_events,
    oracle_apply_gate,
    oracle_entropy,
    oracle_log_negativity,
    oracle_measure,
    oracle_reset,
    oracle_reset_via_ancilla,
    partial_transpose,
    reduced_density_matrix,
    replay,
)
from noisyhybrid.pauli import PauliString

from helpers import random_ops
from noisyhybrid.stabilizer import new_product_state
from helpers import run_ops


def bell():
    return DenseState.from_stabilizers([PauliString.from_label(s) for s in ("+XX", "+ZZ")], 2)


def random_density(rng, n, rank=3):
    d = 2**n
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return DenseState(rho / np.trace(rho), n)


def test_reset_plus_state():
    st_ = DenseState(np.full((2, 2), 0.5, dtype=complex), 1)
    oracle_reset(st_, 0)
    assert np.allclose(st_.rho, [[1, 0], [0, 0]])


def test_measure_bell_forced():
    st_ = bell()
    oracle_measure(st_, 0, outcome=0)
    target = np.zeros((4, 4))
    target[0, 0] = 1
    assert np.allclose(st_.rho, target)


def test_reset_bell_purity():
    st_ = bell()
    oracle_reset(st_, 0)
    assert abs(st_.purity() - 0.5) < 1e-12
    assert np.allclose(st_.rho, np.kron([[1, 0], [0, 0]], np.eye(2) / 2))


def test_textbook_values():
    b = bell()
    assert abs(oracle_entropy(b, [0]) - 1) < 1e-12
    assert abs(oracle_log_negativity(b, [1]) - 1) < 1e-12
    p = DenseState.product_state(3)
    assert oracle_entropy(p, [0, 1]) == 0.0
    assert abs(oracle_log_negativity(p, [2])) < 1e-12


def test_partial_transpose_of_bell_has_negative_eigenvalue():
    lam = np.linalg.eigvalsh(partial_transpose(bell(), [1]))
    assert np.isclose(lam.min(), -0.5)


def test_reduced_density_matrix_orders_sites():
    # |0><0| on site 0, |1><1| on site 1, maximally mixed on site 2
    rho = np.kron(np.kron([[1, 0], [0, 0]], [[0, 0], [0, 1]]), np.eye(2) / 2)
    st_ = DenseState(rho.astype(complex), 3)
    assert np.allclose(reduced_density_matrix(st_, [1]), [[0, 0], [0, 1]])
    assert np.allclose(reduced_density_matrix(st_, [0, 2]), np.kron([[1, 0], [0, 0]], np.eye(2) / 2))


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_channels_preserve_trace(seed, n):
    rng = np.random.default_rng(seed)
    st_ = random_density(rng, n)
    for _ in range(10):
        u = rng.random()
        if u < 0.3:
            oracle_reset(st_, int(rng.integers(n)))
        elif u < 0.6:
            oracle_measure(st_, int(rng.integers(n)), rng=rng)
        elif n > 1:
            i, j = rng.choice(n, 2, replace=False)
            oracle_apply_gate(st_, CliffordGate(int(rng.integers(11520))), int(i), int(j))
        assert abs(np.trace(st_.rho) - 1) < 1e-12
        st_.check()


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_ancilla_swap_reset_equals_kraus(seed, n):
    rng = np.random.default_rng(seed)
    a = random_density(rng, n, rank=2**n)
    b = DenseState(a.rho.copy(), n)
    site = int(rng.integers(n))
    oracle_reset(a, site)
    oracle_reset_via_ancilla(b, site)
    assert np.max(np.abs(a.rho - b.rho)) < 1e-12


def test_gate_on_reversed_sites():
    st_ = DenseState.product_state(2)
    oracle_apply_gate(st_, CliffordGate.from_images(["+ZI", "+XI", "+IX", "+IZ"]), 1, 0)
    # Hadamard lands on site 1 (the gate's first qubit)
    expect = np.kron([[1, 0], [0, 0]], np.full((2, 2), 0.5))
    assert np.allclose(st_.rho, expect)
    with pytest.raises(ValueError):
        oracle_apply_gate(st_, cnot(), 1, 1)


def test_event_log_roundtrip():
    events = [GateEvent(0, 2, CliffordGate(4321)), ResetEvent(1), MeasureEvent(2, 1)]
    text = dump_events(events)
    assert text.count("\n") == 3
    assert '"op": "GATE"' in text and '"images"' in text
    assert load_events(text) == events
    with pytest.raises(ValueError, match="line 1"):
        load_events('{"op": "SPIN"}\n')


def test_impossible_forced_outcome_diverges():
    with pytest.raises(ReplayDivergence):
        replay([MeasureEvent(0, 1)], 2)
    st_ = DenseState.product_state(1)
    with pytest.raises(ReplayDivergence):
        oracle_measure(st_, 0, outcome=1)


def test_corrupted_log_is_caught():
    """Flipping a deterministic recorded outcome makes the replay diverge."""
    t = new_product_state(4)
    events = run_ops(t, [("gate", 11, 0, 1), ("measure", 2, 0)])
    bad = events[:-1] + [MeasureEvent(2, 1 - events[-1].outcome)]
    with pytest.raises(ReplayDivergence, match="event 1"):
        replay(bad, 4)


def test_size_cap():
    with pytest.raises(ValueError):
        DenseState.product_state(9)


@given(st.integers(0, 2**32 - 1))
def test_replay_check_mode(seed):
    rng = np.random.default_rng(seed)
    t = new_product_state(4)
    events = run_ops(t, random_ops(rng, 4, 30))
    replay(events, 4, check=True)
