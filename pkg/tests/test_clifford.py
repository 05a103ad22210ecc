import itertools

import numpy as np
import pytest
from scipy import stats

from noisyhybrid.clifford import (
    N_CLIFFORD,
    N_SYMPLECTIC,
    CliffordGate,
    cnot,
    gate_tables,
    hadamard_first,
    is_symplectic,
    sample_gate_indices,
    sample_two_qubit_clifford,
    swap_gate,
    symplectic_from_index,
    symplectic_group_order,
)
from noisyhybrid.oracle import gate_unitary
from noisyhybrid.pauli import PauliString

from conftest import dense_pauli

OMEGA = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])


def brute_force_symplectic():
    """All 4x4 binary matrices M with M Omega M^T = Omega, by exhaustion."""
    found = set()
    for bits in itertools.product((0, 1), repeat=16):
        m = np.array(bits).reshape(4, 4)
        if np.array_equal((m @ OMEGA @ m.T) % 2, OMEGA):
            found.add(bits)
    return found


@pytest.fixture(scope="module")
def reference_set():
    return brute_force_symplectic()


def test_group_orders():
    assert symplectic_group_order(1) == 6
    assert symplectic_group_order(2) == N_SYMPLECTIC == 720
    assert N_CLIFFORD == 11520


def test_index_map_is_bijection_onto_reference(reference_set):
    assert len(reference_set) == 720
    mine = {tuple(symplectic_from_index(i, 2).ravel()) for i in range(720)}
    assert mine == reference_set
    gates = {tuple(CliffordGate(16 * i).symplectic_matrix.ravel()) for i in range(720)}
    assert gates == reference_set


def test_every_gate_is_valid_and_distinct():
    seen = set()
    for idx in range(0, N_CLIFFORD, 7):
        g = CliffordGate(idx)
        assert g.is_valid()
        assert is_symplectic(g.symplectic_matrix)
        seen.add(tuple(p.label for p in g.images))
    assert len(seen) == len(range(0, N_CLIFFORD, 7))


def test_images_square_to_identity():
    for idx in range(0, N_CLIFFORD, 97):
        for p in CliffordGate(idx).images:
            m = dense_pauli(p.label)
            assert np.allclose(m @ m, np.eye(4))


def test_textbook_gates():
    h = hadamard_first()
    assert h.conjugate(PauliString.from_label("ZI")).label == "+XI"
    c = cnot()
    assert c.conjugate(PauliString.from_label("XI")).label == "+XX"
    assert c.conjugate(PauliString.from_label("IZ")).label == "+ZZ"
    assert c.conjugate(PauliString.from_label("YI")).label == "+YX"
    s = swap_gate()
    assert s.conjugate(PauliString.from_label("-XZ")).label == "-ZX"


def test_conjugation_table_agrees_with_unitary():
    """Every table entry equals U P U^dag for the unitary built from the images."""
    rng = np.random.default_rng(3)
    labels = ["".join(t) for t in itertools.product("IXYZ", repeat=2)]
    for idx in rng.choice(N_CLIFFORD, 60, replace=False):
        g = CliffordGate(int(idx))
        u = gate_unitary(g)
        assert np.allclose(u.conj().T @ u, np.eye(4))
        for lab in labels:
            img = g.conjugate(PauliString.from_label(lab))
            assert np.allclose(u @ dense_pauli("+" + lab) @ u.conj().T, dense_pauli(img.label))


def test_inverse_roundtrip():
    rng = np.random.default_rng(4)
    for idx in rng.choice(N_CLIFFORD, 200, replace=False):
        g = CliffordGate(int(idx))
        gi = g.inverse()
        for lab in ("+XI", "+ZI", "-IY", "+XZ"):
            p = PauliString.from_label(lab)
            assert gi.conjugate(g.conjugate(p)) == p


def test_from_images_roundtrip_and_rejection():
    g = CliffordGate(5000)
    assert CliffordGate.from_images(g.images) == g
    with pytest.raises(ValueError):
        CliffordGate.from_images(["+XI", "+XI", "+IX", "+IZ"])
    with pytest.raises(ValueError):
        CliffordGate(N_CLIFFORD)


def test_tables_are_read_only():
    out, sgn = gate_tables()
    assert out.shape == sgn.shape == (N_CLIFFORD, 16)
    with pytest.raises(ValueError):
        out[0, 0] = 1
    # identity maps to identity with no sign
    assert np.all(out[:, 0] == 0) and np.all(sgn[:, 0] == 0)


def test_sampler_uniform_over_symplectic_classes(reference_set):
    rng = np.random.default_rng(2024)
    n = N_CLIFFORD * 20
    idx = sample_gate_indices(rng, n)
    ref = sorted(reference_set)
    pos = {m: i for i, m in enumerate(ref)}
    # class of each sample, via its symplectic matrix against the exhaustive reference list
    class_of_symplectic = np.array([pos[tuple(CliffordGate(16 * s).symplectic_matrix.ravel())] for s in range(720)])
    counts = np.bincount(class_of_symplectic[idx // 16], minlength=720)
    assert np.all(counts > 0)
    assert stats.chisquare(counts).pvalue > 1e-3
    sign_counts = np.bincount(idx % 16, minlength=16)
    assert stats.chisquare(sign_counts).pvalue > 1e-3


def test_sampler_deterministic():
    a = sample_two_qubit_clifford(np.random.default_rng(9))
    b = sample_two_qubit_clifford(np.random.default_rng(9))
    assert a == b and a.is_valid()
