"""Exact density-matrix reference simulator for small chains (L <= 8).

Replays an event log produced by the stabilizer engine and recomputes every
observable from the matrix itself: entropies from eigenvalues of reduced
states, negativity from the trace norm of the partial transpose.  Site 0 is
the most significant tensor factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .clifford import CliffordGate
from .pauli import PauliString

MAX_QUBITS = 8
FORCED_OUTCOME_FLOOR = 1e-12

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_LOCAL = {(0, 0): _I2, (1, 0): _X, (1, 1): _Y, (0, 1): _Z}


class ReplayDivergence(RuntimeError):
    """A forced measurement outcome has (numerically) zero probability."""


def pauli_matrix(p: PauliString) -> np.ndarray:
    m = np.array([[1.0 + 0j]])
    for a, b in zip(p.x, p.z):
        m = np.kron(m, _LOCAL[(int(a), int(b))])
    return -m if p.sign else m


def gate_unitary(gate: CliffordGate) -> np.ndarray:
    """A 4x4 unitary ``U`` with ``U P U^dag`` equal to the gate's image of each generator.

    ``U|00>`` is the joint +1 eigenvector of the images of ``Z0, Z1``; the other
    columns follow from ``U|ab> = img(X0)^a img(X1)^b U|00>``.
    """
    ix0, iz0, ix1, iz1 = (pauli_matrix(p) for p in gate.images)
    proj = (np.eye(4) + iz0) @ (np.eye(4) + iz1) / 4
    vals, vecs = np.linalg.eigh(proj)
    v0 = vecs[:, np.argmax(vals)]
    cols = [v0, ix1 @ v0, ix0 @ v0, ix0 @ ix1 @ v0]
    return np.column_stack(cols)


@dataclass
class DenseState:
    rho: np.ndarray
    n_qubits: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"dense oracle supports 1..{MAX_QUBITS} qubits")

    @classmethod
    def product_state(cls, n: int) -> "DenseState":
        dim = 2**n
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return cls(rho, n)

    @classmethod
    def from_stabilizers(cls, generators: Sequence[PauliString], n: int) -> "DenseState":
        """``rho = 2**-n prod_i (1 + g_i)``."""
        dim = 2**n
        rho = np.eye(dim, dtype=complex)
        for g in generators:
            rho = rho @ (np.eye(dim) + pauli_matrix(g))
        return cls(rho / dim, n)

    def tensor(self) -> np.ndarray:
        return self.rho.reshape((2,) * (2 * self.n_qubits))

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def check(self, tol: float = 1e-12) -> None:
        if not np.allclose(self.rho, self.rho.conj().T, atol=tol):
            raise AssertionError("density matrix is not Hermitian")
        tr = np.trace(self.rho)
        if abs(tr - 1) > tol:
            raise AssertionError(f"trace {tr} != 1")
        if np.linalg.eigvalsh(self.rho).min() < -1e-10:
            raise AssertionError("density matrix is not positive semidefinite")


def _apply_local(state: DenseState, op: np.ndarray, sites: Sequence[int]) -> None:
    """rho <- O rho O^dag for an operator on ``sites`` (first site most significant)."""
    n = state.n_qubits
    m = len(sites)
    t = state.tensor()
    o = op.reshape((2,) * (2 * m))
    ket_axes = list(sites)
    t = np.tensordot(o, t, axes=(list(range(m, 2 * m)), ket_axes))
    t = np.moveaxis(t, list(range(m)), ket_axes)
    bra_axes = [n + s for s in sites]
    t = np.tensordot(t, o.conj(), axes=(bra_axes, list(range(m, 2 * m))))
    t = np.moveaxis(t, list(range(2 * n - m, 2 * n)), bra_axes)
    state.rho = t.reshape(state.rho.shape)


def _check_site(state: DenseState, site: int) -> None:
    if not 0 <= site < state.n_qubits:
        raise IndexError(f"site {site} out of range")


def oracle_apply_gate(state: DenseState, gate: CliffordGate, i: int, j: int) -> None:
    _check_site(state, i)
    _check_site(state, j)
    if i == j:
        raise ValueError("distinct sites required")
    _apply_local(state, gate_unitary(gate), [i, j])


def outcome_probability(state: DenseState, site: int, outcome: int) -> float:
    t = state.tensor()
    n = state.n_qubits
    diag = np.einsum(t, list(range(n)) + list(range(n)), list(range(n)))
    return float(np.real(np.take(diag, outcome, axis=site).sum()))


def oracle_measure(state: DenseState, site: int, outcome: int | None = None,
                   rng: np.random.Generator | None = None) -> int:
    """Projective Z measurement; ``outcome`` forces the result (replay mode)."""
    _check_site(state, site)
    p1 = outcome_probability(state, site, 1)
    if outcome is None:
        if rng is None:
            raise ValueError("need an rng to sample an outcome")
        outcome = int(rng.random() < p1)
    prob = p1 if outcome else 1.0 - p1
    if prob < FORCED_OUTCOME_FLOOR:
        raise ReplayDivergence(f"outcome {outcome} at site {site} has probability {prob:.3g}")
    proj = np.zeros((2, 2), dtype=complex)
    proj[outcome, outcome] = 1.0
    _apply_local(state, proj, [site])
    state.rho /= prob
    return outcome


def oracle_reset(state: DenseState, site: int) -> None:
    """Two-Kraus reset: ``sum_a |0><a| rho |a><0|``."""
    _check_site(state, site)
    k0 = np.array([[1, 0], [0, 0]], dtype=complex)
    k1 = np.array([[0, 1], [0, 0]], dtype=complex)
    a = DenseState(state.rho.copy(), state.n_qubits)
    b = DenseState(state.rho.copy(), state.n_qubits)
    _apply_local(a, k0, [site])
    _apply_local(b, k1, [site])
    state.rho = a.rho + b.rho


def oracle_reset_via_ancilla(state: DenseState, site: int) -> None:
    """Reset by swapping with a fresh ``|0>`` ancilla and tracing the ancilla out."""
    _check_site(state, site)
    n = state.n_qubits
    anc = np.zeros((2, 2), dtype=complex)
    anc[0, 0] = 1.0
    big = np.kron(state.rho, anc)
    swap = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            swap[2 * b + a, 2 * a + b] = 1.0
    # work on n + 1 qubits without the size cap
    ext = DenseState.__new__(DenseState)
    ext.rho, ext.n_qubits = big, n + 1
    _apply_local(ext, swap, [site, n])
    t = ext.rho.reshape((2,) * (2 * (n + 1)))
    t = np.trace(t, axis1=n, axis2=2 * n + 1)
    state.rho = t.reshape(2**n, 2**n)


def reduced_density_matrix(state: DenseState, region: Iterable[int]) -> np.ndarray:
    n = state.n_qubits
    keep = sorted(set(int(s) for s in region))
    if not keep:
        return np.array([[np.trace(state.rho)]])
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    ket = letters[:n]
    bra = letters[n:]
    inp = [ket[i] if i in keep else bra[i].upper() for i in range(n)]
    inp += [bra[i] if i in keep else bra[i].upper() for i in range(n)]
    out = [ket[i] for i in keep] + [bra[i] for i in keep]
    red = np.einsum("".join(inp) + "->" + "".join(out), state.tensor())
    d = 2 ** len(keep)
    return red.reshape(d, d)


def _entropy_bits(rho: np.ndarray) -> float:
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > 1e-14]
    return float(-(lam * np.log2(lam)).sum())


def oracle_entropy(state: DenseState, region: Iterable[int]) -> float:
    """Von Neumann entropy (bits) of the reduced state on ``region``."""
    region = list(region)
    if not region:
        return 0.0
    return _entropy_bits(reduced_density_matrix(state, region))


def partial_transpose(state: DenseState, region_b: Iterable[int]) -> np.ndarray:
    n = state.n_qubits
    axes = list(range(2 * n))
    for s in region_b:
        axes[s], axes[n + s] = axes[n + s], axes[s]
    return np.transpose(state.tensor(), axes).reshape(state.rho.shape)


def oracle_log_negativity(state: DenseState, region_b: Iterable[int]) -> float:
    """``log2 || rho^{T_B} ||_1``."""
    lam = np.linalg.eigvalsh(partial_transpose(state, region_b))
    return float(np.log2(np.abs(lam).sum()))


def oracle_mutual_information(state: DenseState, region_a, region_b) -> float:
    a, b = list(region_a), list(region_b)
    return oracle_entropy(state, a) + oracle_entropy(state, b) - oracle_entropy(state, a + b)


# -- event log --


@dataclass(frozen=True)
class GateEvent:
    i: int
    j: int
    gate: CliffordGate


@dataclass(frozen=True)
class MeasureEvent:
    site: int
    outcome: int


@dataclass(frozen=True)
class ResetEvent:
    site: int


Event = Union[GateEvent, MeasureEvent, ResetEvent]


def event_to_dict(ev: Event) -> dict:
    if isinstance(ev, GateEvent):
        return {"op": "GATE", "i": ev.i, "j": ev.j, "images": [p.label for p in ev.gate.images]}
    if isinstance(ev, MeasureEvent):
        return {"op": "MEASURE", "site": ev.site, "outcome": ev.outcome}
    if isinstance(ev, ResetEvent):
        return {"op": "RESET", "site": ev.site}
    raise TypeError(f"not an event: {ev!r}")


def event_from_dict(d: dict) -> Event:
    op = d.get("op")
    if op == "GATE":
        return GateEvent(int(d["i"]), int(d["j"]), CliffordGate.from_images(d["images"]))
    if op == "MEASURE":
        return MeasureEvent(int(d["site"]), int(d["outcome"]))
    if op == "RESET":
        return ResetEvent(int(d["site"]))
    raise ValueError(f"unknown event op {op!r}")


def dump_events(events: Iterable[Event]) -> str:
    """One JSON object per line."""
    return "".join(json.dumps(event_to_dict(ev), sort_keys=True) + "\n" for ev in events)


def load_events(text: str) -> list[Event]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(event_from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"event log line {lineno}: {exc}") from exc
    return out


def replay(events: Iterable[Event], n_qubits: int, state: DenseState | None = None,
           check: bool = False) -> DenseState:
    """Run an event log on ``|0...0>`` (or on ``state``) and return the final state."""
    if state is None:
        state = DenseState.product_state(n_qubits)
    for step, ev in enumerate(events):
        if isinstance(ev, GateEvent):
            oracle_apply_gate(state, ev.gate, ev.i, ev.j)
        elif isinstance(ev, MeasureEvent):
            try:
                oracle_measure(state, ev.site, outcome=ev.outcome)
            except ReplayDivergence as exc:
                raise ReplayDivergence(f"event {step}: {exc}") from None
        elif isinstance(ev, ResetEvent):
            oracle_reset(state, ev.site)
        else:
            raise TypeError(f"not an event: {ev!r}")
        if check:
            state.check()
    return state
