"""Mixed stabilizer states on a qubit chain.

A state with generators ``g_1..g_k`` is ``rho = 2**-L * sum_{g in <G>} g``; its
purity is ``2**(k - L)``.  Next to every generator the tableau keeps a
destabilizer, which turns measurement membership tests into commutation
checks instead of Gaussian elimination.
"""

from __future__ import annotations

import os
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .clifford import CliffordGate, gate_tables
from .gf2 import pack_rows, rank_gf2, unpack_rows
from .pauli import PauliString, symplectic_product

_debug = os.environ.get("NOISYHYBRID_DEBUG", "") not in ("", "0")


def set_debug(flag: bool) -> None:
    """Toggle validation of tableau invariants after every channel."""
    global _debug
    _debug = bool(flag)


def debug_enabled() -> bool:
    return _debug


class TableauInvariantError(AssertionError):
    pass


class Tableau:
    """Bit-packed generating set of a stabilizer group on ``n_qubits`` sites."""

    def __init__(self, n_qubits: int):
        if n_qubits < 1:
            raise ValueError("a tableau needs at least one qubit")
        self.n_qubits = int(n_qubits)
        nw = -(-self.n_qubits // 64)
        shape = (self.n_qubits, nw)
        self.sx = np.zeros(shape, dtype=np.uint64)
        self.sz = np.zeros(shape, dtype=np.uint64)
        self.ss = np.zeros(self.n_qubits, dtype=np.uint8)
        self.dx = np.zeros(shape, dtype=np.uint64)
        self.dz = np.zeros(shape, dtype=np.uint64)
        self.k = 0

    # -- constructors --

    @classmethod
    def product_state(cls, n_qubits: int) -> "Tableau":
        """``|0...0>``: generator ``i`` is ``+Z_i``."""
        t = cls(n_qubits)
        for i in range(t.n_qubits):
            K.set_bit(t.sz[i], i, 1)
            K.set_bit(t.dx[i], i, 1)
        t.k = t.n_qubits
        return t

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "Tableau":
        return cls(n_qubits)

    @classmethod
    def from_generators(cls, generators: Iterable[PauliString | str]) -> "Tableau":
        """Tableau for independent, mutually commuting generators."""
        gens = [PauliString.from_label(g) if isinstance(g, str) else g for g in generators]
        if not gens:
            raise ValueError("use maximally_mixed() for an empty generating set")
        t = cls(gens[0].n_qubits)
        for g in gens:
            if g.n_qubits != t.n_qubits:
                raise ValueError("generators act on different numbers of qubits")
            qx, qz = _pack_pauli(g, t.sx.shape[1])
            for i in range(t.k):
                if K.anticommutes(t.sx[i], t.sz[i], qx, qz):
                    raise ValueError(f"{g.label} does not commute with the other generators")
            if K.group_sign(t.sx, t.sz, t.ss, t.dx, t.dz, t.k, qx, qz) >= 0:
                raise ValueError(f"{g.label} is not independent of the other generators")
            t.k = K.append_stabilizer(t.sx, t.sz, t.ss, t.dx, t.dz, t.k, qx, qz, g.sign)
        t._check()
        return t

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n_qubits = self.n_qubits
        t.sx, t.sz, t.ss = self.sx.copy(), self.sz.copy(), self.ss.copy()
        t.dx, t.dz = self.dx.copy(), self.dz.copy()
        t.k = self.k
        return t

    # -- views --

    @property
    def n_generators(self) -> int:
        return self.k

    def purity_exponent(self) -> int:
        """``log2 Tr(rho^2) = |G| - L``."""
        return self.k - self.n_qubits

    def stabilizer_bits(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unpacked ``(x, z, sign)`` of the generators; ``x`` and ``z`` are (k, L) bool."""
        x = unpack_rows(self.sx[: self.k], self.n_qubits)
        z = unpack_rows(self.sz[: self.k], self.n_qubits)
        return x, z, self.ss[: self.k].copy()

    @property
    def generators(self) -> list[PauliString]:
        x, z, s = self.stabilizer_bits()
        return [PauliString(x[i], z[i], int(s[i])) for i in range(self.k)]

    @property
    def destabilizers(self) -> list[PauliString]:
        x = unpack_rows(self.dx[: self.k], self.n_qubits)
        z = unpack_rows(self.dz[: self.k], self.n_qubits)
        return [PauliString(x[i], z[i], 0) for i in range(self.k)]

    def group_sign(self, p: PauliString) -> int | None:
        """0 if ``+p`` is in the group, 1 if ``-p`` is, ``None`` otherwise."""
        qx, qz = _pack_pauli(p, self.sx.shape[1])
        s = K.group_sign(self.sx, self.sz, self.ss, self.dx, self.dz, self.k, qx, qz)
        return None if s < 0 else int(s)

    def __contains__(self, p: PauliString) -> bool:
        s = self.group_sign(p)
        return s is not None and s == p.sign

    def same_group(self, other: "Tableau") -> bool:
        """Equality of the signed stabilizer groups (generating sets may differ)."""
        if self.n_qubits != other.n_qubits or self.k != other.k:
            return False
        return all(g in self for g in other.generators)

    # -- channels --

    def _site(self, site: int) -> int:
        site = int(site)
        if not 0 <= site < self.n_qubits:
            raise IndexError(f"site {site} out of range for {self.n_qubits} qubits")
        return site

    def apply_gate(self, gate: CliffordGate, i: int, j: int) -> None:
        i, j = self._site(i), self._site(j)
        if i == j:
            raise ValueError("a two-qubit gate needs two distinct sites")
        self.apply_layer(np.array([i]), np.array([j]), np.array([gate.index]))

    def apply_layer(self, sites_a, sites_b, gate_ids) -> None:
        """Apply gates ``gate_ids[n]`` on ``(sites_a[n], sites_b[n])`` in sequence."""
        out, sgn = gate_tables()
        a = np.asarray(sites_a, dtype=np.int64)
        b = np.asarray(sites_b, dtype=np.int64)
        g = np.asarray(gate_ids, dtype=np.int64)
        K.apply_gates(self.sx, self.sz, self.ss, self.k, a, b, g, out, sgn)
        K.apply_gates(self.dx, self.dz, np.zeros(self.k, np.uint8), self.k, a, b, g, out, sgn)
        self._check()

    def measure_z(self, site: int, rng: np.random.Generator) -> int:
        """Measure ``Z`` at ``site``; returns the outcome bit (eigenvalue ``(-1)**bit``).

        One bit is drawn from ``rng`` per call and used only if the outcome is random.
        """
        site = self._site(site)
        bit = int(rng.integers(2))
        return self.measure_z_with(site, bit)

    def measure_z_with(self, site: int, bit: int) -> int:
        """Like :meth:`measure_z`, with the would-be random outcome supplied."""
        site = self._site(site)
        out, self.k = K.measure_z(self.sx, self.sz, self.ss, self.dx, self.dz, self.k, site, int(bit))
        self._check()
        return int(out)

    def reset(self, site: int) -> None:
        """Reset channel: trace the site out and re-prepare it in ``|0>``."""
        site = self._site(site)
        self.k = K.reset(self.sx, self.sz, self.ss, self.dx, self.dz, self.k, site)
        self._check()

    # -- validation --

    def _check(self) -> None:
        if _debug:
            self.validate()

    def validate(self) -> None:
        """Raise :class:`TableauInvariantError` if any structural invariant fails."""
        n, k = self.n_qubits, self.k
        if not 0 <= k <= n:
            raise TableauInvariantError(f"generator count {k} outside [0, {n}]")
        sx, sz, _ = self.stabilizer_bits()
        dx = unpack_rows(self.dx[:k], n)
        dz = unpack_rows(self.dz[:k], n)
        si = sx.astype(np.int64)
        zi = sz.astype(np.int64)
        di = dx.astype(np.int64)
        ei = dz.astype(np.int64)
        ss = (si @ zi.T + zi @ si.T) % 2
        if ss.any():
            raise TableauInvariantError("generators do not commute")
        sd = (si @ ei.T + zi @ di.T) % 2
        if not np.array_equal(sd, np.eye(k, dtype=np.int64)):
            raise TableauInvariantError("destabilizers are not dual to the generators")
        dd = (di @ ei.T + ei @ di.T) % 2
        if dd.any():
            raise TableauInvariantError("destabilizers do not commute")
        if k and rank_gf2(np.hstack([sx, sz])) != k:
            raise TableauInvariantError("generators are not independent")
        pad = np.zeros_like(self.sx[k:])
        if not (np.array_equal(self.sx[k:], pad) and np.array_equal(self.sz[k:], pad)):
            raise TableauInvariantError("stale rows beyond the generator count")

    def __repr__(self):
        body = ", ".join(g.label for g in self.generators)
        return f"Tableau(n_qubits={self.n_qubits}, generators=[{body}])"


def _pack_pauli(p: PauliString, nw: int) -> tuple[np.ndarray, np.ndarray]:
    bits = np.vstack([p.x, p.z])
    packed = pack_rows(bits)
    out = np.zeros((2, nw), dtype=np.uint64)
    out[:, : packed.shape[1]] = packed[:, :nw]
    return out[0].copy(), out[1].copy()


# -- functional interface --


def new_product_state(n_qubits: int) -> Tableau:
    return Tableau.product_state(n_qubits)


def apply_gate(t: Tableau, gate: CliffordGate, sites: Sequence[int]) -> None:
    i, j = sites
    t.apply_gate(gate, i, j)


def measure_z(t: Tableau, site: int, rng: np.random.Generator) -> int:
    return t.measure_z(site, rng)


def reset(t: Tableau, site: int) -> None:
    t.reset(site)


def purity_exponent(t: Tableau) -> int:
    return t.purity_exponent()


def _region_mask(n: int, region) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    idx = np.fromiter((int(s) for s in region), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError("region contains sites outside the chain")
    mask[idx] = True
    return mask


def local_generator_count(x: np.ndarray, z: np.ndarray, region_mask: np.ndarray) -> int:
    """Number of independent group elements supported inside the masked region."""
    k = x.shape[0]
    if k == 0 or not region_mask.any():
        return 0
    outside = ~region_mask
    if not outside.any():
        return k
    return k - rank_gf2(np.hstack([x[:, outside], z[:, outside]]))


def subgroup_generator_count(t: Tableau, region) -> int:
    """``|G_A|``: generators of the subgroup supported entirely inside ``region``."""
    x, z, _ = t.stabilizer_bits()
    return local_generator_count(x, z, _region_mask(t.n_qubits, region))


def commutation_matrix(paulis: Sequence[PauliString]) -> np.ndarray:
    n = len(paulis)
    m = np.zeros((n, n), dtype=np.uint8)
    for a in range(n):
        for b in range(a + 1, n):
            m[a, b] = m[b, a] = symplectic_product(paulis[a].x, paulis[a].z, paulis[b].x, paulis[b].z)
    return m
