"""Two-qubit Clifford gates.

A gate is stored as the images of ``X0, Z0, X1, Z1`` under conjugation.  The
11,520 elements of the two-qubit Clifford group (modulo global phase) are
indexed as ``16 * m + s`` where ``m`` in ``[0, 720)`` picks a 4x4 binary
symplectic matrix through the transvection construction of Koenig and Smolin
and the four bits of ``s`` are the image signs.

Two-qubit Paulis are also handled as 4-bit codes ``x0 | z0 << 1 | x1 << 2 |
z1 << 3``; the simulator kernels conjugate a row by one table lookup per gate.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import PauliString

N_SYMPLECTIC = 720
N_CLIFFORD = 16 * N_SYMPLECTIC


# --- symplectic matrices over GF(2), basis ordered (x0, z0, x1, z1, ...) ---


def _inner(v, w) -> int:
    t = v[0::2] @ w[1::2] + v[1::2] @ w[0::2]
    return int(t) % 2


def _transvection(k, v):
    return (v + _inner(k, v) * k) % 2


def _int2bits(i: int, n: int) -> np.ndarray:
    return np.array([(i >> j) & 1 for j in range(n)], dtype=np.int64)


def _find_transvection(x, y):
    """Return ``(h1, h2)`` with ``y = T_h1 T_h2 x``."""
    out = np.zeros((2, x.size), dtype=np.int64)
    if np.array_equal(x, y):
        return out
    if _inner(x, y) == 1:
        out[0] = (x + y) % 2
        return out
    z = np.zeros(x.size, dtype=np.int64)
    for ii in range(0, x.size, 2):
        if (x[ii] + x[ii + 1]) != 0 and (y[ii] + y[ii + 1]) != 0:
            z[ii] = (x[ii] + y[ii]) % 2
            z[ii + 1] = (x[ii + 1] + y[ii + 1]) % 2
            if z[ii] + z[ii + 1] == 0:
                z[ii + 1] = 1
                if x[ii] != x[ii + 1]:
                    z[ii] = 1
            out[0] = (x + z) % 2
            out[1] = (y + z) % 2
            return out
    for ii in range(0, x.size, 2):
        if (x[ii] + x[ii + 1]) != 0 and (y[ii] + y[ii + 1]) == 0:
            if x[ii] == x[ii + 1]:
                z[ii + 1] = 1
            else:
                z[ii + 1] = x[ii]
                z[ii] = x[ii + 1]
            break
    for ii in range(0, x.size, 2):
        if (x[ii] + x[ii + 1]) == 0 and (y[ii] + y[ii + 1]) != 0:
            if y[ii] == y[ii + 1]:
                z[ii + 1] = 1
            else:
                z[ii + 1] = y[ii]
                z[ii] = y[ii + 1]
            break
    out[0] = (x + z) % 2
    out[1] = (y + z) % 2
    return out


def symplectic_group_order(n: int) -> int:
    order = 1
    for j in range(1, n + 1):
        order *= (4**j - 1) * 2 ** (2 * j - 1)
    return order


def symplectic_from_index(i: int, n: int) -> np.ndarray:
    """Bijection from ``[0, |Sp(2n, 2)|)`` onto binary symplectic matrices.

    Row ``j`` of the result is the image of basis vector ``j``.
    """
    if not 0 <= i < symplectic_group_order(n):
        raise ValueError(f"index {i} out of range for Sp({2 * n}, 2)")
    nn = 2 * n
    s = (1 << nn) - 1
    k = (i % s) + 1
    i //= s
    f1 = _int2bits(k, nn)
    e1 = np.zeros(nn, dtype=np.int64)
    e1[0] = 1
    T = _find_transvection(e1, f1)
    bits = _int2bits(i % (1 << (nn - 1)), nn - 1)
    eprime = e1.copy()
    for j in range(2, nn):
        eprime[j] = bits[j - 1]
    h0 = _transvection(T[0], eprime)
    h0 = _transvection(T[1], h0)
    if bits[0] == 1:
        f1 = f1 * 0
    if n != 1:
        rest = symplectic_from_index(i >> (nn - 1), n - 1)
        g = np.zeros((nn, nn), dtype=np.int64)
        g[0, 0] = g[1, 1] = 1
        g[2:, 2:] = rest
    else:
        g = np.eye(2, dtype=np.int64)
    for j in range(nn):
        g[j] = _transvection(T[0], g[j])
        g[j] = _transvection(T[1], g[j])
        g[j] = _transvection(h0, g[j])
        g[j] = _transvection(f1, g[j])
    return g


def is_symplectic(m) -> bool:
    m = np.asarray(m, dtype=np.int64) % 2
    nn = m.shape[0]
    omega = np.zeros((nn, nn), dtype=np.int64)
    for a in range(0, nn, 2):
        omega[a, a + 1] = omega[a + 1, a] = 1
    return np.array_equal((m @ omega @ m.T) % 2, omega)


# --- 4-bit code arithmetic for two-qubit Paulis ---


def _xz(code: int) -> tuple[int, int]:
    xm = (code & 1) | ((code >> 2) & 1) << 1
    zm = ((code >> 1) & 1) | ((code >> 3) & 1) << 1
    return xm, zm


def _code(xm: int, zm: int) -> int:
    return (xm & 1) | (zm & 1) << 1 | ((xm >> 1) & 1) << 2 | ((zm >> 1) & 1) << 3


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _conjugation_table(images: tuple[int, ...], signs: tuple[int, ...]):
    """Image code and sign bit of every two-qubit Hermitian Pauli."""
    out = np.zeros(16, dtype=np.uint8)
    sgn = np.zeros(16, dtype=np.uint8)
    for c in range(16):
        x, z = _xz(c)
        # accumulate i**e X^ax Z^az, starting from Herm(c) = i**pc(x&z) X^x Z^z
        e, ax, az = _popcount(x & z), 0, 0
        for b in range(4):
            if not (c >> b) & 1:
                continue
            bx, bz = _xz(images[b])
            e += 2 * signs[b] + _popcount(bx & bz) + 2 * _popcount(az & bx)
            ax ^= bx
            az ^= bz
        e = (e - _popcount(ax & az)) % 4
        if e % 2:
            raise ValueError("images do not define a Clifford conjugation")
        out[c] = _code(ax, az)
        sgn[c] = e >> 1
    return out, sgn


@lru_cache(maxsize=1)
def _symplectic_codes() -> np.ndarray:
    """(720, 4) image codes of X0, Z0, X1, Z1 for every symplectic index."""
    codes = np.zeros((N_SYMPLECTIC, 4), dtype=np.uint8)
    for m in range(N_SYMPLECTIC):
        g = symplectic_from_index(m, 2)
        for b in range(4):
            codes[m, b] = int(g[b] @ (1 << np.arange(4)))
    return codes


@lru_cache(maxsize=1)
def gate_tables() -> tuple[np.ndarray, np.ndarray]:
    """Conjugation tables ``(out_code, out_sign)``, each of shape (11520, 16)."""
    codes = _symplectic_codes()
    out = np.zeros((N_CLIFFORD, 16), dtype=np.uint8)
    sgn = np.zeros((N_CLIFFORD, 16), dtype=np.uint8)
    c = np.arange(16)
    for m in range(N_SYMPLECTIC):
        base_out, base_sgn = _conjugation_table(tuple(int(v) for v in codes[m]), (0, 0, 0, 0))
        for s in range(16):
            # image signs enter linearly: flip for every generator present in c
            flip = np.zeros(16, dtype=np.uint8)
            for b in range(4):
                if (s >> b) & 1:
                    flip ^= ((c >> b) & 1).astype(np.uint8)
            out[16 * m + s] = base_out
            sgn[16 * m + s] = base_sgn ^ flip
    out.flags.writeable = False
    sgn.flags.writeable = False
    return out, sgn


@lru_cache(maxsize=1)
def _index_of_images() -> dict[tuple[int, ...], int]:
    codes = _symplectic_codes()
    return {tuple(int(v) for v in codes[m]): m for m in range(N_SYMPLECTIC)}


def _pauli_from_code(code: int, sign: int) -> PauliString:
    return PauliString([code & 1, (code >> 2) & 1], [(code >> 1) & 1, (code >> 3) & 1], int(sign))


def _code_from_pauli(p: PauliString) -> int:
    if p.n_qubits != 2:
        raise ValueError("two-qubit Pauli expected")
    return int(p.x[0]) | int(p.z[0]) << 1 | int(p.x[1]) << 2 | int(p.z[1]) << 3


@dataclass(frozen=True)
class CliffordGate:
    """Two-qubit Clifford element, identified by its index in ``[0, 11520)``."""

    index: int

    def __post_init__(self):
        if not 0 <= self.index < N_CLIFFORD:
            raise ValueError(f"Clifford index {self.index} out of range")

    @classmethod
    def from_images(cls, images) -> "CliffordGate":
        """Build from the images of ``X0, Z0, X1, Z1`` (PauliStrings or labels)."""
        images = [PauliString.from_label(p) if isinstance(p, str) else p for p in images]
        if len(images) != 4:
            raise ValueError("need exactly four images")
        key = tuple(_code_from_pauli(p) for p in images)
        try:
            m = _index_of_images()[key]
        except KeyError:
            raise ValueError("images are not symplectic") from None
        s = sum(p.sign << b for b, p in enumerate(images))
        return cls(16 * m + s)

    @property
    def symplectic_index(self) -> int:
        return self.index // 16

    @property
    def images(self) -> tuple[PauliString, ...]:
        out, sgn = gate_tables()
        return tuple(_pauli_from_code(int(out[self.index, 1 << b]), sgn[self.index, 1 << b]) for b in range(4))

    @property
    def symplectic_matrix(self) -> np.ndarray:
        """4x4 matrix whose row ``b`` is the (x0, z0, x1, z1) image of generator ``b``."""
        codes = _symplectic_codes()[self.symplectic_index]
        return np.array([[(int(c) >> j) & 1 for j in range(4)] for c in codes], dtype=np.uint8)

    def conjugate(self, p: PauliString) -> PauliString:
        out, sgn = gate_tables()
        c = _code_from_pauli(p)
        return _pauli_from_code(int(out[self.index, c]), p.sign ^ int(sgn[self.index, c]))

    def inverse(self) -> "CliffordGate":
        out, sgn = gate_tables()
        inv_images = []
        for b in range(4):
            target = 1 << b
            (c,) = np.nonzero(out[self.index] == target)[0]
            # U Q U^dag = s P  =>  U^dag P U = s Q
            inv_images.append(_pauli_from_code(int(c), sgn[self.index, c]))
        return CliffordGate.from_images(inv_images)

    def is_valid(self) -> bool:
        imgs = self.images
        pairs_anticommute = {(0, 1), (2, 3)}
        for a in range(4):
            for b in range(a + 1, 4):
                if imgs[a].commutes(imgs[b]) == ((a, b) in pairs_anticommute):
                    return False
        return True


def hadamard_first() -> CliffordGate:
    return CliffordGate.from_images(["+ZI", "+XI", "+IX", "+IZ"])


def cnot() -> CliffordGate:
    """CNOT with control on the first site."""
    return CliffordGate.from_images(["+XX", "+ZI", "+IX", "+ZZ"])


def identity_gate() -> CliffordGate:
    return CliffordGate.from_images(["+XI", "+ZI", "+IX", "+IZ"])


def swap_gate() -> CliffordGate:
    return CliffordGate.from_images(["+IX", "+IZ", "+XI", "+ZI"])


def sample_two_qubit_clifford(rng: np.random.Generator) -> CliffordGate:
    """Uniform two-qubit Clifford: uniform symplectic index plus four uniform sign bits."""
    return CliffordGate(int(rng.integers(N_CLIFFORD)))


def sample_gate_indices(rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorised form of :func:`sample_two_qubit_clifford`."""
    return rng.integers(N_CLIFFORD, size=size, dtype=np.int64)
