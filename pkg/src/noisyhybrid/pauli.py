"""Hermitian Pauli strings with a real sign.

A site with both the x and z bit set carries ``Y`` (not ``XZ``), so every
string squares to the identity and the sign is a single bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTERS.items()}


def product_phase(x1, z1, x2, z2) -> int:
    """Exponent ``e`` (mod 4) with ``P1 P2 = i**e P3`` for Hermitian ``P1, P2, P3``.

    Inputs are 0/1 arrays of equal length.
    """
    x1 = np.asarray(x1, dtype=bool)
    z1 = np.asarray(z1, dtype=bool)
    x2 = np.asarray(x2, dtype=bool)
    z2 = np.asarray(z2, dtype=bool)
    X1, Y1, Z1 = x1 & ~z1, x1 & z1, ~x1 & z1
    X2, Y2, Z2 = x2 & ~z2, x2 & z2, ~x2 & z2
    plus = (X1 & Y2) | (Y1 & Z2) | (Z1 & X2)
    minus = (X1 & Z2) | (Y1 & X2) | (Z1 & Y2)
    return int(plus.sum() - minus.sum()) % 4


def symplectic_product(x1, z1, x2, z2) -> int:
    """0 if the two strings commute, 1 if they anticommute."""
    x1 = np.asarray(x1, dtype=bool)
    z1 = np.asarray(z1, dtype=bool)
    x2 = np.asarray(x2, dtype=bool)
    z2 = np.asarray(z2, dtype=bool)
    return int(np.count_nonzero((x1 & z2) ^ (z1 & x2)) & 1)


@dataclass(frozen=True, eq=False)
class PauliString:
    x: np.ndarray
    z: np.ndarray
    sign: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=bool).copy()
        z = np.asarray(self.z, dtype=bool).copy()
        if x.ndim != 1 or x.shape != z.shape:
            raise ValueError("x and z bit vectors must be 1-d and of equal length")
        if self.sign not in (0, 1):
            raise ValueError("sign must be 0 (+) or 1 (-)")
        x.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as ``"+XZI"`` or ``"-YY"`` (site 0 first)."""
        sign = 0
        if label[:1] in "+-":
            sign = int(label[0] == "-")
            label = label[1:]
        try:
            bits = [_BITS[c] for c in label.upper()]
        except KeyError as exc:
            raise ValueError(f"bad Pauli letter in {label!r}") from exc
        x = np.array([b[0] for b in bits], dtype=bool)
        z = np.array([b[1] for b in bits], dtype=bool)
        return cls(x, z, sign)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, bool), np.zeros(n, bool), 0)

    @classmethod
    def single(cls, n: int, site: int, letter: str, sign: int = 0) -> "PauliString":
        x = np.zeros(n, bool)
        z = np.zeros(n, bool)
        x[site], z[site] = _BITS[letter]
        return cls(x, z, sign)

    @property
    def n_qubits(self) -> int:
        return self.x.shape[0]

    @property
    def label(self) -> str:
        body = "".join(_LETTERS[(int(a), int(b))] for a, b in zip(self.x, self.z))
        return ("-" if self.sign else "+") + body

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def commutes(self, other: "PauliString") -> bool:
        return symplectic_product(self.x, self.z, other.x, other.z) == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not self.commutes(other):
            raise ValueError("product of anticommuting Paulis is not Hermitian")
        ph = product_phase(self.x, self.z, other.x, other.z)
        return PauliString(self.x ^ other.x, self.z ^ other.z, self.sign ^ other.sign ^ (ph >> 1))

    def __neg__(self) -> "PauliString":
        return PauliString(self.x, self.z, self.sign ^ 1)

    def __eq__(self, other):
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.sign == other.sign
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self):
        return hash(self.label)

    def __repr__(self):
        return f"PauliString({self.label!r})"
