"""Entropies, mutual information and logarithmic negativity of stabilizer states.

All quantities are in bits.  With ``|G_R|`` the number of independent group
elements supported inside region ``R``:

    S_R = |R| - |G_R|,     I_{A:B} = |G| - |G_A| - |G_B|,
    E_N = rank(J) / 2,     J_ij = [A-parts of g_i and g_j anticommute].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf2 import rank_gf2
from .stabilizer import Tableau, debug_enabled, local_generator_count


@dataclass(frozen=True)
class Bipartition:
    region_a: range
    region_b: range

    def __post_init__(self):
        if set(self.region_a) & set(self.region_b):
            raise ValueError("regions overlap")

    @classmethod
    def half_chain(cls, n_qubits: int) -> "Bipartition":
        """``A = [0, L/2)``, ``B = [L/2, L)``."""
        h = n_qubits // 2
        return cls(range(0, h), range(h, n_qubits))

    def covers(self, n_qubits: int) -> bool:
        return sorted(list(self.region_a) + list(self.region_b)) == list(range(n_qubits))


@dataclass(frozen=True)
class EntanglementReport:
    s_a: int
    s_b: int
    s_ab: int
    mutual_information: int
    log_negativity: float
    purity_exponent: int


def _mask(n: int, region) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    for s in region:
        if not 0 <= s < n:
            raise IndexError(f"site {s} outside the chain")
        m[s] = True
    return m


def entropy_from_bits(x: np.ndarray, z: np.ndarray, region_mask: np.ndarray) -> int:
    return int(region_mask.sum()) - local_generator_count(x, z, region_mask)


def negativity_matrix(x: np.ndarray, z: np.ndarray, region_mask: np.ndarray) -> np.ndarray:
    """``J_ij`` = symplectic product of the A-restrictions of generators i and j."""
    xa = x[:, region_mask].astype(np.int64)
    za = z[:, region_mask].astype(np.int64)
    return ((xa @ za.T + za @ xa.T) & 1).astype(np.uint8)


def log_negativity_from_bits(x: np.ndarray, z: np.ndarray, region_mask: np.ndarray) -> float:
    if x.shape[0] == 0:
        return 0.0
    return rank_gf2(negativity_matrix(x, z, region_mask)) / 2


def entropy(t: Tableau, region) -> int:
    x, z, _ = t.stabilizer_bits()
    return entropy_from_bits(x, z, _mask(t.n_qubits, region))


def mutual_information(t: Tableau, b: Bipartition) -> int:
    x, z, _ = t.stabilizer_bits()
    n = t.n_qubits
    ma, mb = _mask(n, b.region_a), _mask(n, b.region_b)
    return (
        entropy_from_bits(x, z, ma)
        + entropy_from_bits(x, z, mb)
        - entropy_from_bits(x, z, ma | mb)
    )


def log_negativity(t: Tableau, b: Bipartition) -> float:
    x, z, _ = t.stabilizer_bits()
    return log_negativity_from_bits(x, z, _mask(t.n_qubits, b.region_a))


def report(t: Tableau, b: Bipartition | None = None) -> EntanglementReport:
    """All observables for one bipartition (half chain by default)."""
    n = t.n_qubits
    if b is None:
        b = Bipartition.half_chain(n)
    x, z, _ = t.stabilizer_bits()
    ma, mb = _mask(n, b.region_a), _mask(n, b.region_b)
    s_a = entropy_from_bits(x, z, ma)
    s_b = entropy_from_bits(x, z, mb)
    s_ab = entropy_from_bits(x, z, ma | mb)
    mi = s_a + s_b - s_ab
    en = log_negativity_from_bits(x, z, ma)
    rep = EntanglementReport(s_a, s_b, s_ab, mi, en, t.purity_exponent())
    if debug_enabled():
        check_report(rep)
    return rep


def check_report(rep: EntanglementReport) -> None:
    if min(rep.s_a, rep.s_b, rep.s_ab) < 0:
        raise AssertionError(f"negative entropy in {rep}")
    if rep.mutual_information < 0:
        raise AssertionError(f"negative mutual information in {rep}")
    if rep.log_negativity > rep.mutual_information / 2:
        raise AssertionError(f"E_N > I/2 in {rep}")
