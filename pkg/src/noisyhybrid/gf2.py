"""Bit-packed linear algebra over GF(2)."""

from __future__ import annotations

import numpy as np

from ._kernels import gf2_rank_packed


def pack_rows(bits) -> np.ndarray:
    """Pack a 2-d 0/1 array into uint64 words, 64 columns per word (little-endian bits)."""
    bits = np.asarray(bits, dtype=bool)
    if bits.ndim != 2:
        raise ValueError("expected a 2-d bit matrix")
    nrows, ncols = bits.shape
    nw = max(1, -(-ncols // 64))
    padded = np.zeros((nrows, 64 * nw), dtype=bool)
    padded[:, :ncols] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False).reshape(nrows, nw)


def unpack_rows(words: np.ndarray, ncols: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8).reshape(words.shape[0], 8 * words.shape[1])
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :ncols].astype(bool)


def rank_gf2(m) -> int:
    """Rank of a binary matrix over the two-element field."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("expected a 2-d bit matrix")
    if m.size == 0:
        return 0
    return int(gf2_rank_packed(pack_rows(m & 1 if m.dtype != bool else m), m.shape[1]))
