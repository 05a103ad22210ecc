"""Compiled inner loops for the packed stabilizer tableau.

Layout: rows are Pauli strings, bit ``b`` of word ``w`` is site ``64*w + b``.
Stabilizer row ``i`` and destabilizer row ``i`` form a symplectic pair:
``S_i`` anticommutes with ``D_i`` and commutes with every other row.  Only
stabilizer signs are meaningful; destabilizers carry no sign.
"""

import numpy as np
from numba import njit

_ONE = np.uint64(1)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


@njit(cache=True, inline="always")
def popcount64(v):
    v = v - ((v >> _ONE) & _M1)
    v = (v & _M2) + ((v >> np.uint64(2)) & _M2)
    v = (v + (v >> np.uint64(4))) & _M4
    return np.int64((v * _H01) >> np.uint64(56))


@njit(cache=True, inline="always")
def get_bit(row, site):
    return np.int64((row[site >> 6] >> np.uint64(site & 63)) & _ONE)


@njit(cache=True, inline="always")
def set_bit(row, site, val):
    w = site >> 6
    b = np.uint64(site & 63)
    row[w] = (row[w] & ~(_ONE << b)) | (np.uint64(val) << b)


@njit(cache=True)
def mul_phase(ax, az, bx, bz):
    """``e`` mod 4 with ``A B = i**e C`` for Hermitian Paulis (A on the left)."""
    plus = 0
    minus = 0
    for w in range(ax.shape[0]):
        x1 = ax[w]
        z1 = az[w]
        x2 = bx[w]
        z2 = bz[w]
        X1 = x1 & ~z1
        Y1 = x1 & z1
        Z1 = ~x1 & z1
        X2 = x2 & ~z2
        Y2 = x2 & z2
        Z2 = ~x2 & z2
        plus += popcount64((X1 & Y2) | (Y1 & Z2) | (Z1 & X2))
        minus += popcount64((X1 & Z2) | (Y1 & X2) | (Z1 & Y2))
    return (plus - minus) & 3


@njit(cache=True)
def anticommutes(ax, az, bx, bz):
    acc = np.uint64(0)
    for w in range(ax.shape[0]):
        acc ^= (ax[w] & bz[w]) ^ (az[w] & bx[w])
    return popcount64(acc) & 1


@njit(cache=True)
def _rowmul_signed(x, z, s, i, j):
    """Row i <- row i * row j, with sign (rows must commute)."""
    ph = mul_phase(x[i], z[i], x[j], z[j])
    s[i] ^= s[j] ^ np.uint8(ph >> 1)
    for w in range(x.shape[1]):
        x[i, w] ^= x[j, w]
        z[i, w] ^= z[j, w]


@njit(cache=True)
def apply_gates(x, z, s, nrows, sites_a, sites_b, gids, tab_out, tab_sign):
    """Conjugate rows ``[0, nrows)`` by a sequence of two-qubit gates.

    Rows transform independently, so each row runs through the whole gate
    sequence before moving on.
    """
    ngates = gids.shape[0]
    for r in range(nrows):
        xr = x[r]
        zr = z[r]
        flip = np.uint8(0)
        for g in range(ngates):
            a = sites_a[g]
            b = sites_b[g]
            code = get_bit(xr, a) | (get_bit(zr, a) << 1) | (get_bit(xr, b) << 2) | (get_bit(zr, b) << 3)
            if code == 0:
                continue
            gid = gids[g]
            o = np.int64(tab_out[gid, code])
            flip ^= tab_sign[gid, code]
            set_bit(xr, a, o & 1)
            set_bit(zr, a, (o >> 1) & 1)
            set_bit(xr, b, (o >> 2) & 1)
            set_bit(zr, b, (o >> 3) & 1)
        s[r] ^= flip


@njit(cache=True)
def remove_pair(sx, sz, ss, dx, dz, k, idx):
    """Drop pair ``idx`` by moving the last pair into its slot; returns new k."""
    last = k - 1
    if idx != last:
        sx[idx] = sx[last]
        sz[idx] = sz[last]
        ss[idx] = ss[last]
        dx[idx] = dx[last]
        dz[idx] = dz[last]
    sx[last] = 0
    sz[last] = 0
    ss[last] = 0
    dx[last] = 0
    dz[last] = 0
    return last


@njit(cache=True)
def group_sign(sx, sz, ss, dx, dz, k, qx, qz):
    """Sign bit of ``Q`` inside the stabilizer group, or -1 if neither ``+Q`` nor ``-Q`` is in it.

    The coefficient of ``S_i`` in the expansion of ``Q`` is the commutator of
    ``Q`` with ``D_i``, so membership needs no elimination.
    """
    nw = qx.shape[0]
    for i in range(k):
        if anticommutes(sx[i], sz[i], qx, qz):
            return -1
    accx = np.zeros(nw, dtype=np.uint64)
    accz = np.zeros(nw, dtype=np.uint64)
    sign = 0
    for i in range(k):
        if anticommutes(dx[i], dz[i], qx, qz):
            ph = mul_phase(accx, accz, sx[i], sz[i])
            sign ^= np.int64(ss[i]) ^ (ph >> 1)
            for w in range(nw):
                accx[w] ^= sx[i, w]
                accz[w] ^= sz[i, w]
    for w in range(nw):
        if accx[w] != qx[w] or accz[w] != qz[w]:
            return -1
    return sign


@njit(cache=True)
def append_stabilizer(sx, sz, ss, dx, dz, k, qx, qz, qsign):
    """Append ``Q`` as a new generator with a fresh destabilizer; returns new k.

    ``Q`` must commute with every stabilizer and lie outside the group.
    """
    nw = qx.shape[0]
    # Q' = Q * prod_{i: {Q, D_i} = 0} S_i commutes with every row
    rx = qx.copy()
    rz = qz.copy()
    hit = np.zeros(k, dtype=np.uint8)
    for i in range(k):
        if anticommutes(dx[i], dz[i], qx, qz):
            hit[i] = 1
            for w in range(nw):
                rx[w] ^= sx[i, w]
                rz[w] ^= sz[i, w]
    # single-site P anticommuting with Q'
    site = -1
    for w in range(nw):
        m = rx[w] | rz[w]
        if m != 0:
            b = 0
            while ((m >> np.uint64(b)) & _ONE) == 0:
                b += 1
            site = 64 * w + b
            break
    if site < 0:
        raise ValueError("operator already in the stabilizer group")
    px = np.zeros(nw, dtype=np.uint64)
    pz = np.zeros(nw, dtype=np.uint64)
    if get_bit(rx, site):
        set_bit(pz, site, 1)
    else:
        set_bit(px, site, 1)
    # project P onto the symplectic complement of all existing pairs
    p0x = px.copy()
    p0z = pz.copy()
    for i in range(k):
        if anticommutes(p0x, p0z, sx[i], sz[i]):
            for w in range(nw):
                px[w] ^= dx[i, w]
                pz[w] ^= dz[i, w]
        if anticommutes(p0x, p0z, dx[i], dz[i]):
            for w in range(nw):
                px[w] ^= sx[i, w]
                pz[w] ^= sz[i, w]
    for i in range(k):
        if hit[i]:
            for w in range(nw):
                dx[i, w] ^= px[w]
                dz[i, w] ^= pz[w]
    sx[k] = qx
    sz[k] = qz
    ss[k] = np.uint8(qsign)
    dx[k] = px
    dz[k] = pz
    return k + 1


@njit(cache=True)
def measure_z(sx, sz, ss, dx, dz, k, site, rand_bit):
    """Projective Z measurement; returns ``(outcome, new_k)``.

    ``rand_bit`` is used as the outcome whenever the outcome is random.
    """
    nw = sx.shape[1]
    p = -1
    for i in range(k):
        if get_bit(sx[i], site):
            p = i
            break
    if p >= 0:
        for i in range(k):
            if i != p and get_bit(sx[i], site):
                _rowmul_signed(sx, sz, ss, i, p)
        for i in range(k):
            if i != p and get_bit(dx[i], site):
                for w in range(nw):
                    dx[i, w] ^= sx[p, w]
                    dz[i, w] ^= sz[p, w]
        dx[p] = sx[p]
        dz[p] = sz[p]
        sx[p] = 0
        sz[p] = 0
        set_bit(sz[p], site, 1)
        ss[p] = np.uint8(rand_bit)
        return rand_bit, k
    qx = np.zeros(nw, dtype=np.uint64)
    qz = np.zeros(nw, dtype=np.uint64)
    set_bit(qz, site, 1)
    sgn = group_sign(sx, sz, ss, dx, dz, k, qx, qz)
    if sgn >= 0:
        return sgn, k
    k = append_stabilizer(sx, sz, ss, dx, dz, k, qx, qz, rand_bit)
    return rand_bit, k


@njit(cache=True)
def reset(sx, sz, ss, dx, dz, k, site):
    """Trace out ``site`` and re-prepare it in ``|0>``; returns new k."""
    nw = sx.shape[1]
    a = -1
    for i in range(k):
        if get_bit(sx[i], site):
            a = i
            break
    if a >= 0:
        for i in range(k):
            if i != a and get_bit(sx[i], site):
                _rowmul_signed(sx, sz, ss, i, a)
    b = -1
    for i in range(k):
        if i != a and get_bit(sz[i], site):
            b = i
            break
    if b >= 0:
        for i in range(k):
            if i != a and i != b and get_bit(sz[i], site):
                _rowmul_signed(sx, sz, ss, i, b)
    # at most rows a and b touch the site; the pairs they head are dropped
    if a > b:
        k = remove_pair(sx, sz, ss, dx, dz, k, a) if a >= 0 else k
        k = remove_pair(sx, sz, ss, dx, dz, k, b) if b >= 0 else k
    else:
        k = remove_pair(sx, sz, ss, dx, dz, k, b) if b >= 0 else k
        k = remove_pair(sx, sz, ss, dx, dz, k, a) if a >= 0 else k
    qx = np.zeros(nw, dtype=np.uint64)
    qz = np.zeros(nw, dtype=np.uint64)
    set_bit(qz, site, 1)
    return append_stabilizer(sx, sz, ss, dx, dz, k, qx, qz, 0)


@njit(cache=True)
def run_step(sx, sz, ss, dx, dz, k, sites_a, sites_b, gids, tab_out, tab_sign,
             reset_mask, meas_mask, rand_bits, outcomes):
    """One time step: gate layers, reset layer, measurement layer (site order).

    ``outcomes[l]`` receives the result at each measured site.  Returns new k.
    """
    apply_gates(sx, sz, ss, k, sites_a, sites_b, gids, tab_out, tab_sign)
    dummy = np.zeros(k, dtype=np.uint8)
    apply_gates(dx, dz, dummy, k, sites_a, sites_b, gids, tab_out, tab_sign)
    n = reset_mask.shape[0]
    for l in range(n):
        if reset_mask[l]:
            k = reset(sx, sz, ss, dx, dz, k, l)
    for l in range(n):
        if meas_mask[l]:
            out, k = measure_z(sx, sz, ss, dx, dz, k, l, np.int64(rand_bits[l]))
            outcomes[l] = out
    return k


@njit(cache=True)
def gf2_rank_packed(m, ncols):
    """Rank over GF(2) of packed rows; ``m`` is destroyed."""
    nrows = m.shape[0]
    nw = m.shape[1]
    rank = 0
    for col in range(ncols):
        if rank == nrows:
            break
        w = col >> 6
        bit = _ONE << np.uint64(col & 63)
        piv = -1
        for r in range(rank, nrows):
            if m[r, w] & bit:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for v in range(nw):
                t = m[piv, v]
                m[piv, v] = m[rank, v]
                m[rank, v] = t
        for r in range(rank + 1, nrows):
            if m[r, w] & bit:
                for v in range(w, nw):
                    m[r, v] ^= m[rank, v]
        rank += 1
    return rank
