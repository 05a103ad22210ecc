"""Shared generators of random operation sequences for tableau/oracle comparisons."""

import numpy as np

from noisyhybrid.clifford import N_CLIFFORD, CliffordGate
from noisyhybrid.oracle import GateEvent, MeasureEvent, ResetEvent


def random_ops(rng: np.random.Generator, n: int, length: int, p_meas=0.3, p_reset=0.2):
    """Random list of ('gate', idx, i, j) / ('measure', site, bit) / ('reset', site)."""
    ops = []
    for _ in range(length):
        u = rng.random()
        if u < p_meas:
            ops.append(("measure", int(rng.integers(n)), int(rng.integers(2))))
        elif u < p_meas + p_reset:
            ops.append(("reset", int(rng.integers(n))))
        else:
            i, j = rng.choice(n, 2, replace=False)
            ops.append(("gate", int(rng.integers(N_CLIFFORD)), int(i), int(j)))
    return ops


def run_ops(t, ops):
    """Apply ops to a tableau; returns the event log with realised outcomes."""
    events = []
    for op in ops:
        if op[0] == "gate":
            _, g, i, j = op
            t.apply_gate(CliffordGate(g), i, j)
            events.append(GateEvent(i, j, CliffordGate(g)))
        elif op[0] == "measure":
            _, s, bit = op
            events.append(MeasureEvent(s, t.measure_z_with(s, bit)))
        else:
            t.reset(op[1])
            events.append(ResetEvent(op[1]))
    return events
