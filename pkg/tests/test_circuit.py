import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyhybrid.circuit import (
    Boundary,
    CircuitConfig,
    ConfigError,
    Model,
    bonds,
    draw_step,
    noise_schedule,
    run_trajectory,
    step,
    trajectory_rng,
    trajectory_seed,
)
from noisyhybrid.oracle import GateEvent, MeasureEvent, ResetEvent, replay
from noisyhybrid.stabilizer import Tableau, set_debug
from noisyhybrid.entanglement import Bipartition, entropy_from_bits, log_negativity_from_bits, report


def cfg(**kw):
    base = dict(n_qubits=6, measure_rate=0.2, reset_rate=0.1, depth=20)
    base.update(kw)
    return CircuitConfig(**base)


def test_config_defaults_and_validation():
    c = CircuitConfig(8, 0.1, 0.0)
    assert c.depth == 64 and c.model is Model.BULK_NOISE and c.boundary is Boundary.PBC
    assert CircuitConfig(4, 0.1, 0.1, model="boundary", boundary="obc").model is Model.BOUNDARY_PLUS_LATE_BULK
    for bad in (
        dict(n_qubits=5),
        dict(n_qubits=0),
        dict(measure_rate=1.5),
        dict(reset_rate=-0.1),
        dict(depth=0),
        dict(t_noise=21),
        dict(model="haar"),
        dict(master_seed=-1),
    ):
        with pytest.raises(ConfigError):
            cfg(**bad)


def test_bonds_l8():
    a, b = bonds(8, Boundary.OBC)
    pairs = list(zip(a.tolist(), b.tolist()))
    assert pairs == [(0, 1), (2, 3), (4, 5), (6, 7), (1, 2), (3, 4), (5, 6)]
    a, b = bonds(8, Boundary.PBC)
    pairs = list(zip(a.tolist(), b.tolist()))
    assert pairs[-1] == (7, 0) and len(pairs) == 8
    # every site sits on exactly two bonds under PBC
    assert np.all(np.bincount(np.concatenate([a, b]), minlength=8) == 2)


def test_noise_schedule_examples():
    bulk = cfg()
    assert all(noise_schedule(bulk, s, t) for s in range(6) for t in range(20))
    b0 = CircuitConfig(8, 0.1, 0.5, model="boundary", t_noise=0, depth=64)
    assert not any(noise_schedule(b0, 3, t) for t in range(64))
    late = CircuitConfig(8, 0.1, 0.5, model="boundary", t_noise=4, depth=64)
    assert noise_schedule(late, 3, 61) and not noise_schedule(late, 3, 59)


def test_unitary_dynamics_stay_pure():
    c = cfg(measure_rate=0.0, reset_rate=0.0, depth=30)
    rng, _ = trajectory_rng(0, 0)
    t = Tableau.product_state(6)
    for time in range(30):
        step(t, c, time, rng)
        assert t.purity_exponent() == 0


def test_full_reset_gives_product_state():
    for p in (0.0, 0.3, 1.0):
        rec = run_trajectory(CircuitConfig(4, p, 1.0))
        assert rec.report.mutual_information == 0 and rec.report.log_negativity == 0
        assert rec.report.purity_exponent == 0


def test_p0_q0_pure_readout():
    rec = run_trajectory(CircuitConfig(4, 0.0, 0.0, depth=32, master_seed=5))
    assert rec.report.purity_exponent == 0
    assert rec.report.mutual_information == 2 * rec.report.s_a


def test_determinism_and_stream_ids():
    c = cfg(master_seed=99, trajectory_index=3)
    a, b = run_trajectory(c), run_trajectory(c)
    assert a == b
    other = run_trajectory(c.with_index(4))
    assert other.stream_id != a.stream_id


def test_stream_seeds_differ():
    seeds = {trajectory_seed(7, i) for i in range(5000)}
    assert len(seeds) == 5000
    assert trajectory_seed(7, 0) != trajectory_seed(8, 0)
    # first draws of neighbouring streams are uncorrelated
    x = np.array([trajectory_rng(7, i)[0].random() for i in range(2000)])
    y = np.array([trajectory_rng(7, i + 1)[0].random() for i in range(2000)])
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.1


@given(st.integers(0, 2**32 - 1), st.sampled_from(["pbc", "obc"]), st.sampled_from(["bulk", "boundary"]))
def test_trajectory_matches_dense_replay(seed, boundary, model):
    c = CircuitConfig(6, 0.2, 0.1, model=model, boundary=boundary, t_noise=5, depth=20, master_seed=seed)
    rec = run_trajectory(c, record_events=True)
    st_ = replay(rec.events, 6)
    from noisyhybrid.oracle import oracle_entropy, oracle_log_negativity
    assert abs(rec.report.s_a - oracle_entropy(st_, [0, 1, 2])) < 1e-9
    assert abs(rec.report.s_ab - oracle_entropy(st_, range(6))) < 1e-9
    assert abs(rec.report.log_negativity - oracle_log_negativity(st_, [3, 4, 5])) < 1e-9
    assert round(np.log2(st_.purity())) == rec.report.purity_exponent


def test_event_log_layer_order():
    c = CircuitConfig(4, 0.5, 0.5, boundary="obc", depth=1, master_seed=1)
    rec = run_trajectory(c, record_events=True)
    kinds = [type(e) for e in rec.events]
    assert kinds[:3] == [GateEvent] * 3
    tail = kinds[3:]
    # resets before measurements, sites ascending within each layer
    assert tail == sorted(tail, key=lambda k: k is MeasureEvent)
    resets = [e.site for e in rec.events if isinstance(e, ResetEvent)]
    assert resets == sorted(resets)


def test_event_count_statistics():
    L, D, T, p, q = 8, 16, 150, 0.2, 0.1
    n_meas = n_reset = 0
    for i in range(T):
        rec = run_trajectory(CircuitConfig(L, p, q, depth=D, master_seed=3, trajectory_index=i))
        n_meas += rec.n_measurements
        n_reset += rec.n_random_resets
    n = L * D * T
    for count, rate in ((n_meas, p), (n_reset, q)):
        assert abs(count - rate * n) <= 4 * np.sqrt(n * rate * (1 - rate))


def test_boundary_model_reset_slots():
    L, D, T, q, tn = 8, 20, 100, 0.3, 5
    n_reset = 0
    forced = 0
    for i in range(T):
        c = CircuitConfig(L, 0.0, q, model="boundary", t_noise=tn, depth=D, master_seed=4, trajectory_index=i)
        rec = run_trajectory(c, record_events=True)
        n_reset += rec.n_random_resets
        forced += sum(isinstance(e, ResetEvent) for e in rec.events)
    slots = L * tn * T
    assert abs(n_reset - q * slots) <= 4 * np.sqrt(slots * q * (1 - q))
    # boundary sites are reset every step, on top of the random ones
    assert forced >= 2 * D * T


def test_late_bulk_limit_equals_bulk_model():
    """With t_noise = depth and no boundary resets the two geometries coincide draw for draw."""
    for i in range(20):
        kw = dict(n_qubits=8, measure_rate=0.15, reset_rate=0.05, depth=40, master_seed=11, trajectory_index=i)
        bulk = run_trajectory(CircuitConfig(**kw))
        late = run_trajectory(CircuitConfig(model="boundary", t_noise=40, boundary_resets=False, **kw))
        assert bulk.report == late.report


def test_debug_path_equals_fused_kernel():
    c = CircuitConfig(10, 0.2, 0.1, boundary="pbc", depth=30, master_seed=21)
    for i in range(5):
        fast = run_trajectory(c.with_index(i), record_events=True)
        set_debug(True)
        try:
            slow = run_trajectory(c.with_index(i), record_events=True)
        finally:
            set_debug(False)
        assert fast.report == slow.report and fast.events == slow.events


def test_draw_order_is_fixed():
    c = cfg(master_seed=1)
    rng_a, _ = trajectory_rng(1, 0)
    d = draw_step(c, 0, rng_a)
    rng_b, _ = trajectory_rng(1, 0)
    gid = rng_b.integers(11520, size=6, dtype=np.int64)
    u_reset = rng_b.random(6)
    u_meas = rng_b.random(6)
    bits = rng_b.integers(2, size=6, dtype=np.uint8)
    assert np.array_equal(d.gate_ids, gid)
    assert np.array_equal(d.reset_mask, u_reset < 0.1)
    assert np.array_equal(d.meas_mask, u_meas < 0.2)
    assert np.array_equal(d.rand_bits, bits)


def test_step_rejects_bad_time():
    c = cfg()
    rng, _ = trajectory_rng(0, 0)
    with pytest.raises(ValueError):
        step(Tableau.product_state(6), c, 20, rng)


def test_large_chain_multiword():
    """L > 64 exercises multi-word rows; the tableau stays valid."""
    c = CircuitConfig(130, 0.1, 0.05, depth=40, master_seed=2)
    rec = run_trajectory(c)
    assert rec.report.log_negativity <= rec.report.mutual_information / 2
    set_debug(True)
    try:
        slow = run_trajectory(c)
    finally:
        set_debug(False)
    assert slow.report == rec.report


def test_custom_bipartition():
    c = cfg(master_seed=3)
    b = Bipartition(range(0, 2), range(2, 6))
    rec = run_trajectory(c, bipartition=b)
    assert rec.report.s_a + rec.report.s_b >= rec.report.s_ab


def _replay_reference(events, n):
    from reference_tableau import ReferenceGroup

    ref = ReferenceGroup(n)
    for ev in events:
        if isinstance(ev, GateEvent):
            ref.gate(ev.gate.index, ev.i, ev.j)
        elif isinstance(ev, ResetEvent):
            ref.reset(ev.site)
        else:
            # a random outcome equals the supplied bit, so the recorded outcome reproduces it
            assert ref.measure(ev.site, ev.outcome) == ev.outcome
    return ref


@pytest.mark.parametrize("n,boundary,model", [(66, "pbc", "bulk"), (130, "obc", "bulk"), (128, "pbc", "boundary")])
def test_large_chain_matches_reference_simulator(n, boundary, model):
    """Multi-word chains against an elimination-based reference (no destabilizers, no packing)."""
    c = CircuitConfig(n, 0.1, 0.03, model=model, boundary=boundary, t_noise=10, depth=24, master_seed=17)
    rec = run_trajectory(c, record_events=True)
    ref = _replay_reference(rec.events, n)
    t = Tableau.product_state(n)  # rebuild the package state from the same log
    for ev in rec.events:
        if isinstance(ev, GateEvent):
            t.apply_gate(ev.gate, ev.i, ev.j)
        elif isinstance(ev, ResetEvent):
            t.reset(ev.site)
        else:
            t.measure_z_with(ev.site, ev.outcome)
    assert t.n_generators == ref.x.shape[0]
    for g in t.generators:
        assert ref.solve(g.x, g.z) == g.sign
    mine = report(t)
    assert mine == rec.report
    b = Bipartition.half_chain(n)
    ma = np.zeros(n, bool)
    ma[list(b.region_a)] = True
    assert entropy_from_bits(ref.x, ref.z, ma) == mine.s_a
    assert entropy_from_bits(ref.x, ref.z, ~ma) == mine.s_b
    assert log_negativity_from_bits(ref.x, ref.z, ma) == mine.log_negativity
