import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpswitch.frame import FrameHeader, QduDescriptor
from qpswitch.sim import (
    BurstPolicy,
    EventQueue,
    Link,
    NodeKind,
    SchedulingError,
    StoreForwardPolicy,
    Topology,
    availability_draw,
    burst_step,
    format_trace,
    propagation_delay,
    relay_pause,
    relay_storage_schedule,
    retransmit_guard,
    simulate_burst,
    simulate_store_forward,
)


def test_equal_times_run_in_insertion_order():
    q = EventQueue()
    seen = []
    for name in "abc":
        q.schedule(10, name, lambda e: seen.append(e.kind))
    q.schedule(5, "first", lambda e: seen.append(e.kind))
    q.run()
    assert seen == ["first", "a", "b", "c"]


def test_empty_queue_runs_to_empty_trace():
    assert EventQueue().run() == []


def test_scheduling_in_the_past_fails():
    q = EventQueue()
    q.schedule(100, "x", lambda e: q.schedule(50, "late"))
    with pytest.raises(SchedulingError):
        q.run()


def test_run_until_leaves_later_events_pending():
    q = EventQueue()
    q.schedule(1, "a")
    q.schedule(9, "b")
    assert [e.kind for e in q.run(until=5)] == ["a"]
    assert len(q) == 1
    assert [e.kind for e in q.run()] == ["a", "b"]


@pytest.mark.parametrize("km, ns", [(0, 0), (20, 100_000), (1, 5000), (0.0001, 1), (0.00009, 0)])
def test_propagation_delay(km, ns):
    assert propagation_delay(km) == ns


def test_propagation_delay_rejects_negative():
    with pytest.raises(ValueError):
        propagation_delay(-1)


@pytest.mark.parametrize("guard, tp, out", [(500_000, 125_000, 375_000), (125_000, 125_000, None), (100_000, 0, 100_000)])
def test_burst_step(guard, tp, out):
    assert burst_step(guard, tp) == out


def test_retransmit_guard():
    assert retransmit_guard(500_000, 1, 2) == 1_000_000
    assert retransmit_guard(500_000, 3, 2) == 4_000_000
    assert {retransmit_guard(500_000, a, 1) for a in range(1, 6)} == {500_000}
    with pytest.raises(OverflowError):
        retransmit_guard(500_000, 20, 2)
    with pytest.raises(ValueError):
        retransmit_guard(500_000, 0)


def test_availability_draw_edges_and_mean():
    rng = np.random.default_rng(1)
    assert all(availability_draw(1.0, rng) for _ in range(1000))
    assert not any(availability_draw(0.0, rng) for _ in range(1000))
    mean = np.mean([availability_draw(0.5, rng) for _ in range(100_000)])
    assert abs(mean - 0.5) <= 0.01
    with pytest.raises(ValueError):
        availability_draw(1.5, rng)


def test_relay_pause():
    assert relay_pause(125_000, 10, 5_000) == 125_000
    assert relay_pause(10_000, 10, 5_000) == 50_000
    assert relay_pause(0, 0, 12345) == 0


def test_relay_storage_schedule():
    slots = relay_storage_schedule(1000, 125_000, 10, 5_000)
    assert [s.duration for s in slots] == [125_000] * 10
    assert [s.arrival for s in slots] == [1000 + 5000 * i for i in range(10)]
    assert all(s.duration == 0 for s in relay_storage_schedule(0, 0, 4, 5_000))
    assert [s.duration for s in relay_storage_schedule(7, 300, 1, 5_000)] == [300]


def test_linear_chain_shape():
    topo = Topology.linear_chain(60, 3, p_l=0.008)
    assert topo.nodes == (NodeKind.SOURCE,) + (NodeKind.RELAY,) * 3 + (NodeKind.RECEIVER,)
    assert [link.length_km for link in topo.links] == [15] * 4
    assert topo.arms() == [topo.links]


def test_split_chain_arms():
    topo = Topology.split_chain(100, 2, 1, p_l=0.008)
    assert topo.nodes.index(NodeKind.SOURCE) == 3
    left, right = topo.arms()
    assert len(left) == 3 and len(right) == 2
    assert sum(link.length_km for link in left) == pytest.approx(50)
    assert sum(link.length_km for link in right) == pytest.approx(50)
    assert topo.total_length_km == pytest.approx(100)


def test_topology_validation():
    with pytest.raises(ValueError):
        Topology((NodeKind.SOURCE, NodeKind.RECEIVER), ())
    with pytest.raises(ValueError):
        Link(-1.0)
    with pytest.raises(ValueError):
        Topology.linear_chain(10, -1)


def test_policy_validation():
    with pytest.raises(ValueError):
        BurstPolicy(guard0=0, processing_time=10)
    with pytest.raises(ValueError):
        StoreForwardPolicy(processing_time=-1)
    with pytest.raises(ValueError):
        StoreForwardPolicy(processing_time=1, availability_p=2.0)


def test_burst_drop_and_retransmit_timeline():
    # 60 km, four relays, five 12 km links = 60 us per link
    links = Topology.linear_chain(60, 4).links
    result = simulate_burst(links, BurstPolicy(guard0=500_000, processing_time=125_000))
    first, second = result.attempts
    assert (first.relays_forwarded, first.dropped_at, first.reason) == (3, 4, "guard")
    # header reaches relay 4 after 4 links and 3 processing delays; payload trails by the last guard
    assert first.end_time == 4 * 60_000 + 3 * 125_000 + 125_000
    nack = first.end_time + 4 * 60_000
    assert second.guard0 == 1_000_000 and second.dropped_at is None
    assert result.delivered and result.arrival_time == nack + 5 * 60_000 + 1_000_000


def test_burst_gives_up_after_max_attempts():
    links = Topology.linear_chain(10, 5).links
    result = simulate_burst(links, BurstPolicy(guard0=100, processing_time=1000, max_attempts=3))
    assert not result.delivered
    assert [a.dropped_at for a in result.attempts] == [1, 1, 1]


def test_burst_unavailable_channel_drops():
    links = Topology.linear_chain(10, 2).links
    result = simulate_burst(links, BurstPolicy(guard0=10**6, processing_time=10, availability_p=0.0, max_attempts=2))
    assert [a.reason for a in result.attempts] == ["unavailable", "unavailable"]


@settings(max_examples=200)
@given(st.integers(1, 10**6), st.integers(1, 10**5), st.integers(0, 8), st.floats(0, 200))
def test_burst_hops_before_drop(guard0, tp, n, km):
    links = Topology.linear_chain(km, n).links
    result = simulate_burst(links, BurstPolicy(guard0=guard0, processing_time=tp, max_attempts=1))
    first = result.attempts[0]
    if guard0 > n * tp:
        assert first.dropped_at is None and first.relays_forwarded == n
    else:
        # first relay k with guard0 - k * tp <= 0
        k = -(-guard0 // tp)
        assert first.dropped_at == k
        assert first.relays_forwarded == k - 1


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.floats(0, 1))
def test_burst_is_deterministic_under_seed(seed, p):
    links = Topology.linear_chain(40, 3).links
    policy = BurstPolicy(guard0=400_000, processing_time=100_000, availability_p=p, max_attempts=4)
    a = simulate_burst(links, policy, np.random.default_rng(seed))
    b = simulate_burst(links, policy, np.random.default_rng(seed))
    assert format_trace(a.trace) == format_trace(b.trace)
    assert a == b


def test_store_forward_timeline():
    links = Topology.linear_chain(60, 3).links
    transit = simulate_store_forward(links, StoreForwardPolicy(125_000), payload_len=10, emission_period=5000)
    assert transit.delivered
    assert transit.header_arrival == 4 * 75_000 + 3 * 125_000
    for j in transit.journeys:
        assert j.storage_time == 3 * 125_000
        assert j.arrived == j.emitted + 4 * 75_000 + 3 * 125_000
        kinds = [s.kind for s in j.stages]
        assert kinds == ["fiber", "memory", "fiber", "memory", "fiber", "memory", "fiber"]


@settings(max_examples=100)
@given(
    st.floats(0, 300),
    st.integers(0, 6),
    st.integers(0, 300_000),
    st.integers(1, 40),
    st.integers(1, 20_000),
)
def test_store_forward_fifo_and_storage(km, hops, tp, n, period):
    links = Topology.linear_chain(km, hops).links
    transit = simulate_store_forward(links, StoreForwardPolicy(tp), payload_len=n, emission_period=period)
    pause = relay_pause(tp, n, period)
    arrivals = [j.arrived for j in transit.journeys]
    assert arrivals == sorted(arrivals)
    assert len(set(arrivals)) == n
    assert all(j.storage_time == hops * pause for j in transit.journeys)
    # stages tile the journey without gaps
    for j in transit.journeys:
        assert j.stages[0].start == j.emitted and j.stages[-1].end == j.arrived
        assert all(a.end == b.start for a, b in zip(j.stages, j.stages[1:]))


def test_store_forward_cutoff_drop():
    header = FrameHeader(
        dest_addr=b"\x01" * 6,
        src_addr=b"\x02" * 6,
        qdu=QduDescriptor(payload_len=10, emission_period=5000),
        max_cutoff_time=300_000,
        ttl=10,
    )
    links = Topology.linear_chain(30, 4).links
    transit = simulate_store_forward(links, StoreForwardPolicy(125_000), 10, 5000, header=header)
    assert not transit.delivered
    assert transit.dropped_at == 3
    assert transit.header.elapsed_memory_time == 375_000
    assert all(j.arrived is None for j in transit.journeys)


def test_store_forward_availability_drop_is_seeded():
    links = Topology.linear_chain(30, 5).links
    policy = StoreForwardPolicy(1000, availability_p=0.5)
    runs = [simulate_store_forward(links, policy, 4, 100, rng=np.random.default_rng(3)) for _ in range(2)]
    assert runs[0] == runs[1]
