"""Discrete-event engine and the switching model for hybrid quantum frames.

Time is an integer count of nanoseconds. Events are ordered by
``(time, sequence)`` where the sequence number is assigned at scheduling, so
two events at the same instant run in the order they were scheduled and a run
is reproducible bit for bit given its inputs and seed.

Two switching disciplines are modelled on a chain of relays:

* burst ("just-in-time") switching: the header runs ahead of the payload by a
  guard time that every relay consumes while it processes the header. A payload
  that catches up with an unprocessed header is dropped and the source retries
  with a longer guard.
* store-and-forward: each relay buffers the payload in memory until the header
  is processed and the whole payload has arrived, then re-emits the qubits at
  the rate they came in.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any, Union

import numpy as np

from .frame import FrameHeader, bump_elapsed_memory

PROPAGATION_NS_PER_KM = 5_000
MAX_GUARD_NS = 0xFFFFFFFF  # width of the guard-time field on the wire


class SchedulingError(RuntimeError):
    """An event was scheduled before the current simulation time."""


# --- event machinery ------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    time: int
    seq: int
    kind: str
    data: tuple[tuple[str, Any], ...] = ()

    def get(self, key: str, default: Any = None) -> Any:
        return dict(self.data).get(key, default)

    def __str__(self) -> str:
        fields = " ".join(f"{k}={v}" for k, v in self.data)
        return f"{self.time} #{self.seq} {self.kind} {fields}".rstrip()


class EventQueue:
    """Priority queue of events plus the loop that executes them."""

    def __init__(self) -> None:
        self.now = 0
        self.trace: list[Event] = []
        self._heap: list[tuple[int, int, Event, Callable[[Event], None] | None]] = []
        self._seq = itertools.count()

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, time: int, kind: str, handler: Callable[[Event], None] | None = None, **data: Any) -> Event:
        time = int(time)
        if time < self.now:
            raise SchedulingError(f"cannot schedule {kind!r} at {time} ns; clock is at {self.now} ns")
        event = Event(time, next(self._seq), kind, tuple(data.items()))
        heapq.heappush(self._heap, (event.time, event.seq, event, handler))
        return event

    def run(self, until: int | None = None) -> list[Event]:
        """Execute pending events in order and return the trace so far."""
        while self._heap:
            if until is not None and self._heap[0][0] > until:
                break
            _, _, event, handler = heapq.heappop(self._heap)
            self.now = event.time
            self.trace.append(event)
            if handler is not None:
                handler(event)
        return list(self.trace)


def format_trace(trace: Sequence[Event]) -> str:
    return "\n".join(str(e) for e in trace)


# --- network description --------------------------------------------------------


class NodeKind(str, Enum):
    SOURCE = "source"
    RELAY = "relay"
    RECEIVER = "receiver"


@dataclass(frozen=True)
class Link:
    length_km: float
    p_l: float = 0.0
    attenuation_db_per_km: float = 0.2  # carried for QKD; unused while loss is off

    def __post_init__(self) -> None:
        if self.length_km < 0 or self.p_l < 0 or self.attenuation_db_per_km < 0:
            raise ValueError(f"link parameters must be non-negative: {self}")


def _even_links(total_km: float, segments: int, p_l: float, attenuation: float) -> tuple[Link, ...]:
    return tuple(Link(total_km / segments, p_l, attenuation) for _ in range(segments))


@dataclass(frozen=True)
class Topology:
    """A linear chain, or a split chain with the source in the middle.

    ``links[i]`` joins ``nodes[i]`` and ``nodes[i + 1]``. For a split chain
    ``split`` holds ``(left_hops, right_hops)``: the relay counts on each side
    of the source.
    """

    nodes: tuple[NodeKind, ...]
    links: tuple[Link, ...]
    split: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if len(self.links) != len(self.nodes) - 1:
            raise ValueError("links must join consecutive nodes")
        if self.nodes.count(NodeKind.SOURCE) != 1:
            raise ValueError("exactly one source node required")
        if self.split is None:
            if self.nodes[0] != NodeKind.SOURCE or self.nodes[-1] != NodeKind.RECEIVER:
                raise ValueError("linear chain must run source -> receiver")
        else:
            left, right = self.split
            if left < 0 or right < 0 or self.nodes.index(NodeKind.SOURCE) != left + 1:
                raise ValueError(f"split {self.split} inconsistent with node list")

    @classmethod
    def linear_chain(cls, total_length_km: float, hops: int, p_l: float = 0.0, attenuation: float = 0.2) -> Topology:
        """Source, ``hops`` relays, receiver; total length split evenly."""
        if hops < 0:
            raise ValueError("hop count must be non-negative")
        nodes = (NodeKind.SOURCE,) + (NodeKind.RELAY,) * hops + (NodeKind.RECEIVER,)
        return cls(nodes, _even_links(total_length_km, hops + 1, p_l, attenuation))

    @classmethod
    def split_chain(
        cls, total_length_km: float, left_hops: int, right_hops: int, p_l: float = 0.0, attenuation: float = 0.2
    ) -> Topology:
        """Central source with an arm of ``total_length_km / 2`` on each side."""
        if left_hops < 0 or right_hops < 0:
            raise ValueError("hop counts must be non-negative")
        nodes = (
            (NodeKind.RECEIVER,)
            + (NodeKind.RELAY,) * left_hops
            + (NodeKind.SOURCE,)
            + (NodeKind.RELAY,) * right_hops
            + (NodeKind.RECEIVER,)
        )
        half = total_length_km / 2
        links = _even_links(half, left_hops + 1, p_l, attenuation) + _even_links(half, right_hops + 1, p_l, attenuation)
        return cls(nodes, links, split=(left_hops, right_hops))

    @property
    def total_length_km(self) -> float:
        return sum(link.length_km for link in self.links)

    def arms(self) -> list[tuple[Link, ...]]:
        """Link sequences from the source outward, one per receiver."""
        if self.split is None:
            return [self.links]
        left = self.split[0] + 1
        return [tuple(reversed(self.links[:left])), self.links[left:]]


@dataclass(frozen=True)
class BurstPolicy:
    guard0: int
    processing_time: int
    backoff_factor: float = 2.0
    availability_p: float = 1.0
    max_attempts: int = 8

    def __post_init__(self) -> None:
        if self.guard0 <= 0:
            raise ValueError("burst switching needs a positive initial guard time")
        if self.processing_time < 0:
            raise ValueError("processing time must be non-negative")
        _check_probability(self.availability_p)


@dataclass(frozen=True)
class StoreForwardPolicy:
    processing_time: int
    availability_p: float = 1.0

    def __post_init__(self) -> None:
        if self.processing_time < 0:
            raise ValueError("processing time must be non-negative")
        _check_probability(self.availability_p)


SwitchPolicy = Union[BurstPolicy, StoreForwardPolicy]


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")


# --- elementary timing rules ----------------------------------------------------


def propagation_delay(length_km: float) -> int:
    """Fiber flight time in ns at 5 us/km, rounded to the nearest ns."""
    if length_km < 0:
        raise ValueError(f"negative fiber length {length_km}")
    return int(math.floor(length_km * PROPAGATION_NS_PER_KM + 0.5))


def burst_step(guard: int, processing_time: int) -> int | None:
    """Guard left after one relay processes the header, or None if the payload is dropped."""
    if guard < 0:
        raise ValueError("guard time must be non-negative")
    remaining = guard - processing_time
    return remaining if remaining > 0 else None


def retransmit_guard(guard0: int, attempt: int, factor: float = 2.0) -> int:
    """Guard time for retransmission number ``attempt`` (1 = first retry)."""
    if attempt < 1:
        raise ValueError("retransmission attempts are numbered from 1")
    guard = guard0 * factor**attempt
    if not math.isfinite(guard) or guard > MAX_GUARD_NS:
        raise OverflowError(f"guard time {guard} ns exceeds the {MAX_GUARD_NS} ns wire limit")
    return int(round(guard))


def availability_draw(p: float, rng: np.random.Generator) -> bool:
    """Whether a relay's outgoing channel is free for this frame."""
    _check_probability(p)
    return bool(rng.random() < p)


def relay_pause(processing_time: int, payload_len: int, emission_period: int) -> int:
    """How long a store-and-forward relay holds the frame after its header arrives."""
    if min(processing_time, payload_len, emission_period) < 0:
        raise ValueError("pause inputs must be non-negative")
    return max(processing_time, payload_len * emission_period)


@dataclass(frozen=True)
class StorageInterval:
    qubit: int
    arrival: int
    release: int

    @property
    def duration(self) -> int:
        return self.release - self.arrival


def relay_storage_schedule(
    header_arrival: int, pause: int, payload_len: int, emission_period: int
) -> list[StorageInterval]:
    """Arrival and release time of each payload qubit at one relay.

    Qubit ``i`` arrives ``i`` periods after the header and leaves ``i`` periods
    after the pause ends, so every qubit is stored for exactly ``pause``.
    """
    return [
        StorageInterval(i, header_arrival + i * emission_period, header_arrival + pause + i * emission_period)
        for i in range(payload_len)
    ]


# --- burst switching ------------------------------------------------------------


@dataclass(frozen=True)
class BurstAttempt:
    attempt: int
    guard0: int
    relays_reached: int
    relays_forwarded: int
    dropped_at: int | None  # 1-based relay index
    reason: str | None  # "guard" or "unavailable"
    end_time: int


@dataclass(frozen=True)
class BurstResult:
    delivered: bool
    attempts: tuple[BurstAttempt, ...]
    arrival_time: int | None
    trace: tuple[Event, ...]


def simulate_burst(
    links: Sequence[Link], policy: BurstPolicy, rng: np.random.Generator | None = None, start: int = 0
) -> BurstResult:
    """Send one frame through ``len(links) - 1`` relays with burst switching.

    A dropped payload is reported back to the source over the fiber already
    traversed, and the frame is resent with ``retransmit_guard`` until it is
    delivered or ``policy.max_attempts`` attempts have been made.
    """
    links = tuple(links)
    if not links:
        raise ValueError("need at least one link")
    n_relays = len(links) - 1
    delays = [propagation_delay(link.length_km) for link in links]
    rng = rng if rng is not None else np.random.default_rng(0)
    queue = EventQueue()
    attempts: list[BurstAttempt] = []
    outcome: dict[str, int] = {}

    def launch(attempt: int, guard: int, t: int) -> None:
        queue.schedule(t, "header_tx", attempt=attempt, guard=guard)
        queue.schedule(t + delays[0], "header_rx", lambda e: on_header(e, attempt, guard, 1, guard), node=1, attempt=attempt)

    def finish(attempt: int, guard0: int, reached: int, forwarded: int, dropped_at, reason, t: int) -> None:
        attempts.append(BurstAttempt(attempt, guard0, reached, forwarded, dropped_at, reason, t))

    def on_header(event: Event, attempt: int, guard0: int, node: int, guard: int) -> None:
        t = event.time
        if node > n_relays:
            queue.schedule(t + guard, "deliver", lambda e: on_deliver(e, attempt, guard0), attempt=attempt)
            return
        next_guard = burst_step(guard, policy.processing_time)
        free = availability_draw(policy.availability_p, rng) if policy.availability_p < 1.0 else True
        if next_guard is not None and free:
            # header leaves once processed; the payload follows next_guard later
            queue.schedule(
                t + policy.processing_time + delays[node],
                "header_rx",
                lambda e: on_header(e, attempt, guard0, node + 1, next_guard),
                node=node + 1,
                attempt=attempt,
            )
        queue.schedule(
            t + guard,
            "payload_rx",
            lambda e: on_payload(e, attempt, guard0, node, next_guard, free),
            node=node,
            attempt=attempt,
        )

    def on_payload(event: Event, attempt: int, guard0: int, node: int, next_guard: int | None, free: bool) -> None:
        t = event.time
        if next_guard is not None and free:
            queue.schedule(t, "forward", node=node, attempt=attempt, guard=next_guard)
            return
        reason = "guard" if next_guard is None else "unavailable"
        queue.schedule(t, "drop", node=node, attempt=attempt, reason=reason)
        finish(attempt, guard0, node, node - 1, node, reason, t)
        if attempt + 1 < policy.max_attempts:
            guard = retransmit_guard(policy.guard0, attempt + 1, policy.backoff_factor)
            back = sum(delays[:node])
            queue.schedule(t + back, "nack", lambda e: launch(attempt + 1, guard, e.time), attempt=attempt)

    def on_deliver(event: Event, attempt: int, guard0: int) -> None:
        finish(attempt, guard0, n_relays, n_relays, None, None, event.time)
        outcome["arrival"] = event.time

    launch(0, policy.guard0, start)
    trace = queue.run()
    return BurstResult("arrival" in outcome, tuple(attempts), outcome.get("arrival"), tuple(trace))


# --- store-and-forward ----------------------------------------------------------


@dataclass(frozen=True)
class Stage:
    """One leg of a qubit's journey: a fiber segment or a stay in relay memory."""

    kind: str  # "fiber" or "memory"
    index: int  # link index for fiber, 1-based relay index for memory
    start: int
    end: int
    length_km: float = 0.0
    p_l: float = 0.0

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class QubitJourney:
    qubit: int
    emitted: int
    arrived: int | None
    stages: tuple[Stage, ...]

    @property
    def storage_time(self) -> int:
        return sum(s.duration for s in self.stages if s.kind == "memory")


@dataclass(frozen=True)
class Transit:
    delivered: bool
    header_arrival: int | None
    journeys: tuple[QubitJourney, ...]
    dropped_at: int | None
    header: FrameHeader | None
    trace: tuple[Event, ...]


def simulate_store_forward(
    links: Sequence[Link],
    policy: StoreForwardPolicy,
    payload_len: int,
    emission_period: int,
    header: FrameHeader | None = None,
    rng: np.random.Generator | None = None,
    start: int = 0,
) -> Transit:
    """Carry one frame across ``len(links) - 1`` memory-equipped relays.

    The header leaves at ``start`` and qubit ``i`` at ``start + i *
    emission_period``. If ``header`` is given, each relay adds its pause to
    the elapsed-memory field and drops the payload once the cut-off is passed.
    """
    links = tuple(links)
    if not links:
        raise ValueError("need at least one link")
    if payload_len < 0 or emission_period < 0:
        raise ValueError("payload length and emission period must be non-negative")
    n_relays = len(links) - 1
    delays = [propagation_delay(link.length_km) for link in links]
    rng = rng if rng is not None else np.random.default_rng(0)
    queue = EventQueue()
    stages: list[list[Stage]] = [[] for _ in range(payload_len)]
    arrived: dict[int, int] = {}
    state: dict[str, Any] = {"header": header}

    def send_header(t: int, link: int) -> None:
        queue.schedule(t, "header_tx", link=link)
        queue.schedule(t + delays[link], "header_rx", lambda e: on_header(e, link + 1), node=link + 1)

    def send_qubit(t: int, link: int, qubit: int) -> None:
        arrive = t + delays[link]
        seg = links[link]
        stages[qubit].append(Stage("fiber", link, t, arrive, seg.length_km, seg.p_l))
        queue.schedule(arrive, "qubit_rx", lambda e: on_qubit(e, link + 1, qubit), node=link + 1, qubit=qubit)

    def on_header(event: Event, node: int) -> None:
        if node > n_relays:
            state["header_arrival"] = event.time
            return
        pause = relay_pause(policy.processing_time, payload_len, emission_period)
        schedule = relay_storage_schedule(event.time, pause, payload_len, emission_period)
        queue.schedule(event.time + pause, "release", lambda e: on_release(e, node, pause, schedule), node=node)

    def on_qubit(event: Event, node: int, qubit: int) -> None:
        if node > n_relays:
            arrived[qubit] = event.time

    def on_release(event: Event, node: int, pause: int, schedule: list[StorageInterval]) -> None:
        hdr = state["header"]
        if hdr is not None:
            hdr = state["header"] = bump_elapsed_memory(hdr, pause)
        expired = hdr is not None and hdr.is_expired
        free = availability_draw(policy.availability_p, rng) if policy.availability_p < 1.0 else True
        if expired or not free:
            queue.schedule(event.time, "drop", node=node, reason="cutoff" if expired else "unavailable")
            state["dropped_at"] = node
            return
        send_header(event.time, node)
        for slot in schedule:
            stages[slot.qubit].append(Stage("memory", node, slot.arrival, slot.release))
            queue.schedule(
                slot.release, "qubit_tx", lambda e, q=slot.qubit: send_qubit(e.time, node, q), node=node, qubit=slot.qubit
            )

    send_header(start, 0)
    for i in range(payload_len):
        t = start + i * emission_period
        queue.schedule(t, "qubit_tx", lambda e, q=i: send_qubit(e.time, 0, q), node=0, qubit=i)
    trace = queue.run()

    dropped_at = state.get("dropped_at")
    journeys = tuple(
        QubitJourney(i, start + i * emission_period, arrived.get(i), tuple(stages[i])) for i in range(payload_len)
    )
    return Transit(
        delivered=dropped_at is None,
        header_arrival=state.get("header_arrival"),
        journeys=journeys,
        dropped_at=dropped_at,
        header=state["header"],
        trace=tuple(trace),
    )

