"""Entanglement distribution through memory-equipped relays.

Two ways of sharing a pair between the ends of a path:

* ``CentralSource``: a node in the middle emits pairs and sends one half down
  each arm.
* ``SenderSource``: one end emits, keeps qubit 0 in local memory and sends
  qubit 1 across the whole path.

Timing comes from the store-and-forward simulation. Each fiber segment
depolarizes the qubit crossing it and each stay in memory (relay storage, or
the sender's retained half) applies T1/T2 decoherence. Evolution acts on the
density matrix directly, so results are exact and repeatable.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .sim import (
    Link,
    StoreForwardPolicy,
    Topology,
    propagation_delay,
    relay_pause,
    simulate_store_forward,
)
from .state import UnphysicalChannelError, apply_depolarizing, apply_t1t2, depolar_prob, fidelity, make_epr

USABLE_FIDELITY = 0.5


@dataclass(frozen=True)
class CentralSource:
    left_hops: int = 0
    right_hops: int = 0
    name = "central"

    def __post_init__(self) -> None:
        if self.left_hops < 0 or self.right_hops < 0:
            raise ValueError("hop counts must be non-negative")


@dataclass(frozen=True)
class SenderSource:
    hops: int = 0
    name = "sender"

    def __post_init__(self) -> None:
        if self.hops < 0:
            raise ValueError("hop count must be non-negative")


EntScenario = Union[CentralSource, SenderSource]


@dataclass(frozen=True)
class EntParams:
    total_length: float = 0.0
    T1: float = 500_000.0
    T2: float = 500_000.0
    processing_time: int = 125_000
    emission_period: int = 5_000
    qubits_per_frame: int = 10
    p_l: float = 0.008

    def __post_init__(self) -> None:
        if self.total_length < 0 or self.p_l < 0:
            raise ValueError("length and p_l must be non-negative")
        if self.processing_time < 0 or self.emission_period < 0 or self.qubits_per_frame < 1:
            raise ValueError("timing values must be non-negative and a frame needs at least one qubit")
        if not (self.T1 > 0 and self.T2 > 0) or self.T2 > 2 * self.T1:
            raise UnphysicalChannelError(f"need 0 < T2 <= 2*T1, got T1={self.T1}, T2={self.T2}")


@dataclass(frozen=True)
class NoiseStage:
    qubit: int
    kind: str  # "fiber" or "memory"
    start: int
    end: int
    length_km: float = 0.0

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class FidelityRecord:
    pair_index: int
    arrival_time: int
    fidelity: float
    stages: tuple[NoiseStage, ...]

    def storage_time(self, qubit: int) -> int:
        return sum(s.duration for s in self.stages if s.qubit == qubit and s.kind == "memory")


def _apply_stage(rho: np.ndarray, stage: NoiseStage, params: EntParams) -> np.ndarray:
    if stage.kind == "fiber":
        return apply_depolarizing(rho, stage.qubit, depolar_prob(stage.length_km, params.p_l))
    return apply_t1t2(rho, stage.qubit, stage.duration, params.T1, params.T2)


def _arm_stages(links: Sequence[Link], qubit: int, params: EntParams) -> list[tuple[int, list[NoiseStage]]]:
    transit = simulate_store_forward(
        links, StoreForwardPolicy(params.processing_time), params.qubits_per_frame, params.emission_period
    )
    out = []
    for journey in transit.journeys:
        stages = [NoiseStage(qubit, s.kind, s.start, s.end, s.length_km) for s in journey.stages]
        out.append((journey.arrived, stages))
    return out


def run_scenario(scenario: EntScenario, params: EntParams) -> list[FidelityRecord]:
    """Distribute one frame of pairs and return the fidelity of each at arrival."""
    if isinstance(scenario, CentralSource):
        topo = Topology.split_chain(params.total_length, scenario.left_hops, scenario.right_hops, params.p_l)
        left, right = topo.arms()
        per_pair = [
            (max(ta, tb), sa + sb)
            for (ta, sa), (tb, sb) in zip(_arm_stages(left, 0, params), _arm_stages(right, 1, params))
        ]
    elif isinstance(scenario, SenderSource):
        topo = Topology.linear_chain(params.total_length, scenario.hops, params.p_l)
        per_pair = []
        for i, (arrived, stages) in enumerate(_arm_stages(topo.links, 1, params)):
            emitted = i * params.emission_period
            per_pair.append((arrived, [NoiseStage(0, "memory", emitted, arrived)] + stages))
    else:
        raise TypeError(f"unknown scenario {scenario!r}")

    records = []
    for i, (arrived, stages) in enumerate(per_pair):
        rho = make_epr()
        for stage in stages:
            rho = _apply_stage(rho, stage, params)
        records.append(FidelityRecord(i, arrived, fidelity(rho), tuple(stages)))
    return records


# --- sweeps ---------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    total_length_km: float
    hops: int
    T1_ns: float
    T2_ns: float
    proc_ns: int
    pair_index: int
    fidelity: float


def scenario_for(kind: str, hops: int) -> EntScenario:
    """Symmetric scenario with ``hops`` relays per arm (central) or on the path (sender)."""
    if kind == "central":
        return CentralSource(hops, hops)
    if kind == "sender":
        return SenderSource(hops)
    raise ValueError(f"unknown scenario kind {kind!r}")


def _rows(kind: str, hops: int, params: EntParams) -> list[SweepRow]:
    records = run_scenario(scenario_for(kind, hops), params)
    return [
        SweepRow(
            kind,
            params.total_length,
            hops,
            params.T1,
            params.T2,
            params.processing_time,
            r.pair_index,
            r.fidelity,
        )
        for r in records
    ]


def sweep_length_hops(
    params: EntParams, length_grid: Iterable[float], hops_list: Iterable[int], scenario: str = "central"
) -> list[SweepRow]:
    """Fidelity against total length for each relay count."""
    hops_list = list(hops_list)
    return [
        row
        for length in length_grid
        for hops in hops_list
        for row in _rows(scenario, hops, replace(params, total_length=float(length)))
    ]


def sweep_t1t2_length(
    params: EntParams, t_grid: Iterable[float], length_grid: Iterable[float], hops: int = 3
) -> list[SweepRow]:
    """Fidelity with T1 = T2 swept jointly against total length."""
    length_grid = list(length_grid)
    return [
        row
        for t in t_grid
        for length in length_grid
        for row in _rows("central", hops, replace(params, T1=float(t), T2=float(t), total_length=float(length)))
    ]


def sweep_proc_t1(
    params: EntParams,
    proc_grid: Iterable[int],
    t_grid: Iterable[float],
    hops: int = 3,
    hop_length_km: float = 20.0,
) -> list[SweepRow]:
    """Processing time against T1 = T2 with fiber noise switched off."""
    t_grid = list(t_grid)
    base = replace(params, p_l=0.0, total_length=hops * hop_length_km)
    return [
        row
        for proc in proc_grid
        for t in t_grid
        for row in _rows("central", hops, replace(base, processing_time=int(proc), T1=float(t), T2=float(t)))
    ]


def mean_fidelity(rows: Iterable[SweepRow], *keys: str) -> dict[tuple, float]:
    """Average the per-pair fidelities over rows sharing the given fields."""
    groups: dict[tuple, list[float]] = defaultdict(list)
    for row in rows:
        groups[tuple(getattr(row, k) for k in keys)].append(row.fidelity)
    return {key: float(np.mean(vals)) for key, vals in groups.items()}


def crossing_length(lengths: Sequence[float], fidelities: Sequence[float], level: float = USABLE_FIDELITY) -> float | None:
    """Length where fidelity first drops below ``level``, linearly interpolated.

    Returns None if the curve starts below ``level`` or never drops below it.
    """
    if len(lengths) != len(fidelities):
        raise ValueError("length and fidelity sequences differ in size")
    if not fidelities or fidelities[0] < level:
        return None
    for (l0, f0), (l1, f1) in zip(zip(lengths, fidelities), zip(lengths[1:], fidelities[1:])):
        if f0 >= level > f1:
            return l0 + (f0 - level) * (l1 - l0) / (f0 - f1)
    return None


@dataclass(frozen=True)
class Comparison:
    hops: int
    lengths: tuple[float, ...]
    central: tuple[float, ...]
    sender: tuple[float, ...]
    central_crossing: float | None
    sender_crossing: float | None
    rows: tuple[SweepRow, ...]

    @property
    def crossing_ratio(self) -> float | None:
        if not self.central_crossing or self.sender_crossing is None:
            return None
        return self.sender_crossing / self.central_crossing


def compare_scenarios(params: EntParams, length_grid: Iterable[float], hops: int = 0) -> Comparison:
    """Both source placements on one length grid, with their 0.5 crossings."""
    lengths = tuple(float(x) for x in length_grid)
    rows: list[SweepRow] = []
    curves = {}
    for kind in ("central", "sender"):
        kind_rows = sweep_length_hops(params, lengths, [hops], kind)
        means = mean_fidelity(kind_rows, "total_length_km")
        curves[kind] = tuple(means[(x,)] for x in lengths)
        rows.extend(kind_rows)
    return Comparison(
        hops,
        lengths,
        curves["central"],
        curves["sender"],
        crossing_length(lengths, curves["central"]),
        crossing_length(lengths, curves["sender"]),
        tuple(rows),
    )


def fiber_only_fidelity(total_length: float, p_l: float) -> float:
    """Both halves depolarized over a combined ``total_length`` of fiber, no memory."""
    survive = 10.0 ** (-total_length * p_l)
    return 0.25 + 0.75 * survive


def sender_retention_time(params: EntParams, hops: int) -> int:
    """Storage time of the retained half in a SenderSource frame (the same for every pair)."""
    links = Topology.linear_chain(params.total_length, hops, params.p_l).links
    pause = relay_pause(params.processing_time, params.qubits_per_frame, params.emission_period)
    return sum(propagation_delay(link.length_km) for link in links) + hops * pause
