"""Core-network slices as virtual function chains, plus slice pairing.

Pairing composes radio segments, RAN slices and CN chains into end-to-end
slices (1:M allowed at both layers). Horizontal-slice traffic terminates at
the edge and must never reach a chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NoPathError


@dataclass
class VirtualFunction:
    """One virtualized network function with a deterministic single server.

    per_packet_latency is the processing delay a lone packet sees; the
    serial service interval 1/processing_rate bounds sustained throughput.
    """

    name: str
    processing_rate_per_ms: float
    per_packet_latency_us: int
    host: str
    next_free_us: int = 0
    served_total: int = 0
    served_by_slice: dict = field(default_factory=dict)

    @property
    def service_interval_us(self) -> int:
        return int(round(1000.0 / self.processing_rate_per_ms))

    def pass_packet(self, arrival_us: int, cn_slice_id: str) -> int:
        """FIFO service: wait for the server, then the processing delay."""
        start = max(arrival_us, self.next_free_us)
        self.next_free_us = start + self.service_interval_us
        self.served_total += 1
        self.served_by_slice[cn_slice_id] = self.served_by_slice.get(cn_slice_id, 0) + 1
        return start + self.per_packet_latency_us


@dataclass(frozen=True)
class CnSlice:
    id: str
    chain: tuple  # ordered function names; functions may be shared across slices
    target_service: str


@dataclass(frozen=True)
class PairingMap:
    radio_to_ran: dict  # radio slice id -> tuple of sNetIDs
    ran_to_cn: dict  # sNetID -> tuple of CN slice ids

    def radio_parent(self, snetid: int):
        for radio, rans in self.radio_to_ran.items():
            if snetid in rans:
                return radio
        return None


@dataclass(frozen=True)
class E2EFlowPath:
    flow_id: str
    radio_slice: str
    ran_slice: int
    cn_slice: str
    direction: str


def validate_pairing(pairing: PairingMap, radio_ids, ran_ids, cn_ids) -> list:
    """Return every pairing violation; an empty list means the map is sound."""
    problems = []
    radio_ids, ran_ids, cn_ids = set(radio_ids), set(ran_ids), set(cn_ids)
    parents: dict[int, list] = {}
    for radio, rans in sorted(pairing.radio_to_ran.items()):
        if radio not in radio_ids:
            problems.append(f"pairing references unknown radio slice {radio!r}")
        for r in rans:
            if r not in ran_ids:
                problems.append(f"radio slice {radio!r} pairs unknown RAN slice {r}")
            parents.setdefault(r, []).append(radio)
    for r in sorted(ran_ids):
        n = len(parents.get(r, []))
        if n == 0:
            problems.append(f"RAN slice {r} has no radio parent")
        elif n > 1:
            problems.append(f"RAN slice {r} has {n} radio parents {sorted(parents[r])}")
    covered_cn = set()
    for r, cns in sorted(pairing.ran_to_cn.items()):
        if r not in ran_ids:
            problems.append(f"pairing references unknown RAN slice {r}")
        for c in cns:
            if c not in cn_ids:
                problems.append(f"RAN slice {r} pairs unknown CN slice {c!r}")
            covered_cn.add(c)
    for c in sorted(cn_ids - covered_cn):
        problems.append(f"CN slice {c!r} is referenced by no RAN slice")
    return problems


def resolve_path(flow_id: str, snetid: int, service_tag: str, direction: str,
                 pairing: PairingMap, cn_slices: dict) -> E2EFlowPath:
    """Deterministic radio/RAN/CN triple for one flow.

    Among the CN slices paired to the flow's RAN slice, the one matching the
    flow's service tag wins; ties break to the lowest CN slice id.
    """
    radio = pairing.radio_parent(snetid)
    if radio is None:
        raise NoPathError(f"flow {flow_id}: RAN slice {snetid} has no radio parent")
    candidates = sorted(c for c in pairing.ran_to_cn.get(snetid, ())
                        if cn_slices[c].target_service == service_tag)
    if not candidates:
        raise NoPathError(
            f"flow {flow_id}: no CN slice with service {service_tag!r} paired to "
            f"RAN slice {snetid}")
    return E2EFlowPath(flow_id=flow_id, radio_slice=radio, ran_slice=snetid,
                       cn_slice=candidates[0], direction=direction)


class ChainRuntime:
    """Executes CN chains over a shared function registry."""

    def __init__(self, functions: dict, cn_slices: dict):
        self.functions = functions
        self.cn_slices = cn_slices

    def traverse_chain(self, cn_slice_id: str, arrival_us: int) -> int:
        """Departure time of a packet entering the chain now."""
        t = arrival_us
        for name in self.cn_slices[cn_slice_id].chain:
            t = self.functions[name].pass_packet(t, cn_slice_id)
        return t


def horizontal_termination(slice_kind: str) -> bool:
    """Horizontal-slice flows terminate locally and bypass the CN entirely."""
    return slice_kind == "horizontal"
