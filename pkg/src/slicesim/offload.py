"""Horizontal slicing: M-plane negotiated computation offloading.

A session walks the fixed message sequence request -> accept -> slice ->
ship code -> execute -> return result -> apply, as two state machines that
only talk through delayed signaling messages and container transfers on a
dedicated L2 logical channel. Failure (timeout, link loss, digest mismatch)
is the only deviation allowed from that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from hashlib import sha256

from .errors import DigestMismatchError, SimulationError

IDLE, REQUESTED, ACCEPTED, DECLINED = "Idle", "Requested", "Accepted", "Declined"
SLICED, SHIPPED, EXECUTING, RETURNED = "Sliced", "Shipped", "Executing", "Returned"
APPLIED, FAILED = "Applied", "Failed"

STATE_CODES = {IDLE: 0, REQUESTED: 1, ACCEPTED: 2, DECLINED: 3, SLICED: 4,
               SHIPPED: 5, EXECUTING: 6, RETURNED: 7, APPLIED: 8, FAILED: 9}

_NEXT = {
    IDLE: {REQUESTED},
    REQUESTED: {ACCEPTED, DECLINED},
    ACCEPTED: {SLICED},
    SLICED: {SHIPPED},
    SHIPPED: {EXECUTING},
    EXECUTING: {RETURNED},
    RETURNED: {APPLIED},
}

CANONICAL_ORDER = (IDLE, REQUESTED, ACCEPTED, SLICED, SHIPPED, EXECUTING,
                   RETURNED, APPLIED)


def is_conformant(states) -> bool:
    """True iff the observed state sequence is a prefix of the canonical order,
    optionally ending in Declined (after Requested) or Failed (anywhere)."""
    states = list(states)
    if states and states[0] != IDLE:
        states = [IDLE] + states
    for i, st in enumerate(states[1:], start=1):
        prev = states[i - 1]
        if st == FAILED:
            return i == len(states) - 1
        if st not in _NEXT.get(prev, set()):
            return False
    return True


@dataclass
class ComputeProfile:
    """Split of a node's compute: one share stays local, the rest is shareable."""

    node: str
    total_capacity_mops: float
    reserved_local: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.reserved_local <= 1.0:
            raise SimulationError(f"{self.node}: reserved_local outside [0,1]")

    @property
    def shareable_mops(self) -> float:
        return self.total_capacity_mops * (1.0 - self.reserved_local)


@dataclass
class SliceableTask:
    task_id: str
    client: str
    host: str
    total_mops: float
    sliceable_fraction: float
    ship_bytes: int
    result_bytes: int
    deadline_ms: float | None = None
    asked_mops: float | None = None

    @property
    def offloadable_mops(self) -> float:
        return self.total_mops * self.sliceable_fraction

    @property
    def local_part_mops(self) -> float:
        return self.total_mops - self.offloadable_mops


@dataclass(frozen=True)
class OffloadEstimate:
    decision: str  # "local" | "request_offload"
    local_us: float
    offload_us: float


def decide_offload(task: SliceableTask, client_capacity_mops: float,
                   grant_estimate_mops: float, signaling_rtt_us: float,
                   link_rate_bps: float, os_overhead_us: float = 0.0) -> OffloadEstimate:
    """Offload iff the estimated end-to-end offload time beats running locally.

    The local remainder overlaps the ship/execute/return pipeline, so the
    offload estimate is rtt + max(pipeline, local remainder), plus any
    per-stage OS overhead when slicing is done at OS level.
    """
    local_us = task.total_mops / client_capacity_mops * 1e6
    if task.sliceable_fraction <= 0.0 or grant_estimate_mops <= 0.0 or link_rate_bps <= 0.0:
        return OffloadEstimate("local", local_us, math.inf)
    ship_us = task.ship_bytes * 8.0 / link_rate_bps * 1e6
    result_us = task.result_bytes * 8.0 / link_rate_bps * 1e6
    exec_us = task.offloadable_mops / grant_estimate_mops * 1e6
    local_part_us = task.local_part_mops / client_capacity_mops * 1e6
    pipeline_us = ship_us + exec_us + result_us
    offload_us = (signaling_rtt_us + max(pipeline_us, local_part_us)
                  + 4.0 * os_overhead_us)
    decision = "request_offload" if offload_us < local_us else "local"
    return OffloadEstimate(decision, local_us, offload_us)


@dataclass(frozen=True)
class TaskSplit:
    remote_mops: float
    local_mops: float
    ship_bytes: int


def slice_task(task: SliceableTask, granted_mops: float) -> TaskSplit:
    """Split by sliceable fraction; the grant changes speed, never the split."""
    return TaskSplit(remote_mops=task.offloadable_mops,
                     local_mops=task.local_part_mops,
                     ship_bytes=task.ship_bytes)


@dataclass(frozen=True)
class Container:
    session_id: str
    direction: str  # code_to_host | result_to_client
    payload_bytes: int
    content: bytes
    digest: str


def pack_container(session_id: str, direction: str, payload_bytes: int,
                   content: bytes) -> Container:
    return Container(session_id=session_id, direction=direction,
                     payload_bytes=payload_bytes, content=content,
                     digest=sha256(content).hexdigest())


def unpack_container(container: Container) -> bytes:
    if sha256(container.content).hexdigest() != container.digest:
        raise DigestMismatchError(
            f"session {container.session_id}: {container.direction} payload corrupted")
    return container.content


def pdu_count(payload_bytes: int, pdu_size: int) -> int:
    """Containers always occupy at least one PDU, even when empty."""
    return max(1, math.ceil(payload_bytes / pdu_size))


class HostLedger:
    """Shareable-capacity accounting at one host; grants are hard partitions."""

    def __init__(self, profile: ComputeProfile, admission_floor_mops: float = 0.0):
        self.profile = profile
        self.admission_floor = admission_floor_mops
        self.grants: dict[str, float] = {}
        self.advertised_mops = profile.shareable_mops

    @property
    def remaining_mops(self) -> float:
        return self.profile.shareable_mops - sum(self.grants.values())

    def admit(self, session_id: str, asked_mops: float):
        """Grant min(asked, remaining) unless below the admission floor."""
        remaining = self.remaining_mops
        if remaining < self.admission_floor or remaining <= 0.0:
            return ("decline", "insufficient")
        granted = min(asked_mops, remaining)
        if granted < self.admission_floor:
            return ("decline", "insufficient")
        self.grants[session_id] = granted
        return ("grant", granted)

    def release(self, session_id: str) -> None:
        self.grants.pop(session_id, None)

    def advertise(self) -> float:
        self.advertised_mops = self.remaining_mops
        return self.advertised_mops


@dataclass
class OffloadSession:
    session_id: str
    task: SliceableTask
    client: str
    host: str
    state: str = IDLE
    granted_mops: float = 0.0
    reason: str = ""
    timestamps: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    estimate: OffloadEstimate | None = None

    def transition(self, new_state: str, now_us: int, reason: str = "") -> None:
        if new_state != FAILED and new_state not in _NEXT.get(self.state, set()):
            raise SimulationError(
                f"session {self.session_id}: illegal transition "
                f"{self.state} -> {new_state}")
        self.state = new_state
        self.reason = reason or self.reason
        self.timestamps[new_state] = now_us
        self.history.append(new_state)


class OffloadManager:
    """Drives every session's client and host state machines.

    All cross-node interaction goes through schedule(delay_us, payload)
    events and the transport hook start_transfer(session, direction,
    payload_bytes), which must call back transfer_complete when the last PDU
    drains. That keeps the manager independent of the radio model while the
    dedicated L2 channel stays visible to the MAC as an ordinary flow.
    """

    def __init__(self, schedule, emit, start_transfer,
                 signaling_latency_us: int = 5000, pdu_bytes: int = 1000,
                 stage_timeout_us: int = 5_000_000, os_overhead_us: int = 0,
                 admission_floor_mops: float = 0.0):
        self._schedule = schedule
        self._emit = emit
        self._start_transfer = start_transfer
        self.signaling_latency_us = signaling_latency_us
        self.pdu_bytes = pdu_bytes
        self.stage_timeout_us = stage_timeout_us
        self.os_overhead_us = os_overhead_us
        self.admission_floor = admission_floor_mops
        self.hosts: dict[str, HostLedger] = {}
        self.clients: dict[str, ComputeProfile] = {}
        self.sessions: dict[str, OffloadSession] = {}
        self._seq = 0

    def add_host(self, profile: ComputeProfile) -> HostLedger:
        ledger = HostLedger(profile, self.admission_floor)
        self.hosts[profile.node] = ledger
        return ledger

    def add_client(self, profile: ComputeProfile) -> None:
        self.clients[profile.node] = profile

    # -- client side ---------------------------------------------------------

    def submit_task(self, task: SliceableTask, now_us: int,
                    link_rate_bps: float) -> OffloadSession | None:
        """Decision point: run locally or open a session toward the host."""
        client = self.clients[task.client]
        ledger = self.hosts.get(task.host)
        advertised = ledger.advertised_mops if ledger else 0.0
        asked = task.asked_mops if task.asked_mops is not None else advertised
        estimate = decide_offload(task, client.total_capacity_mops,
                                  min(asked, advertised) if advertised else 0.0,
                                  2.0 * self.signaling_latency_us, link_rate_bps,
                                  self.os_overhead_us)
        self._emit_task(task, "offload_decision",
                        1 if estimate.decision == "request_offload" else 0, now_us)
        self._emit_task(task, "offload_estimate_us", estimate.offload_us, now_us)
        if estimate.decision == "local":
            self._schedule(int(round(estimate.local_us)),
                           ("local_done", task.task_id, now_us))
            return None
        if any(s.task.task_id == task.task_id and s.state not in (APPLIED, FAILED, DECLINED)
               for s in self.sessions.values()):
            self._emit_task(task, "offload_rejected_duplicate", 1, now_us)
            return None
        self._seq += 1
        session = OffloadSession(session_id=f"s{self._seq}", task=task,
                                 client=task.client, host=task.host)
        session.estimate = estimate
        self.sessions[session.session_id] = session
        session.transition(REQUESTED, now_us)
        self._emit_state(session, now_us)
        self._arm_timeout(session, now_us)
        self._schedule(self.signaling_latency_us,
                       ("deliver_request", session.session_id, float(asked)))
        return session

    # -- host side -----------------------------------------------------------

    def _host_admit(self, session: OffloadSession, asked: float, now_us: int) -> None:
        ledger = self.hosts[session.host]
        verdict = ledger.admit(session.session_id, asked)
        self._schedule(self.signaling_latency_us,
                       ("deliver_reply", session.session_id, verdict))

    # -- event plumbing ------------------------------------------------------

    def handle(self, payload, now_us: int) -> None:
        kind = payload[0]
        if kind == "deliver_request":
            _, sid, asked = payload
            session = self.sessions[sid]
            if session.state == REQUESTED:
                self._host_admit(session, asked, now_us)
        elif kind == "deliver_reply":
            _, sid, verdict = payload
            self._on_reply(self.sessions[sid], verdict, now_us)
        elif kind == "exec_done":
            _, sid, stamp = payload
            session = self.sessions[sid]
            if session.state == EXECUTING and session.timestamps.get(EXECUTING) == stamp:
                self._on_exec_done(session, now_us)
        elif kind == "apply_done":
            _, sid, stamp = payload
            session = self.sessions[sid]
            if session.state == RETURNED and session.timestamps.get(RETURNED) == stamp:
                self._apply_result(session, now_us)
        elif kind == "timeout":
            _, sid, state_at_arming = payload
            session = self.sessions[sid]
            if session.state == state_at_arming:
                self.fail(session, "timeout", now_us)
        elif kind == "local_done":
            _, task_id, submitted = payload
            self._emit(("task", task_id), "local_exec_done_us", now_us - submitted, now_us)
        elif kind == "local_part_done":
            _, sid = payload
            session = self.sessions[sid]
            self._emit_session(session, "local_part_done", 1, now_us)
        else:
            raise SimulationError(f"offload manager got unknown payload {payload!r}")

    def _on_reply(self, session: OffloadSession, verdict, now_us: int) -> None:
        kind, value = verdict
        if session.state != REQUESTED:
            if kind == "grant":
                # Client gave up (timeout/link loss) before the reply landed.
                self.hosts[session.host].release(session.session_id)
            return
        if kind == "decline":
            session.transition(DECLINED, now_us, reason=value)
            self._emit_state(session, now_us)
            self._emit_session(session, "offload_declined", 1, now_us)
            local_us = session.task.total_mops / \
                self.clients[session.client].total_capacity_mops * 1e6
            self._schedule(int(round(local_us)),
                           ("local_done", session.task.task_id, now_us))
            return
        session.granted_mops = value
        session.transition(ACCEPTED, now_us)
        self._emit_state(session, now_us)
        split = slice_task(session.task, session.granted_mops)
        session.transition(SLICED, now_us)
        self._emit_state(session, now_us)
        if split.local_mops > 0:
            local_part_us = split.local_mops / \
                self.clients[session.client].total_capacity_mops * 1e6
            self._schedule(self.os_overhead_us + int(round(local_part_us)),
                           ("local_part_done", session.session_id))
        self._arm_timeout(session, now_us)
        container = pack_container(session.session_id, "code_to_host",
                                   session.task.ship_bytes,
                                   repr(split).encode())
        self._start_transfer(session, container, now_us + self.os_overhead_us)

    def transfer_complete(self, session: OffloadSession, container: Container,
                          now_us: int) -> None:
        """Last PDU of a container drained; advance whichever side was waiting."""
        if session.state not in (SLICED, EXECUTING):
            return
        try:
            unpack_container(container)
        except DigestMismatchError:
            self.fail(session, "digest_mismatch", now_us)
            return
        if container.direction == "code_to_host":
            session.transition(SHIPPED, now_us)
            self._emit_state(session, now_us)
            session.transition(EXECUTING, now_us)
            self._emit_state(session, now_us)
            exec_us = session.task.offloadable_mops / session.granted_mops * 1e6 \
                if session.granted_mops > 0 else 0.0
            self._arm_timeout(session, now_us)
            self._schedule(self.os_overhead_us + int(round(exec_us)),
                           ("exec_done", session.session_id, now_us))
        else:
            session.transition(RETURNED, now_us)
            self._emit_state(session, now_us)
            self._schedule(self.os_overhead_us, ("apply_done", session.session_id, now_us))

    def _on_exec_done(self, session: OffloadSession, now_us: int) -> None:
        container = pack_container(session.session_id, "result_to_client",
                                   session.task.result_bytes,
                                   f"result:{session.session_id}".encode())
        self._arm_timeout(session, now_us)
        self._start_transfer(session, container, now_us + self.os_overhead_us)

    def _apply_result(self, session: OffloadSession, now_us: int) -> None:
        session.transition(APPLIED, now_us)
        self._emit_state(session, now_us)
        self.hosts[session.host].release(session.session_id)
        total = now_us - session.timestamps[REQUESTED]
        client = self.clients[session.client]
        self._emit_session(session, "offload_total_latency_us", total, now_us)
        self._emit_session(session, "local_baseline_us",
                           session.task.total_mops / client.total_capacity_mops * 1e6,
                           now_us)
        self._emit_session(session, "offload_success", 1, now_us)

    def fail(self, session: OffloadSession, reason: str, now_us: int) -> None:
        if session.state in (APPLIED, FAILED, DECLINED):
            return
        session.transition(FAILED, now_us, reason=reason)
        self._emit_state(session, now_us)
        self.hosts[session.host].release(session.session_id)
        self._emit_session(session, "offload_failed", 1, now_us)

    def fail_link(self, client: str, host: str, now_us: int) -> None:
        """Link loss kills every in-flight session between the two nodes."""
        for sid in sorted(self.sessions):
            s = self.sessions[sid]
            if s.client == client and s.host == host:
                self.fail(s, "link_loss", now_us)

    def _arm_timeout(self, session: OffloadSession, now_us: int) -> None:
        self._schedule(self.stage_timeout_us,
                       ("timeout", session.session_id, session.state))

    def _emit_state(self, session: OffloadSession, time_us: int) -> None:
        self._emit(("session", session.session_id), "offload_state",
                   STATE_CODES[session.state], time_us)

    def _emit_session(self, session: OffloadSession, metric: str, value, time_us: int) -> None:
        self._emit(("session", session.session_id), metric, value, time_us)

    def _emit_task(self, task: SliceableTask, metric: str, value, time_us: int) -> None:
        self._emit(("task", task.task_id), metric, value, time_us)
