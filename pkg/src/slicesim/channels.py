"""Common and slice-specific physical channels: DL/UL control and random access.

Slices are addressed on common channels by their sNetID. Each random access
channel (common or per-slice) runs slotted contention with orthogonal
preambles on its own RNG stream, so load on one slice's channel can never
perturb another slice's outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .errors import BoundsError

COMMON = "common"  # pseudo slice id for the always-on shared channels


def check_snetid(value: int) -> int:
    if not (0 <= int(value) < 1 << 16):
        raise BoundsError(f"sNetID {value} outside 16-bit range")
    return int(value)


@dataclass(frozen=True)
class SystemInfo:
    """Broadcast content: which slices are active here and how to reach RACH."""

    ap: str
    active_slices: tuple[int, ...]
    slice_rach: dict
    common_rach: "RachConfig"


def broadcast_system_info(ap: str, lifecycles, rach_configs, common_config) -> SystemInfo:
    """System information lists exactly the slices in Active state at this AP."""
    active = tuple(sorted(s for s, state in lifecycles.items() if state == "Active"))
    slice_rach = {s: rach_configs[s] for s in active if s in rach_configs}
    return SystemInfo(ap=ap, active_slices=active, slice_rach=slice_rach,
                      common_rach=common_config)


@dataclass(frozen=True)
class CommonDci:
    """Per-subframe inter-slice grant announcement, one entry per scheduled slice."""

    subframe: int
    entries: tuple  # ((snetid, granted cells), ...) ordered by sNetID


def emit_common_dci(subframe: int, grants: dict) -> CommonDci:
    entries = tuple((s, tuple(grants[s])) for s in sorted(grants) if grants[s])
    return CommonDci(subframe=subframe, entries=entries)


def decode_common_dci(dci: CommonDci, memberships) -> dict:
    """A device reads only the entries addressed to slices it belongs to."""
    own = set(memberships)
    return {s: cells for s, cells in dci.entries if s in own}


@dataclass(frozen=True)
class SliceDci:
    """Intra-slice scheduling info, carried inside the slice's own resources."""

    slice: int
    subframe: int
    entries: tuple  # ((device id, cells), ...)


@dataclass(frozen=True)
class UlControlMessage:
    device: str
    sections: tuple  # ((snetid, report), ...) ordered by sNetID


def aggregate_ul_control(device: str, reports: dict) -> UlControlMessage | None:
    """Multi-slice devices send one common UL message with a section per slice."""
    pending = {s: r for s, r in reports.items() if r is not None}
    if not pending:
        return None
    return UlControlMessage(device=device,
                            sections=tuple((s, pending[s]) for s in sorted(pending)))


def demux_ul_control(message: UlControlMessage) -> dict:
    return dict(message.sections)


@dataclass(frozen=True)
class RachConfig:
    slice: object = COMMON
    preamble_pool: int = 16
    opportunity_period: int = 10  # subframes
    max_attempts: int = 8
    backoff_window: int = 20  # opportunities

    def __post_init__(self):
        if self.preamble_pool < 1 or self.max_attempts < 1 or self.backoff_window < 1:
            raise BoundsError(f"invalid RACH config for slice {self.slice}")


@dataclass(frozen=True)
class RachOutcome:
    device: str
    slice: object
    attempts_used: int
    success: bool
    access_delay_us: int


@dataclass(slots=True)
class _Contender:
    arrival_us: int
    attempts: int = 0
    next_opportunity: int = 0


class RachProcess:
    """Slotted preamble contention for one (AP, slice-or-common) channel.

    Opportunities happen at integer multiples of the configured period; the
    opportunity at time T resolves the contenders enrolled strictly before T.
    A device whose preamble nobody else picked succeeds with access delay
    T - arrival; colliders back off a uniform number of opportunities and
    retry until max_attempts.
    """

    def __init__(self, config: RachConfig, rng: np.random.Generator, subframe_us: int = 1000):
        self.config = config
        self.rng = rng
        self.period_us = config.opportunity_period * subframe_us
        self.waiting: dict[str, _Contender] = {}

    def enroll(self, device: str, now_us: int) -> None:
        k_next = now_us // self.period_us + 1
        self.waiting[device] = _Contender(arrival_us=now_us, next_opportunity=k_next)

    def opportunity_index(self, time_us: int) -> int:
        return time_us // self.period_us

    def contend(self, opportunity_time_us: int) -> list[RachOutcome]:
        """Run the opportunity at the given time; returns resolved outcomes only."""
        k = self.opportunity_index(opportunity_time_us)
        due = sorted(d for d, c in self.waiting.items() if c.next_opportunity <= k)
        if not due:
            return []
        choices = self.rng.integers(0, self.config.preamble_pool, size=len(due))
        won = kernels.contention_round(choices, self.config.preamble_pool)
        outcomes: list[RachOutcome] = []
        collided: list[str] = []
        for device, ok in zip(due, won):
            c = self.waiting[device]
            c.attempts += 1
            delay = opportunity_time_us - c.arrival_us
            if ok:
                outcomes.append(RachOutcome(device, self.config.slice, c.attempts, True, delay))
                del self.waiting[device]
            elif c.attempts >= self.config.max_attempts:
                outcomes.append(RachOutcome(device, self.config.slice, c.attempts, False, delay))
                del self.waiting[device]
            else:
                collided.append(device)
        if collided:
            backoffs = self.rng.integers(1, self.config.backoff_window + 1, size=len(collided))
            for device, b in zip(collided, backoffs):
                self.waiting[device].next_opportunity = k + int(b)
        return outcomes


def rach_contend(config: RachConfig, contenders, rng, subframe_us: int = 1000,
                 max_opportunities: int = 10_000) -> list[RachOutcome]:
    """Enroll all contenders at t=0 and run opportunities until everyone resolves."""
    proc = RachProcess(config, rng, subframe_us)
    for device in sorted(contenders):
        proc.enroll(device, 0)
    outcomes: list[RachOutcome] = []
    k = 1
    while proc.waiting and k <= max_opportunities:
        outcomes.extend(proc.contend(k * proc.period_us))
        k += 1
    return outcomes


def single_attempt_success_rate(n_contenders: int, pool: int, opportunities: int,
                                rng: np.random.Generator, chunk: int = 20_000) -> float:
    """Monte-Carlo per-device success probability for one-shot contention.

    Closed form for comparison: (1 - 1/pool) ** (n_contenders - 1).
    """
    successes = 0
    remaining = opportunities
    while remaining > 0:
        rows = min(chunk, remaining)
        choices = rng.integers(0, pool, size=(rows, n_contenders))
        successes += kernels.batch_success_count(choices, pool)
        remaining -= rows
    return successes / (opportunities * n_contenders)


def route_access(slice_id: int, slice_active: bool, has_dedicated_rach: bool) -> str:
    """Active slices with a dedicated RACH take it; everything else goes common.

    Requests on the common channel for inactive slices double as slice-on
    triggers, resolved by admission control after contention succeeds.
    """
    if slice_active and has_dedicated_rach:
        return "slice"
    return COMMON
