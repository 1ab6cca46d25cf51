"""Two-layer MAC: Level-2 allocates cells among slices, Level-1 among devices.

Level-2 runs once per subframe over either static carved subsets (strict
isolation) or a shared segment pool split by weighted max-min. Level-1 then
schedules each slice independently; its output depends only on that slice's
grant, flows and state, which is what keeps slices composable.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .errors import UnknownSliceError

CELL_BYTES_15KHZ = 100


def cell_bytes(subcarrier_spacing_khz: float) -> int:
    """Fixed per-cell payload, scaled with subcarrier spacing (no link adaptation)."""
    return int(round(CELL_BYTES_15KHZ * subcarrier_spacing_khz / 15.0))


@dataclass(frozen=True)
class QosProfile:
    latency_budget_ms: float = 100.0
    min_rate_kbps: float = 0.0
    priority: int = 0


@dataclass(slots=True)
class Packet:
    arrival_us: int
    size_bytes: int
    remaining: int


@dataclass
class TrafficFlow:
    """Byte-counted FIFO bound to exactly one (device, slice)."""

    flow_id: str
    device_id: str
    slice: int
    qos: QosProfile = field(default_factory=QosProfile)
    direction: str = "uplink"
    queue: deque = field(default_factory=deque)
    queued_bytes: int = 0

    def push(self, arrival_us: int, size_bytes: int) -> None:
        self.queue.append(Packet(arrival_us, size_bytes, size_bytes))
        self.queued_bytes += size_bytes

    def head_wait_us(self, now_us: int) -> int:
        return now_us - self.queue[0].arrival_us if self.queue else 0


@dataclass(frozen=True)
class Level2Allocation:
    subframe: int
    grants: dict  # snetid -> tuple of cells
    unsatisfied: dict  # snetid -> cells short of demand

    def grant_counts(self) -> dict:
        return {s: len(c) for s, c in self.grants.items()}


@dataclass(frozen=True)
class Level1Schedule:
    slice: int
    subframe: int
    assignments: dict  # device id -> tuple of cells
    flow_cells: dict  # flow id -> cell count (serving detail behind assignments)


def weighted_max_min(capacity: float, demands: dict, weights: dict) -> dict:
    """Real-valued weighted max-min share of `capacity`, capped at demand."""
    alloc = {s: 0.0 for s in demands}
    active = {s for s, d in demands.items() if d > 0}
    cap = float(capacity)
    while active and cap > 1e-9:
        wsum = sum(weights.get(s, 1.0) for s in active)
        theta = cap / wsum
        tight = [s for s in active
                 if demands[s] - alloc[s] <= theta * weights.get(s, 1.0) + 1e-12]
        if not tight:
            for s in active:
                alloc[s] += theta * weights.get(s, 1.0)
            cap = 0.0
            break
        for s in tight:
            give = demands[s] - alloc[s]
            alloc[s] += give
            cap -= give
            active.discard(s)
    return alloc

def integer_water_fill(capacity: int, demands: dict, weights: dict) -> dict:
    """Integer cells within one cell of the real weighted max-min solution.

    Floors the real solution, then hands out remaining cells by largest
    fractional remainder (ties broken by lowest slice id).
    """
    real = weighted_max_min(capacity, demands, weights)
    counts = {s: min(int(math.floor(a + 1e-9)), demands[s]) for s, a in real.items()}
    spare = min(capacity, sum(demands.values())) - sum(counts.values())
    if spare > 0:
        order = sorted(real, key=lambda s: (-(real[s] - counts[s]), s))
        for s in order:
            if spare == 0:
                break
            if counts[s] < demands[s]:
                counts[s] += 1
                spare -= 1
    return counts


def l2_allocate(subframe: int, demands: dict, weights: dict, subsets: dict,
                shared_pools=None, phase: int | None = None) -> Level2Allocation:
    """Inter-slice allocation for one subframe.

    Static slices draw from their own carved subset only; each shared pool is
    split by weighted max-min among its members. Demands are in cells.
    """
    if phase is None:
        phase = subframe
    shared_pools = shared_pools or []
    shared_members = set()
    for _, members in shared_pools:
        shared_members.update(members)
    grants: dict = {}
    unsatisfied: dict = {}
    for s in sorted(demands):
        if demands[s] > 0 and s not in subsets and s not in shared_members:
            raise UnknownSliceError(f"slice {s} demands cells but owns no subset")
    for s in sorted(demands):
        if s not in subsets or demands[s] <= 0:
            continue
        avail = subsets[s].cells_at_phase(phase)
        take = min(demands[s], len(avail))
        if take:
            grants[s] = avail[:take]
        if demands[s] > take:
            unsatisfied[s] = demands[s] - take
    for pool_cells, members in shared_pools:
        pool_demands = {s: demands.get(s, 0) for s in members}
        counts = integer_water_fill(len(pool_cells), pool_demands, weights)
        cursor = 0
        ordered = sorted(pool_cells)
        for s in sorted(members):
            n = counts.get(s, 0)
            if n:
                grants[s] = tuple(ordered[cursor:cursor + n])
                cursor += n
            short = pool_demands.get(s, 0) - n
            if short > 0:
                unsatisfied[s] = unsatisfied.get(s, 0) + short
    return Level2Allocation(subframe=subframe, grants=grants, unsatisfied=unsatisfied)


class Level1Scheduler:
    """Intra-slice scheduler; state never leaks across slices.

    round_robin keeps a rotating cursor over flow ids. proportional_fair picks,
    cell by cell, the backlogged flow maximizing cell_rate / averaged_rate,
    where the average already counts bytes assigned earlier in this subframe.
    """

    def __init__(self, slice_id: int, policy: str = "round_robin",
                 pf_window: int = 100, subframe_us: int = 1000):
        if policy not in ("round_robin", "proportional_fair"):
            raise UnknownSliceError(f"slice {slice_id}: unknown policy {policy!r}")
        self.slice = slice_id
        self.policy = policy
        self.alpha = 1.0 / pf_window
        self.subframe_ms = subframe_us / 1000.0
        self.rr_cursor: str | None = None
        self.avg_rate_kbps: dict[str, float] = {}

    def schedule(self, subframe: int, grant, flows, bytes_per_cell: int) -> Level1Schedule:
        backlogged = sorted((f for f in flows if f.queued_bytes > 0), key=lambda f: f.flow_id)
        cells = sorted(grant)
        flow_cells: dict[str, int] = {}
        if backlogged and cells:
            need = {f.flow_id: math.ceil(f.queued_bytes / bytes_per_cell) for f in backlogged}
            if self.policy == "round_robin":
                flow_cells = self._round_robin(backlogged, need, len(cells))
            else:
                flow_cells = self._proportional_fair(backlogged, need, len(cells), bytes_per_cell)
        assignments: dict[str, list] = {}
        cursor = 0
        flow_by_id = {f.flow_id: f for f in backlogged}
        for fid in sorted(flow_cells):
            n = flow_cells[fid]
            dev = flow_by_id[fid].device_id
            assignments.setdefault(dev, []).extend(cells[cursor:cursor + n])
            cursor += n
        return Level1Schedule(
            slice=self.slice, subframe=subframe,
            assignments={d: tuple(c) for d, c in sorted(assignments.items())},
            flow_cells=flow_cells,
        )

    def _round_robin(self, backlogged, need, n_cells: int) -> dict:
        ids = [f.flow_id for f in backlogged]
        start = 0
        if self.rr_cursor is not None:
            start = next((i for i, fid in enumerate(ids) if fid > self.rr_cursor), 0)
        given = {fid: 0 for fid in ids}
        i = start
        remaining = n_cells
        while remaining > 0 and any(given[f] < need[f] for f in ids):
            fid = ids[i % len(ids)]
            if given[fid] < need[fid]:
                given[fid] += 1
                remaining -= 1
                self.rr_cursor = fid
            i += 1
        return {fid: n for fid, n in given.items() if n}

    def _proportional_fair(self, backlogged, need, n_cells: int,
                           bytes_per_cell: int) -> dict:
        cell_rate = bytes_per_cell * 8.0 / self.subframe_ms  # kbps
        decay = {}
        assigned_bytes = {}
        for f in backlogged:
            decay[f.flow_id] = (1.0 - self.alpha) * self.avg_rate_kbps.get(f.flow_id, 0.0)
            assigned_bytes[f.flow_id] = 0
        given = {f.flow_id: 0 for f in backlogged}
        for _ in range(n_cells):
            best, best_metric = None, -1.0
            for f in backlogged:
                fid = f.flow_id
                if given[fid] >= need[fid]:
                    continue
                tentative = decay[fid] + self.alpha * (
                    assigned_bytes[fid] * 8.0 / self.subframe_ms)
                metric = cell_rate / max(tentative, 1e-9)
                if metric > best_metric + 1e-12:
                    best, best_metric = f, metric
            if best is None:
                break
            fid = best.flow_id
            given[fid] += 1
            assigned_bytes[fid] += min(bytes_per_cell,
                                       best.queued_bytes - assigned_bytes[fid])
        return {fid: n for fid, n in given.items() if n}

    def update_averages(self, served_bytes: dict, all_flow_ids) -> None:
        """End-of-subframe exponential averaging over every live flow."""
        for fid in all_flow_ids:
            rate = served_bytes.get(fid, 0) * 8.0 / self.subframe_ms
            self.avg_rate_kbps[fid] = (
                (1.0 - self.alpha) * self.avg_rate_kbps.get(fid, 0.0) + self.alpha * rate)

    def forget(self, flow_id: str) -> None:
        self.avg_rate_kbps.pop(flow_id, None)


@dataclass
class ServeResult:
    served_bytes: dict  # flow id -> bytes drained
    completed: list  # (flow, packet) fully drained this subframe
    idle_cells: int


def serve(schedule: Level1Schedule, flows_by_id: dict, bytes_per_cell: int,
          drain_time_us: int) -> ServeResult:
    """Drain queues against the schedule; packets finish at the subframe edge."""
    served: dict[str, int] = {}
    completed: list = []
    idle = 0
    for fid in sorted(schedule.flow_cells):
        flow = flows_by_id[fid]
        budget = schedule.flow_cells[fid] * bytes_per_cell
        drained = 0
        while budget > 0 and flow.queue:
            pkt = flow.queue[0]
            take = min(budget, pkt.remaining)
            pkt.remaining -= take
            budget -= take
            drained += take
            if pkt.remaining == 0:
                flow.queue.popleft()
                completed.append((flow, pkt))
        # Only fully-unused cells count as idle; a partially filled last cell does not.
        idle += budget // bytes_per_cell
        flow.queued_bytes -= drained
        if drained:
            served[fid] = drained
    return ServeResult(served_bytes=served, completed=completed, idle_cells=idle)
