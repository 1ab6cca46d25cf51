"""Slice-specific RAN behavior: per-AP lifecycle, triggers, admission, mobility.

Every (slice, access point) pair runs its own on/off state machine; traffic
is served only while Active. Admission, association and load balancing are
all slice-scoped rather than cell-scoped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CapacityError, SimulationError

INACTIVE, ACTIVATING, ACTIVE, DEACTIVATING = "Inactive", "Activating", "Active", "Deactivating"
STATE_CODES = {INACTIVE: 0, ACTIVATING: 1, ACTIVE: 2, DEACTIVATING: 3}

TRIGGERS = ("load_threshold", "active_device_threshold", "service_continuity",
            "qos_requirement")

# (function name, mode); idle-mode functions are shareable across slices.
CONTROL_FUNCTIONS = (
    ("paging", "idle"),
    ("cell_reselection", "idle"),
    ("tracking_area_update", "idle"),
    ("handover", "connected"),
    ("dedicated_bearer_setup", "connected"),
)


@dataclass(frozen=True)
class CuPlaneConfig:
    option: int
    function_placement: dict  # function name -> "common" | "slice_specific"


def configure_cu_plane(option: int) -> CuPlaneConfig:
    """Options 1-3: common C-plane, fully dedicated, or idle/connected split."""
    if option == 1:
        placement = {name: "common" for name, _ in CONTROL_FUNCTIONS}
    elif option == 2:
        placement = {name: "slice_specific" for name, _ in CONTROL_FUNCTIONS}
    elif option == 3:
        placement = {name: ("common" if mode == "idle" else "slice_specific")
                     for name, mode in CONTROL_FUNCTIONS}
    else:
        raise SimulationError(f"C/U-plane option must be 1, 2 or 3, got {option}")
    return CuPlaneConfig(option=option, function_placement=placement)


def cu_plane_overhead(config: CuPlaneConfig, active_slices: int,
                      per_function_cost: float = 1.0) -> float:
    """Control-plane cost of keeping per-slice functions alive at one AP."""
    dedicated = sum(1 for p in config.function_placement.values() if p == "slice_specific")
    return dedicated * per_function_cost * active_slices


@dataclass(frozen=True)
class Thresholds:
    load_on: float = 0.8
    devices_on: int = 1
    admission: float = 0.95
    balance: float = 0.7
    off_load: float = 0.1
    off_hold_ms: float = 1000.0
    fallback_link: float = -100.0
    min_devices_to_activate: int = 1


@dataclass(frozen=True)
class TriggerObservations:
    load_ratio: float = 0.0
    active_devices: int = 0
    incoming_handover: bool = False
    qos_pressure: bool = False


def evaluate_on_triggers(obs: TriggerObservations, th: Thresholds) -> set:
    """Which of the four slice-on triggers currently fire."""
    fired = set()
    if obs.load_ratio > th.load_on:
        fired.add("load_threshold")
    if obs.active_devices > th.devices_on:
        fired.add("active_device_threshold")
    if obs.incoming_handover:
        fired.add("service_continuity")
    if obs.qos_pressure:
        fired.add("qos_requirement")
    return fired


@dataclass(frozen=True)
class AdmissionDecision:
    device: str
    slice: int
    ap: str
    verdict: str  # accept | accept_with_activation | decline
    reason: str = ""


def admission_decision(device: str, slice_id: int, ap: str, state: str,
                       load_ratio: float, th: Thresholds, projected_devices: int = 1,
                       revenue_units: float = 1.0,
                       activation_cost_units: float = 0.0) -> AdmissionDecision:
    """Availability- and load-based verdict; inactive slices weigh benefit vs cost."""
    if state == ACTIVE or state == ACTIVATING:
        if load_ratio < th.admission:
            return AdmissionDecision(device, slice_id, ap, "accept")
        return AdmissionDecision(device, slice_id, ap, "decline", "overload")
    if state == INACTIVE:
        if projected_devices >= th.min_devices_to_activate and revenue_units >= activation_cost_units:
            return AdmissionDecision(device, slice_id, ap, "accept_with_activation")
        return AdmissionDecision(device, slice_id, ap, "decline", "cost")
    return AdmissionDecision(device, slice_id, ap, "decline", "deactivating")


def associate(device: str, slice_id: int, candidates, eligible_classes,
              fallback_link: float):
    """Pick the serving AP for an access attempt.

    candidates: iterable of (ap id, ap class, lifecycle state, link quality).
    APs already running the slice win, ranked by link; otherwise the best
    eligible AP is chosen only if its link clears the fallback threshold,
    which starts the activation path there.
    """
    eligible = [c for c in candidates if c[1] in eligible_classes]
    running = [c for c in eligible if c[2] == ACTIVE]
    pool = running if running else [c for c in eligible if c[3] >= fallback_link]
    if not pool:
        return None
    return sorted(pool, key=lambda c: (-c[3], c[0]))[0][0]


@dataclass
class ApSliceLoad:
    """Load view of one slice at one AP, used by the balancer."""

    ap: str
    active: bool
    capacity: int
    devices: list  # (device id, links: {ap id -> link quality})

    @property
    def load(self) -> float:
        return len(self.devices) / self.capacity if self.capacity else 1.0


def load_balance(slice_id: int, views: list, balance_threshold: float,
                 acceptable_link: float) -> list:
    """Greedy per-slice rebalancing; never touches devices of other slices.

    Boundary devices (weakest link to their current AP) move first, one at a
    time, from each overloaded AP to the least-loaded Active AP they can reach.
    """
    moves = []
    by_ap = {v.ap: v for v in views}
    for ap in sorted(by_ap):
        src = by_ap[ap]
        if not src.active:
            continue
        while src.load > balance_threshold:
            targets = sorted(
                (v for v in views if v.ap != ap and v.active and v.load < src.load),
                key=lambda v: (v.load, v.ap))
            moved = False
            for dev, links in sorted(src.devices, key=lambda d: (d[1].get(ap, 0.0), d[0])):
                for tgt in targets:
                    if links.get(tgt.ap, float("-inf")) >= acceptable_link:
                        src.devices.remove((dev, links))
                        tgt.devices.append((dev, links))
                        moves.append((dev, ap, tgt.ap))
                        moved = True
                        break
                if moved:
                    break
            if not moved:
                break
    return moves


@dataclass
class SliceRanConfig:
    """Per-slice RAN parameters an AP needs to run the lifecycle."""

    snetid: int
    subset_request: dict = field(default_factory=dict)
    activation_latency_us: int = 50_000
    deactivation_latency_us: int = 10_000
    thresholds: Thresholds = field(default_factory=Thresholds)
    eligible_ap_classes: tuple = ("macro", "small")
    revenue_units: float = 1.0
    activation_cost_units: float = 0.0
    dedicated_rach: bool = True
    cu_plane_option: int = 3


class LifecycleMachine:
    """On/off state machine for the slices of one AP.

    Talks to the outside world through three callables so it stays testable:
    schedule(delay_us, payload) posts a completion event back to itself,
    emit(slice, metric, value) records metrics, and the hooks fire when a
    slice finishes turning on or off.
    """

    def __init__(self, ap: str, grid, configs: dict, schedule, emit,
                 on_active=None, on_inactive=None):
        self.ap = ap
        self.grid = grid
        self.configs = configs
        self._schedule = schedule
        self._emit = emit
        self._on_active = on_active or (lambda s: None)
        self._on_inactive = on_inactive or (lambda s: None)
        self.states: dict[int, str] = {s: INACTIVE for s in configs}
        self._generation: dict[int, int] = {s: 0 for s in configs}

    def state(self, slice_id: int) -> str:
        return self.states[slice_id]

    def active_slices(self) -> list:
        return sorted(s for s, st in self.states.items() if st == ACTIVE)

    def _set_state(self, slice_id: int, state: str) -> None:
        self.states[slice_id] = state
        self._emit(slice_id, "slice_state", STATE_CODES[state])

    def slice_on(self, slice_id: int, initiator: str, cause: str) -> bool:
        """Start activation; returns False when the carve fails (stays Inactive)."""
        if self.states[slice_id] != INACTIVE:
            raise SimulationError(
                f"slice {slice_id}@{self.ap}: slice_on from {self.states[slice_id]}")
        cfg = self.configs[slice_id]
        try:
            if cfg.subset_request:
                self.grid.carve_subset(slice_id, cfg.subset_request)
        except CapacityError:
            self._emit(slice_id, "activation_declined", 1)
            return False
        self._set_state(slice_id, ACTIVATING)
        self._emit(slice_id, "slice_on_initiator", 0 if initiator == "device" else 1)
        gen = self._generation[slice_id]
        self._schedule(cfg.activation_latency_us, ("activation_done", slice_id, gen))
        return True

    def activation_done(self, slice_id: int, generation: int) -> None:
        if self._generation[slice_id] != generation or self.states[slice_id] != ACTIVATING:
            return
        self._set_state(slice_id, ACTIVE)
        self._on_active(slice_id)

    def slice_off(self, slice_id: int) -> None:
        if self.states[slice_id] != ACTIVE:
            raise SimulationError(
                f"slice {slice_id}@{self.ap}: slice_off from {self.states[slice_id]}")
        cfg = self.configs[slice_id]
        self._set_state(slice_id, DEACTIVATING)
        self._generation[slice_id] += 1
        gen = self._generation[slice_id]
        self._schedule(cfg.deactivation_latency_us, ("deactivation_done", slice_id, gen))

    def deactivation_done(self, slice_id: int, generation: int) -> None:
        if self._generation[slice_id] != generation or self.states[slice_id] != DEACTIVATING:
            return
        if slice_id in self.grid.subsets:
            self.grid.release_subset(slice_id)
        self._set_state(slice_id, INACTIVE)
        self._generation[slice_id] += 1
        self._on_inactive(slice_id)

    def handle(self, payload) -> None:
        kind = payload[0]
        if kind == "activation_done":
            self.activation_done(payload[1], payload[2])
        elif kind == "deactivation_done":
            self.deactivation_done(payload[1], payload[2])
        else:
            raise SimulationError(f"lifecycle machine got unknown payload {payload!r}")
