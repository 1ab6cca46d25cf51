"""Scenario files: schema, defaults, loading, and cross-reference validation.

A scenario is one YAML document with nested sections (see docs/scenario.md
and the bundled corpus under slicesim/scenarios/). Validation runs before
any event is scheduled and reports every problem it can find, with the
offending path, instead of stopping at the first.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import grid as gridmod
from .channels import RachConfig, check_snetid
from .cn import CnSlice, PairingMap, VirtualFunction, validate_pairing
from .errors import ScenarioError, SliceSimError
from .mac import QosProfile
from .ran import Thresholds


@dataclass
class SegmentSpec:
    id: str
    numerology: int
    blocks: tuple
    subframes: object = "all"  # "all", "odd", "even", or explicit list
    mode: str = "static"  # static | shared

    def phases(self, period: int) -> frozenset:
        if self.subframes == "all":
            return frozenset(range(period))
        if self.subframes == "odd":
            return frozenset(range(1, period, 2))
        if self.subframes == "even":
            return frozenset(range(0, period, 2))
        return frozenset(int(p) for p in self.subframes)


@dataclass
class SliceSpec:
    snetid: int
    name: str
    kind: str = "vertical"  # vertical | horizontal
    service: str = ""
    segment: str = ""
    l2_weight: float = 1.0
    l1_policy: str = "round_robin"
    subset_cells: int = 0
    qos: QosProfile = field(default_factory=QosProfile)
    rach: RachConfig | None = None
    thresholds: Thresholds = field(default_factory=Thresholds)
    activation_latency_ms: float = 50.0
    deactivation_latency_ms: float = 10.0
    eligible_ap_classes: tuple = ("macro", "small", "portable")
    revenue_units: float = 1.0
    activation_cost_units: float = 0.0
    cu_plane_option: int = 3
    initial_active: object = True  # bool or list of AP ids
    auto_expand: bool = False  # let network-side triggers activate more APs


@dataclass
class ApSpec:
    id: str
    ap_class: str = "macro"
    slice_device_capacity: int = 1000


@dataclass
class DeviceSpec:
    id: str
    memberships: tuple = ()
    links: dict = field(default_factory=dict)
    connect: tuple = ()  # ((ap, slice), ...) preconnected at t=0
    compute_mops: float = 0.0
    reserved_local: float = 0.0


@dataclass
class FlowSpec:
    flow: str
    device: str
    slice: int
    kind: str = "periodic"  # periodic | poisson
    period_ms: float = 1.0
    rate_per_s: float = 0.0
    bytes: int = 100
    start_ms: float = 0.0
    end_ms: float | None = None
    direction: str = "uplink"


@dataclass
class AccessWorkloadSpec:
    slice: int
    count: int
    prefix: str = "u"
    start_ms: float = 0.0
    stagger_ms: float = 0.0
    ap: str | None = None
    link: float = -70.0
    flow: dict | None = None  # template applied per device on connect


@dataclass
class TaskSpec:
    id: str
    client: str
    host: str
    total_mops: float
    fraction: float = 1.0
    ship_bytes: int = 0
    result_bytes: int = 0
    at_ms: float = 0.0
    asked_mops: float | None = None
    deadline_ms: float | None = None


@dataclass
class OffloadSpec:
    signaling_latency_ms: float = 5.0
    pdu_bytes: int = 1000
    advert_period_ms: float = 100.0
    stage_timeout_ms: float = 5000.0
    os_overhead_ms: float = 0.0
    admission_floor_mops: float = 0.0
    tasks: list = field(default_factory=list)


@dataclass
class EdgeSplitSpec:
    local_fraction: float = 0.99
    device_prefix: str = "w"
    device_count: int = 8
    ap: str = ""
    horizontal_slice: int = 0
    vertical_slice: int = 0
    packet_bytes: int = 1000
    period_ms: float = 10.0
    start_ms: float = 0.0
    end_ms: float | None = None


@dataclass
class RanSettings:
    per_function_cost: float = 1.0
    trigger_eval_period_ms: float = 100.0
    off_check_period_ms: float = 100.0
    lb_period_ms: float = 0.0  # 0 disables the balancer
    acceptable_link: float = -90.0


@dataclass
class Scenario:
    name: str
    duration_ms: float
    master_seed: int
    subframe_us: int = 1000
    numerologies: dict = field(default_factory=gridmod.default_numerologies)
    grid_total_blocks: int = 100
    grid_period: int = 10
    segments: list = field(default_factory=list)
    slices: list = field(default_factory=list)
    aps: list = field(default_factory=list)
    devices: list = field(default_factory=list)
    traffic: list = field(default_factory=list)
    access_workloads: list = field(default_factory=list)
    handovers: list = field(default_factory=list)  # (at_ms, device, to_ap)
    link_failures: list = field(default_factory=list)  # (at_ms, client, host)
    cn_functions: list = field(default_factory=list)
    cn_slices: list = field(default_factory=list)
    pairing: PairingMap = field(default_factory=lambda: PairingMap({}, {}))
    offload: OffloadSpec = field(default_factory=OffloadSpec)
    edge_split: EdgeSplitSpec | None = None
    ran: RanSettings = field(default_factory=RanSettings)
    metrics_window_ms: float = 100.0
    audit: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    def slice_by_id(self, snetid: int) -> SliceSpec:
        for s in self.slices:
            if s.snetid == snetid:
                return s
        raise ScenarioError(f"unknown slice {snetid}")

    def build_grid(self) -> gridmod.ResourceGrid:
        segs = [
            gridmod.ResourceSegment(
                id=s.id, numerology_id=s.numerology,
                block_range=(int(s.blocks[0]), int(s.blocks[1])),
                subframes=s.phases(self.grid_period))
            for s in self.segments
        ]
        return gridmod.partition_grid(self.grid_total_blocks, self.grid_period, segs)


def _get(raw: dict, key: str, default=None):
    value = raw.get(key, default)
    return default if value is None else value


def _load_numerologies(raw, errors) -> dict:
    if raw in (None, "default"):
        return gridmod.default_numerologies()
    catalog = {}
    for i, item in enumerate(raw):
        try:
            nid = int(item["id"])
            symbols = int(item["symbols_per_subframe"])
            subframe = int(_get(item, "subframe_us", 1000))
            catalog[nid] = gridmod.Numerology(
                id=nid,
                subcarrier_spacing_khz=float(item["scs_khz"]),
                symbol_duration_us=float(_get(item, "symbol_duration_us",
                                              subframe / symbols)),
                symbols_per_subframe=symbols,
                subframe_length_us=subframe,
                intended_requirement=_get(item, "requirement", "high_throughput"),
            )
        except (KeyError, ValueError, SliceSimError) as exc:
            errors.append(f"numerologies[{i}]: {exc}")
    try:
        gridmod.validate_catalog(catalog)
    except SliceSimError as exc:
        errors.append(f"numerologies: {exc}")
    return catalog


def load_scenario(source) -> Scenario:
    """Parse and fully validate a scenario; raises ScenarioError with all
    diagnostics on any problem."""
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        with open(source) as fh:
            raw = yaml.safe_load(fh)
    else:
        raw = yaml.safe_load(str(source))
    if not isinstance(raw, dict):
        raise ScenarioError("scenario file is not a mapping")
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> Scenario:
    errors: list[str] = []
    sc = Scenario(
        name=str(_get(raw, "name", "unnamed")),
        duration_ms=float(_get(raw, "duration_ms", 1000)),
        master_seed=int(_get(raw, "master_seed", 0)),
        subframe_us=int(_get(raw, "subframe_us", 1000)),
        raw=copy.deepcopy(raw),
    )
    if sc.duration_ms < 0:
        errors.append("duration_ms: must be >= 0")
    sc.numerologies = _load_numerologies(raw.get("numerologies"), errors)

    g = _get(raw, "grid", {})
    sc.grid_total_blocks = int(_get(g, "total_blocks", 100))
    sc.grid_period = int(_get(g, "period", 10))
    for i, seg in enumerate(_get(g, "segments", [])):
        try:
            spec = SegmentSpec(
                id=str(seg["id"]), numerology=int(_get(seg, "numerology", 0)),
                blocks=tuple(seg["blocks"]), subframes=_get(seg, "subframes", "all"),
                mode=_get(seg, "mode", "static"))
            if spec.mode not in ("static", "shared"):
                errors.append(f"grid.segments[{i}].mode: {spec.mode!r}")
            if spec.numerology not in sc.numerologies:
                errors.append(f"grid.segments[{i}]: unknown numerology {spec.numerology}")
            sc.segments.append(spec)
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"grid.segments[{i}]: {exc}")
    try:
        sc.build_grid()
    except SliceSimError as exc:
        errors.append(f"grid: {exc}")

    seg_ids = {s.id for s in sc.segments}
    seen_snetids = set()
    for i, s in enumerate(_get(raw, "slices", [])):
        path = f"slices[{i}]"
        try:
            qos_raw = _get(s, "qos", {})
            rach_raw = _get(s, "rach", {})
            th_raw = _get(s, "thresholds", {})
            snetid = check_snetid(s["snetid"])
            spec = SliceSpec(
                snetid=snetid,
                name=str(_get(s, "name", f"slice{snetid}")),
                kind=_get(s, "kind", "vertical"),
                service=str(_get(s, "service", "")),
                segment=str(_get(s, "segment", "")),
                l2_weight=float(_get(s, "l2_weight", 1.0)),
                l1_policy=_get(s, "l1_policy", "round_robin"),
                subset_cells=int(_get(s, "subset_cells", 0)),
                qos=QosProfile(
                    latency_budget_ms=float(_get(qos_raw, "latency_budget_ms", 100.0)),
                    min_rate_kbps=float(_get(qos_raw, "min_rate_kbps", 0.0)),
                    priority=int(_get(qos_raw, "priority", 0))),
                rach=(RachConfig(
                    slice=snetid,
                    preamble_pool=int(_get(rach_raw, "preamble_pool", 16)),
                    opportunity_period=int(_get(rach_raw, "opportunity_period", 10)),
                    max_attempts=int(_get(rach_raw, "max_attempts", 8)),
                    backoff_window=int(_get(rach_raw, "backoff_window", 20)))
                    if _get(rach_raw, "dedicated", True) else None),
                thresholds=Thresholds(
                    load_on=float(_get(th_raw, "load_on", 0.8)),
                    devices_on=int(_get(th_raw, "devices_on", 1)),
                    admission=float(_get(th_raw, "admission", 0.95)),
                    balance=float(_get(th_raw, "balance", 0.7)),
                    off_load=float(_get(th_raw, "off_load", 0.1)),
                    off_hold_ms=float(_get(th_raw, "off_hold_ms", 1000.0)),
                    fallback_link=float(_get(th_raw, "fallback_link", -100.0)),
                    min_devices_to_activate=int(_get(th_raw, "min_devices_to_activate", 1))),
                activation_latency_ms=float(_get(s, "activation_latency_ms", 50.0)),
                deactivation_latency_ms=float(_get(s, "deactivation_latency_ms", 10.0)),
                eligible_ap_classes=tuple(_get(s, "eligible_ap_classes",
                                               ["macro", "small", "portable"])),
                revenue_units=float(_get(s, "revenue_units", 1.0)),
                activation_cost_units=float(_get(s, "activation_cost_units", 0.0)),
                cu_plane_option=int(_get(s, "cu_plane_option", 3)),
                initial_active=_get(s, "initial_active", True),
                auto_expand=bool(_get(s, "auto_expand", False)),
            )
            if spec.snetid in seen_snetids:
                errors.append(f"{path}: duplicate sNetID {spec.snetid}")
            seen_snetids.add(spec.snetid)
            if spec.kind not in ("vertical", "horizontal"):
                errors.append(f"{path}.kind: {spec.kind!r}")
            if spec.segment and spec.segment not in seg_ids:
                errors.append(f"{path}.segment: unknown segment {spec.segment!r}")
            if spec.l1_policy not in ("round_robin", "proportional_fair"):
                errors.append(f"{path}.l1_policy: {spec.l1_policy!r}")
            if spec.cu_plane_option not in (1, 2, 3):
                errors.append(f"{path}.cu_plane_option: {spec.cu_plane_option}")
            sc.slices.append(spec)
        except (KeyError, TypeError, ValueError, SliceSimError) as exc:
            errors.append(f"{path}: {exc}")

    slice_ids = {s.snetid for s in sc.slices}
    for i, a in enumerate(_get(raw, "aps", [])):
        try:
            sc.aps.append(ApSpec(
                id=str(a["id"]), ap_class=_get(a, "class", "macro"),
                slice_device_capacity=int(_get(a, "slice_device_capacity", 1000))))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"aps[{i}]: {exc}")
    ap_ids = {a.id for a in sc.aps}
    if len(ap_ids) != len(sc.aps):
        errors.append("aps: duplicate AP ids")

    for i, d in enumerate(_get(raw, "devices", [])):
        path = f"devices[{i}]"
        try:
            compute = _get(d, "compute", {})
            spec = DeviceSpec(
                id=str(d["id"]),
                memberships=tuple(int(m) for m in _get(d, "memberships", [])),
                links={str(k): float(v) for k, v in _get(d, "links", {}).items()},
                connect=tuple((str(c["ap"]), int(c["slice"]))
                              for c in _get(d, "connect", [])),
                compute_mops=float(_get(compute, "total_mops", 0.0)),
                reserved_local=float(_get(compute, "reserved_local", 0.0)))
            for m in spec.memberships:
                if m not in slice_ids:
                    errors.append(f"{path}: membership in unknown slice {m}")
            for ap, sl in spec.connect:
                if ap not in ap_ids:
                    errors.append(f"{path}: connect to unknown AP {ap!r}")
                if sl not in slice_ids:
                    errors.append(f"{path}: connect to unknown slice {sl}")
            for ap in spec.links:
                if ap not in ap_ids:
                    errors.append(f"{path}: link to unknown AP {ap!r}")
            sc.devices.append(spec)
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{path}: {exc}")
    device_ids = {d.id for d in sc.devices}

    flow_ids = set()
    for i, f in enumerate(_get(raw, "traffic", [])):
        path = f"traffic[{i}]"
        try:
            spec = FlowSpec(
                flow=str(f["flow"]), device=str(f["device"]), slice=int(f["slice"]),
                kind=_get(f, "kind", "periodic"),
                period_ms=float(_get(f, "period_ms", 1.0)),
                rate_per_s=float(_get(f, "rate_per_s", 0.0)),
                bytes=int(_get(f, "bytes", 100)),
                start_ms=float(_get(f, "start_ms", 0.0)),
                end_ms=(None if _get(f, "end_ms") is None else float(f["end_ms"])),
                direction=_get(f, "direction", "uplink"))
            if spec.kind not in ("periodic", "poisson"):
                errors.append(f"{path}.kind: {spec.kind!r}")
            if spec.device not in device_ids:
                errors.append(f"{path}: unknown device {spec.device!r}")
            if spec.slice not in slice_ids:
                errors.append(f"{path}: unknown slice {spec.slice}")
            if spec.flow in flow_ids:
                errors.append(f"{path}: duplicate flow id {spec.flow!r}")
            flow_ids.add(spec.flow)
            sc.traffic.append(spec)
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{path}: {exc}")

    for i, w in enumerate(_get(raw, "access_workloads", [])):
        path = f"access_workloads[{i}]"
        try:
            spec = AccessWorkloadSpec(
                slice=int(w["slice"]), count=int(w["count"]),
                prefix=str(_get(w, "prefix", "u")),
                start_ms=float(_get(w, "start_ms", 0.0)),
                stagger_ms=float(_get(w, "stagger_ms", 0.0)),
                ap=(str(w["ap"]) if _get(w, "ap") else None),
                link=float(_get(w, "link", -70.0)),
                flow=_get(w, "flow"))
            if spec.slice not in slice_ids:
                errors.append(f"{path}: unknown slice {spec.slice}")
            if spec.ap is not None and spec.ap not in ap_ids:
                errors.append(f"{path}: unknown AP {spec.ap!r}")
            sc.access_workloads.append(spec)
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{path}: {exc}")

    for i, h in enumerate(_get(raw, "handovers", [])):
        try:
            sc.handovers.append((float(h["at_ms"]), str(h["device"]), str(h["to_ap"])))
            if str(h["device"]) not in device_ids:
                errors.append(f"handovers[{i}]: unknown device {h['device']!r}")
            if str(h["to_ap"]) not in ap_ids:
                errors.append(f"handovers[{i}]: unknown AP {h['to_ap']!r}")
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"handovers[{i}]: {exc}")

    for i, lf in enumerate(_get(raw, "link_failures", [])):
        try:
            sc.link_failures.append((float(lf["at_ms"]), str(lf["client"]), str(lf["host"])))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"link_failures[{i}]: {exc}")

    cn_raw = _get(raw, "cn", {})
    fn_names = set()
    for i, fn in enumerate(_get(cn_raw, "functions", [])):
        path = f"cn.functions[{i}]"
        try:
            vf = VirtualFunction(
                name=str(fn["name"]),
                processing_rate_per_ms=float(_get(fn, "rate_per_ms", 1000.0)),
                per_packet_latency_us=int(_get(fn, "latency_us", 100)),
                host=str(_get(fn, "host", "core")))
            if vf.processing_rate_per_ms <= 0:
                errors.append(f"{path}: rate must be positive")
            if vf.name in fn_names:
                errors.append(f"{path}: duplicate function {vf.name!r}")
            fn_names.add(vf.name)
            sc.cn_functions.append(vf)
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{path}: {exc}")
    for i, cs in enumerate(_get(cn_raw, "slices", [])):
        path = f"cn.slices[{i}]"
        try:
            spec = CnSlice(id=str(cs["id"]), chain=tuple(str(x) for x in cs["chain"]),
                           target_service=str(_get(cs, "service", "")))
            if not spec.chain:
                errors.append(f"{path}: empty chain")
            for fn in spec.chain:
                if fn not in fn_names:
                    errors.append(f"{path}: unknown function {fn!r} in chain")
            sc.cn_slices.append(spec)
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{path}: {exc}")

    pairing_raw = _get(raw, "pairing", {})
    sc.pairing = PairingMap(
        radio_to_ran={str(k): tuple(int(x) for x in v)
                      for k, v in _get(pairing_raw, "radio_to_ran", {}).items()},
        ran_to_cn={int(k): tuple(str(x) for x in v)
                   for k, v in _get(pairing_raw, "ran_to_cn", {}).items()})
    vertical_ids = {s.snetid for s in sc.slices if s.kind == "vertical"}
    if vertical_ids or sc.pairing.radio_to_ran or sc.pairing.ran_to_cn:
        for problem in validate_pairing(sc.pairing, seg_ids, vertical_ids,
                                        {c.id for c in sc.cn_slices}):
            errors.append(f"pairing: {problem}")

    off_raw = _get(raw, "offload", {})
    sc.offload = OffloadSpec(
        signaling_latency_ms=float(_get(off_raw, "signaling_latency_ms", 5.0)),
        pdu_bytes=int(_get(off_raw, "pdu_bytes", 1000)),
        advert_period_ms=float(_get(off_raw, "advert_period_ms", 100.0)),
        stage_timeout_ms=float(_get(off_raw, "stage_timeout_ms", 5000.0)),
        os_overhead_ms=float(_get(off_raw, "os_overhead_ms", 0.0)),
        admission_floor_mops=float(_get(off_raw, "admission_floor_mops", 0.0)))
    for i, t in enumerate(_get(off_raw, "tasks", [])):
        path = f"offload.tasks[{i}]"
        try:
            spec = TaskSpec(
                id=str(t["id"]), client=str(t["client"]), host=str(t["host"]),
                total_mops=float(t["total_mops"]),
                fraction=float(_get(t, "fraction", 1.0)),
                ship_bytes=int(_get(t, "ship_bytes", 0)),
                result_bytes=int(_get(t, "result_bytes", 0)),
                at_ms=float(_get(t, "at_ms", 0.0)),
                asked_mops=(None if _get(t, "asked_mops") is None
                            else float(t["asked_mops"])),
                deadline_ms=(None if _get(t, "deadline_ms") is None
                             else float(t["deadline_ms"])))
            if not 0.0 <= spec.fraction <= 1.0:
                errors.append(f"{path}.fraction: outside [0,1]")
            if spec.client not in device_ids:
                errors.append(f"{path}: unknown client {spec.client!r}")
            if spec.host not in device_ids | ap_ids:
                errors.append(f"{path}: unknown host {spec.host!r}")
            sc.offload.tasks.append(spec)
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"{path}: {exc}")

    es_raw = _get(raw, "edge_split")
    if es_raw:
        try:
            sc.edge_split = EdgeSplitSpec(
                local_fraction=float(_get(es_raw, "local_fraction", 0.99)),
                device_prefix=str(_get(es_raw, "device_prefix", "w")),
                device_count=int(_get(es_raw, "device_count", 8)),
                ap=str(es_raw["ap"]),
                horizontal_slice=int(es_raw["horizontal_slice"]),
                vertical_slice=int(es_raw["vertical_slice"]),
                packet_bytes=int(_get(es_raw, "packet_bytes", 1000)),
                period_ms=float(_get(es_raw, "period_ms", 10.0)),
                start_ms=float(_get(es_raw, "start_ms", 0.0)),
                end_ms=(None if _get(es_raw, "end_ms") is None
                        else float(es_raw["end_ms"])))
            if not 0.0 <= sc.edge_split.local_fraction <= 1.0:
                errors.append("edge_split.local_fraction: outside [0,1]")
            if sc.edge_split.ap not in ap_ids:
                errors.append(f"edge_split: unknown AP {sc.edge_split.ap!r}")
            for key in ("horizontal_slice", "vertical_slice"):
                if getattr(sc.edge_split, key) not in slice_ids:
                    errors.append(f"edge_split.{key}: unknown slice")
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"edge_split: {exc}")

    ran_raw = _get(raw, "ran", {})
    sc.ran = RanSettings(
        per_function_cost=float(_get(ran_raw, "per_function_cost", 1.0)),
        trigger_eval_period_ms=float(_get(ran_raw, "trigger_eval_period_ms", 100.0)),
        off_check_period_ms=float(_get(ran_raw, "off_check_period_ms", 100.0)),
        lb_period_ms=float(_get(ran_raw, "lb_period_ms", 0.0)),
        acceptable_link=float(_get(ran_raw, "acceptable_link", -90.0)))

    m_raw = _get(raw, "metrics", {})
    sc.metrics_window_ms = float(_get(m_raw, "window_ms", 100.0))
    sc.audit = bool(_get(m_raw, "audit", False))

    # A carve request against a shared segment would fight the per-subframe
    # pool split; reject the contradiction here rather than mid-run.
    seg_by_id = {s.id: s for s in sc.segments}
    for i, s in enumerate(sc.slices):
        seg = seg_by_id.get(s.segment) if s.segment else None
        if seg and seg.mode == "shared" and s.subset_cells > 0:
            errors.append(
                f"slices[{i}]: subset_cells set but segment {seg.id!r} is shared")
    if errors:
        raise ScenarioError(errors)
    return sc


def validate_file(path) -> list:
    """CLI validate: returns [] when OK, else the diagnostics list."""
    try:
        load_scenario(path)
        return []
    except ScenarioError as exc:
        return exc.diagnostics
    except (OSError, yaml.YAMLError) as exc:
        return [str(exc)]


def apply_override(raw: dict, param_path: str, value) -> dict:
    """Set one nested scenario value addressed as 'a.b[2].c'; used by sweep."""
    out = copy.deepcopy(raw)
    tokens = []
    for part in param_path.split("."):
        while "[" in part:
            head, rest = part.split("[", 1)
            idx, part = rest.split("]", 1)
            if head:
                tokens.append(head)
            tokens.append(int(idx))
        if part:
            tokens.append(part)
    node = out
    for i, tok in enumerate(tokens[:-1]):
        try:
            node = node[tok]
        except (KeyError, IndexError, TypeError):
            raise ScenarioError(
                [f"parameter path {param_path!r} broken at {tokens[:i + 1]}"])
    last = tokens[-1]
    try:
        _ = node[last]
    except (KeyError, IndexError, TypeError):
        raise ScenarioError([f"parameter path {param_path!r}: {last!r} not found"])
    node[last] = value
    return out
