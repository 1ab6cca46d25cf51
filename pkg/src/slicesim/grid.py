"""Sliced radio grid: numerology segments and per-slice resource subsets.

A cell is the atomic schedulable unit (segment, block, subframe phase).
Placement is deterministic lowest-index-first so that identical carve
sequences always reproduce identical subsets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BoundsError, CapacityError, ConflictError, OverlapError, UnknownSliceError

REQUIREMENTS = ("low_latency", "wide_coverage", "high_throughput", "massive_connections")

Cell = tuple[str, int, int]  # (segment id, block index, subframe phase)


@dataclass(frozen=True)
class Numerology:
    """Basic transmission parameter set defining one radio segment type."""

    id: int
    subcarrier_spacing_khz: float
    symbol_duration_us: float
    symbols_per_subframe: int
    subframe_length_us: int = 1000
    intended_requirement: str = "high_throughput"

    def __post_init__(self):
        if self.intended_requirement not in REQUIREMENTS:
            raise BoundsError(
                f"numerology {self.id}: unknown requirement {self.intended_requirement!r}"
            )
        product = self.symbol_duration_us * self.symbols_per_subframe
        if abs(product - self.subframe_length_us) > 1.0:
            raise BoundsError(
                f"numerology {self.id}: {self.symbol_duration_us} us x "
                f"{self.symbols_per_subframe} symbols != {self.subframe_length_us} us subframe"
            )


def default_numerologies() -> dict[int, Numerology]:
    """Catalog with exact inverse scaling: spacing doubles, symbol duration halves."""
    catalog = [
        (0, 15.0, 15, "wide_coverage"),
        (1, 30.0, 30, "high_throughput"),
        (2, 60.0, 60, "low_latency"),
    ]
    return {
        nid: Numerology(nid, scs, 1000 / symbols, symbols, 1000, req)
        for nid, scs, symbols, req in catalog
    }


def validate_catalog(catalog: dict[int, Numerology]) -> None:
    """Cross-numerology inverse-scaling check: spacing x duration constant."""
    nums = sorted(catalog.values(), key=lambda n: n.id)
    for a in nums:
        for b in nums:
            pa = a.subcarrier_spacing_khz * a.symbol_duration_us
            pb = b.subcarrier_spacing_khz * b.symbol_duration_us
            tol = 0.05 * (a.subcarrier_spacing_khz + b.subcarrier_spacing_khz) + 1.0
            if abs(pa - pb) > tol:
                raise BoundsError(
                    f"numerologies {a.id} and {b.id} break inverse scaling: "
                    f"{pa:.1f} vs {pb:.1f} kHz*us"
                )


@dataclass(frozen=True)
class ResourceSegment:
    """One numerology-defined partition of the grid, possibly time-shared."""

    id: str
    numerology_id: int
    block_range: tuple[int, int]  # half-open
    subframes: frozenset[int]  # active phases modulo the grid period

    @property
    def n_blocks(self) -> int:
        return self.block_range[1] - self.block_range[0]

    def has_phase(self, phase: int) -> bool:
        return phase in self.subframes

    def cells(self) -> list[Cell]:
        lo, hi = self.block_range
        phases = sorted(self.subframes)
        return [(self.id, b, p) for b in range(lo, hi) for p in phases]

    def cell_count(self) -> int:
        return self.n_blocks * len(self.subframes)


class ResourceSubset:
    """The cells owned by (or shared with) one slice, indexed by phase."""

    def __init__(self, slice_id: int, cells):
        self.slice = slice_id
        self.cells: frozenset[Cell] = frozenset(cells)
        by_phase: dict[int, list[Cell]] = {}
        for cell in self.cells:
            by_phase.setdefault(cell[2], []).append(cell)
        self._by_phase = {ph: tuple(sorted(cs)) for ph, cs in by_phase.items()}

    def cells_at_phase(self, phase: int) -> tuple[Cell, ...]:
        return self._by_phase.get(phase, ())

    def __len__(self) -> int:
        return len(self.cells)


def partition_grid(total_blocks: int, period: int, segments) -> "ResourceGrid":
    """Validate segment specs and build the grid; overlapping segments are rejected."""
    if total_blocks <= 0 or period <= 0:
        raise BoundsError(f"grid needs positive blocks/period, got {total_blocks}/{period}")
    segs: list[ResourceSegment] = []
    for seg in segments:
        lo, hi = seg.block_range
        if not (0 <= lo < hi <= total_blocks):
            raise BoundsError(
                f"segment {seg.id!r}: blocks [{lo},{hi}) outside grid of {total_blocks}"
            )
        if not seg.subframes:
            raise BoundsError(f"segment {seg.id!r}: empty subframe pattern")
        if any(p < 0 or p >= period for p in seg.subframes):
            raise BoundsError(f"segment {seg.id!r}: subframe phase outside period {period}")
        segs.append(seg)
    for i, a in enumerate(segs):
        for b in segs[i + 1 :]:
            blocks = range(max(a.block_range[0], b.block_range[0]),
                           min(a.block_range[1], b.block_range[1]))
            phases = a.subframes & b.subframes
            if blocks and phases:
                raise OverlapError(
                    f"segments {a.id!r} and {b.id!r} both claim block {blocks[0]} "
                    f"at subframe {min(phases)}"
                )
    return ResourceGrid(total_blocks, period, segs)


class ResourceGrid:
    """Owns the free pool and the per-slice subsets carved from it."""

    def __init__(self, total_blocks: int, period: int, segments: list[ResourceSegment]):
        self.total_blocks = total_blocks
        self.period = period
        self.segments: dict[str, ResourceSegment] = {s.id: s for s in segments}
        self._free: dict[str, set[Cell]] = {s.id: set(s.cells()) for s in segments}
        self.subsets: dict[int, ResourceSubset] = {}
        self.total_cells = sum(s.cell_count() for s in segments)

    def free_count(self, segment_id: str | None = None) -> int:
        if segment_id is not None:
            return len(self._free[segment_id])
        return sum(len(f) for f in self._free.values())

    def carve_subset(self, slice_id: int, request) -> ResourceSubset:
        """Allocate cells for a slice; request is {segment: cell count} or explicit cells.

        Counts are satisfied lowest-index-first from the segment's free pool,
        so carve -> release -> identical carve reproduces the identical subset.
        """
        if slice_id in self.subsets:
            raise ConflictError(f"slice {slice_id} already owns a subset")
        taken: list[Cell] = []
        if isinstance(request, dict):
            for seg_id in sorted(request):
                count = int(request[seg_id])
                if seg_id not in self.segments:
                    raise BoundsError(f"unknown segment {seg_id!r}")
                free = self._free[seg_id]
                if count > len(free):
                    raise CapacityError(
                        f"slice {slice_id}: wants {count} cells from {seg_id!r}, "
                        f"only {len(free)} free"
                    )
                taken.extend(sorted(free)[:count])
        else:
            for cell in request:
                seg_id, block, phase = cell
                seg = self.segments.get(seg_id)
                if (seg is None or not seg.block_range[0] <= block < seg.block_range[1]
                        or phase not in seg.subframes):
                    raise BoundsError(f"cell {cell} not part of any declared segment")
                if cell not in self._free[seg_id]:
                    raise ConflictError(f"cell {cell} already owned")
                taken.append(cell)
        for cell in taken:
            self._free[cell[0]].discard(cell)
        subset = ResourceSubset(slice_id, taken)
        self.subsets[slice_id] = subset
        return subset

    def release_subset(self, slice_id: int) -> None:
        subset = self.subsets.pop(slice_id, None)
        if subset is None:
            raise UnknownSliceError(f"slice {slice_id} owns no subset")
        for cell in subset.cells:
            self._free[cell[0]].add(cell)

    def segment_cells_at_phase(self, segment_id: str, phase: int) -> tuple[Cell, ...]:
        seg = self.segments[segment_id]
        if not seg.has_phase(phase):
            return ()
        lo, hi = seg.block_range
        return tuple((segment_id, b, phase) for b in range(lo, hi))

    def assert_conservation(self) -> None:
        owned = sum(len(s) for s in self.subsets.values())
        free = self.free_count()
        if owned + free != self.total_cells:
            raise ConflictError(
                f"cell conservation broken: {owned} owned + {free} free != {self.total_cells}"
            )
        seen: set[Cell] = set()
        for s in self.subsets.values():
            if seen & s.cells:
                raise ConflictError("a cell appears in two subsets")
            seen |= s.cells
