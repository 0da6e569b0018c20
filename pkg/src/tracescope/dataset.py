"""Immutable in-memory dataset assembled after ingest.

Holds columnar interval storage, the execution tree, and every query
index (coverage profiles, summed area tables, interval tree, child
index, counter series). Construction happens once at bundle time; all
reads afterwards are lock-free except the lazy per-node caches, which
insert under a lock without blocking readers of other nodes.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from tracescope.errors import (
    UnknownCounterError,
    UnknownGuidError,
    UnknownLocationError,
)
from tracescope.indices import (
    DEFAULT_BIN_COUNT,
    ChildIndex,
    CoverageProfile,
    IntervalTree,
    SummedAreaTable,
)
from tracescope.ingest import RawTrace
from tracescope.model import DatasetMeta, Guid, Interval, Location, StringTable
from tracescope.tree import ExecutionTree, build_execution_tree


@dataclass
class IntervalColumns:
    """Column-oriented interval storage, rows sorted by (enter, guid)."""

    guid: np.ndarray
    parent: np.ndarray
    has_parent: np.ndarray
    location: np.ndarray
    primitive: np.ndarray
    enter: np.ndarray
    leave: np.ndarray
    node_id: np.ndarray
    row_of_guid: dict[Guid, int] = field(repr=False)

    @classmethod
    def from_intervals(
        cls, intervals: list[Interval], interval_to_node: dict[Guid, int]
    ) -> "IntervalColumns":
        n = len(intervals)
        guid = np.fromiter((iv.guid for iv in intervals), dtype=np.int64, count=n)
        parent = np.fromiter(
            (iv.parent if iv.parent is not None else -1 for iv in intervals),
            dtype=np.int64,
            count=n,
        )
        has_parent = np.fromiter(
            (iv.parent is not None for iv in intervals), dtype=bool, count=n
        )
        return cls(
            guid=guid,
            parent=parent,
            has_parent=has_parent,
            location=np.fromiter((iv.location for iv in intervals), dtype=np.int32, count=n),
            primitive=np.fromiter((iv.primitive for iv in intervals), dtype=np.int32, count=n),
            enter=np.fromiter((iv.enter for iv in intervals), dtype=np.int64, count=n),
            leave=np.fromiter((iv.leave for iv in intervals), dtype=np.int64, count=n),
            node_id=np.fromiter(
                (interval_to_node[iv.guid] for iv in intervals), dtype=np.int32, count=n
            ),
            row_of_guid={iv.guid: row for row, iv in enumerate(intervals)},
        )

    def __len__(self) -> int:
        return len(self.guid)

    @property
    def durations(self) -> np.ndarray:
        return self.leave - self.enter

    def interval(self, row: int) -> Interval:
        return Interval(
            guid=int(self.guid[row]),
            parent=int(self.parent[row]) if self.has_parent[row] else None,
            location=int(self.location[row]),
            primitive=int(self.primitive[row]),
            enter=int(self.enter[row]),
            leave=int(self.leave[row]),
        )


class LocationLane:
    """Per-location interval rows with sorted endpoint arrays.

    Rows are ascending, which is also enter order because the global row
    order is (enter, guid). Supports pixel counting by two binary
    searches and latest-enter stabbing.
    """

    def __init__(self, rows: np.ndarray, enters: np.ndarray, leaves: np.ndarray):
        self.rows = rows
        self.enters = enters
        self.leaves = leaves
        self.leaves_sorted = np.sort(leaves)
        self.profile = CoverageProfile(enters, leaves)

    def overlap_counts(self, bounds: np.ndarray) -> np.ndarray:
        """Interval count per [bounds[i], bounds[i+1]) span."""
        started = np.searchsorted(self.enters, bounds[1:], side="left")
        finished = np.searchsorted(self.leaves_sorted, bounds[:-1], side="right")
        return started - finished

    def latest_cover(self, t: int) -> int:
        """Row covering tick t with the greatest enter, or -1."""
        return self.latest_cover_in(t, t + 1)

    def latest_cover_in(self, t0: int, t1: int) -> int:
        """Row overlapping [t0, t1) with the greatest enter, or -1."""
        idx = int(np.searchsorted(self.enters, t1, side="left")) - 1
        while idx >= 0:
            if self.leaves[idx] > t0:
                return int(self.rows[idx])
            idx -= 1
        return -1


class CounterSeries:
    """Rate segments of one counter at one location.

    Consecutive samples (tA,vA),(tB,vB) define rate (vB-vA)/(tB-tA) over
    the span between them. Negative deltas (resets) and zero-length gaps
    produce no segment, leaving that span uncovered.
    """

    def __init__(self, times: np.ndarray, values: np.ndarray):
        times = np.asarray(times, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        starts = times[:-1]
        ends = times[1:]
        lengths = ends - starts
        deltas = np.diff(values)
        keep = (lengths > 0) & (deltas >= 0)
        self.reset_count = int(((deltas < 0) & (lengths > 0)).sum())
        self.starts = starts[keep]
        self.ends = ends[keep]
        self.lengths = lengths[keep]
        self.masses = deltas[keep]
        with np.errstate(divide="ignore", invalid="ignore"):
            self.rates = np.where(self.lengths > 0, self.masses / self.lengths, 0.0)
        self._cum_mass = np.concatenate(([0.0], np.cumsum(self.masses)))
        self._cum_len = np.concatenate(([0], np.cumsum(self.lengths, dtype=np.int64)))
        self.sample_count = len(times)

    @property
    def segment_count(self) -> int:
        return len(self.starts)

    def mass_and_coverage(self, bounds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cumulative (mass, covered ticks) before each boundary tick."""
        bounds = np.asarray(bounds, dtype=np.int64)
        if self.segment_count == 0:
            return np.zeros(len(bounds)), np.zeros(len(bounds), dtype=np.int64)
        j = np.searchsorted(self.ends, bounds, side="right")
        jj = np.minimum(j, self.segment_count - 1)
        partial = (j < self.segment_count) & (self.starts[jj] < bounds)
        over = np.where(partial, bounds - self.starts[jj], 0)
        mass = self._cum_mass[j] + np.where(partial, self.rates[jj] * over, 0.0)
        coverage = self._cum_len[j] + over
        return mass, coverage

    def pixel_rates(self, bounds: np.ndarray) -> np.ndarray:
        """Time-weighted mean rate per pixel span; NaN where uncovered."""
        mass, coverage = self.mass_and_coverage(bounds)
        pixel_mass = np.diff(mass)
        pixel_cover = np.diff(coverage).astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            rates = pixel_mass / pixel_cover
        rates[pixel_cover <= 0] = np.nan
        return rates


class BundledDataset:
    """One fully indexed trace, immutable and safe for concurrent reads."""

    def __init__(
        self,
        meta: DatasetMeta,
        locations: list[Location],
        primitives: StringTable,
        counter_names: StringTable,
        cols: IntervalColumns,
        tree: ExecutionTree,
        child_guids: ChildIndex,
        warnings: list[tuple[str, str]],
        source_files: list[tuple[str, str]],
        counter_series: dict[tuple[int, int], CounterSeries],
        bin_count: int = DEFAULT_BIN_COUNT,
    ):
        self.meta = meta
        self.locations = locations
        self.primitives = primitives
        self.counter_names = counter_names
        self.cols = cols
        self.tree = tree
        self.child_guids = child_guids
        self.warnings = warnings
        self.source_files = source_files
        self.counter_series = counter_series
        self.bin_count = bin_count

        self.total_profile = CoverageProfile(cols.enter, cols.leave)
        self.itree = IntervalTree(cols.enter, cols.leave)
        self.lanes = self._build_lanes()
        self.node_rows = self._group_rows_by_node()
        self.durations_sorted = np.sort(cols.durations)

        span = max(meta.time_end, 1)
        self.total_sat = SummedAreaTable.from_profile(
            self.total_profile, span, bin_count, "utilization-total"
        )
        self.location_sats = [
            SummedAreaTable.from_profile(
                lane.profile, span, bin_count, f"utilization-location-{l}"
            )
            for l, lane in enumerate(self.lanes)
        ]
        max_dur = int(self.durations_sorted[-1]) if len(self.durations_sorted) else 0
        self.duration_sat = SummedAreaTable.from_point_values(
            self.durations_sorted, max_dur + 1, bin_count, "duration-count"
        )
        self.counter_sats = {
            (loc, cid): SummedAreaTable.from_counter_series(
                series, span, bin_count, f"counter-{loc}-{counter_names.name_of(cid)}"
            )
            for (loc, cid), series in counter_series.items()
        }

        self._node_profile_cache: dict[int, CoverageProfile] = {}
        self._node_sat_cache: dict[int, SummedAreaTable] = {}
        self._subtree_rows_cache: dict[int, np.ndarray] = {}
        self._cache_lock = threading.Lock()

    def _build_lanes(self) -> list[LocationLane]:
        lanes = []
        for l in range(len(self.locations)):
            rows = np.nonzero(self.cols.location == l)[0]
            lanes.append(
                LocationLane(rows, self.cols.enter[rows], self.cols.leave[rows])
            )
        return lanes

    def _group_rows_by_node(self) -> list[np.ndarray]:
        node_count = len(self.tree.nodes)
        order = np.argsort(self.cols.node_id, kind="stable")
        counts = np.bincount(self.cols.node_id, minlength=node_count)
        groups: list[np.ndarray] = []
        start = 0
        for c in counts:
            groups.append(np.sort(order[start : start + c]))
            start += c
        return groups

    # Lookup helpers

    def row_for_guid(self, guid: Guid) -> int:
        try:
            return self.cols.row_of_guid[guid]
        except KeyError:
            raise UnknownGuidError(guid) from None

    def interval_by_guid(self, guid: Guid) -> Interval:
        return self.cols.interval(self.row_for_guid(guid))

    def lane(self, location: int) -> LocationLane:
        if not 0 <= location < len(self.lanes):
            raise UnknownLocationError(location)
        return self.lanes[location]

    def counter_id(self, name: str) -> int:
        cid = self.counter_names.id_of(name)
        if cid is None:
            raise UnknownCounterError(name)
        return cid

    def subtree_rows(self, node_id: int) -> np.ndarray:
        """Rows of every interval attributed to the node or a descendant."""
        with self._cache_lock:
            cached = self._subtree_rows_cache.get(node_id)
        if cached is not None:
            return cached
        members = self.tree.subtree_node_ids(node_id)
        parts = [self.node_rows[m] for m in members if len(self.node_rows[m])]
        rows = np.sort(np.concatenate(parts)) if parts else np.empty(0, dtype=np.int64)
        with self._cache_lock:
            self._subtree_rows_cache[node_id] = rows
        return rows

    def profile_for_rows(self, rows: np.ndarray) -> CoverageProfile:
        return CoverageProfile(self.cols.enter[rows], self.cols.leave[rows])

    def node_profile(self, node_id: int) -> CoverageProfile:
        """Coverage profile of a node's subtree instances, cached."""
        self.tree.node(node_id)
        with self._cache_lock:
            cached = self._node_profile_cache.get(node_id)
        if cached is not None:
            return cached
        profile = self.profile_for_rows(self.subtree_rows(node_id))
        with self._cache_lock:
            self._node_profile_cache[node_id] = profile
        return profile

    def node_sat(self, node_id: int) -> SummedAreaTable:
        """Per-node utilization table, built on first use and cached."""
        self.tree.node(node_id)
        with self._cache_lock:
            cached = self._node_sat_cache.get(node_id)
        if cached is not None:
            return cached
        sat = SummedAreaTable.from_profile(
            self.node_profile(node_id),
            max(self.meta.time_end, 1),
            self.bin_count,
            f"utilization-node-{node_id}",
        )
        with self._cache_lock:
            self._node_sat_cache[node_id] = sat
        return sat

    def descendant_rows(self, guid: Guid) -> np.ndarray:
        """Rows of the transitive child closure of guid, excluding itself."""
        from tracescope.tree import descendants_of

        found, _ = descendants_of(self.child_guids, guid, known=self.cols.row_of_guid)
        if not found:
            return np.empty(0, dtype=np.int64)
        return np.sort(
            np.fromiter((self.cols.row_of_guid[g] for g in found), dtype=np.int64)
        )


def assemble(
    raw: RawTrace,
    dataset_id: str,
    label: str,
    bin_count: int = DEFAULT_BIN_COUNT,
    tree: ExecutionTree | None = None,
) -> BundledDataset:
    """Build every index over a parsed trace and return the dataset."""
    if tree is None:
        tree = build_execution_tree(raw)
    cols = IntervalColumns.from_intervals(raw.intervals, tree.interval_to_node)
    child_guids = ChildIndex.build(raw.intervals)

    counter_series: dict[tuple[int, int], CounterSeries] = {}
    if raw.counters:
        n = len(raw.counters)
        c_loc = np.fromiter((c.location for c in raw.counters), dtype=np.int32, count=n)
        c_id = np.fromiter((c.counter for c in raw.counters), dtype=np.int32, count=n)
        c_time = np.fromiter((c.time for c in raw.counters), dtype=np.int64, count=n)
        c_val = np.fromiter((c.value for c in raw.counters), dtype=np.float64, count=n)
        for cid in np.unique(c_id):
            for loc in np.unique(c_loc[c_id == cid]):
                mask = (c_id == cid) & (c_loc == loc)
                counter_series[(int(loc), int(cid))] = CounterSeries(
                    c_time[mask], c_val[mask]
                )

    meta = DatasetMeta(
        dataset_id=dataset_id,
        label=label,
        time_begin=0,
        time_end=raw.time_end,
        location_count=len(raw.locations),
        interval_count=len(raw.intervals),
        primitive_names=list(raw.primitives.names()),
        counter_names=list(raw.counter_names.names()),
        source_files=[path for path, _ in raw.source_files],
    )
    warnings = list(raw.warnings) + list(tree.warnings)
    return BundledDataset(
        meta=meta,
        locations=raw.locations,
        primitives=raw.primitives,
        counter_names=raw.counter_names,
        cols=cols,
        tree=tree,
        child_guids=child_guids,
        warnings=warnings,
        source_files=raw.source_files,
        counter_series=counter_series,
        bin_count=bin_count,
    )
