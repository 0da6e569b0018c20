"""Query indices built at bundle time.

Three structures: exact cumulative coverage profiles (busy ticks before a
time point, computable at arbitrary tick boundaries), summed area tables
(per-bin prefix sums for O(1) bin-aligned range mass), and a static
centered interval tree for overlap and stabbing lookups. All are immutable
once built and safe for concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable, Sequence

import numpy as np

from tracescope.model import Guid, Interval

DEFAULT_BIN_COUNT = 4096

# Vectorized int64 cumulative math is safe while count * max_time stays
# clear of 2^63; beyond that we fall back to exact Python ints.
_INT64_SAFE = 2**62


class CoverageProfile:
    """Exact busy-tick cumulative function for a fixed set of intervals.

    cumulative(t) returns the summed overlap of all intervals with [0, t)
    in integer ticks, valid at any tick, not just bin boundaries.
    Overlapping intervals are summed, not unioned.
    """

    def __init__(self, enters: np.ndarray, leaves: np.ndarray):
        enters = np.asarray(enters, dtype=np.int64)
        leaves = np.asarray(leaves, dtype=np.int64)
        self.count = len(enters)
        self._enters = np.sort(enters, kind="stable")
        order = np.argsort(leaves, kind="stable")
        self._leaves = leaves[order]
        durations = leaves - enters
        self.total_mass = int(durations.sum(dtype=np.int64)) if self.count else 0
        self._cum_enter = np.concatenate(([0], np.cumsum(self._enters, dtype=np.int64)))
        self._cum_dur_by_leave = np.concatenate(
            ([0], np.cumsum(durations[order], dtype=np.int64))
        )
        self._cum_enter_by_leave = np.concatenate(
            ([0], np.cumsum(enters[order], dtype=np.int64))
        )
        max_time = int(self._leaves[-1]) if self.count else 0
        self._exact_int64 = self.count * max(max_time, 1) < _INT64_SAFE

    def cumulative(self, ts) -> np.ndarray:
        """Busy ticks in [0, t) for each t. Exact integers."""
        ts = np.asarray(ts, dtype=np.int64)
        if self.count == 0:
            return np.zeros(len(ts), dtype=np.int64)
        finished = np.searchsorted(self._leaves, ts, side="right")
        started = np.searchsorted(self._enters, ts, side="left")
        if self._exact_int64:
            straddle = (started - finished) * ts
            return (
                self._cum_dur_by_leave[finished]
                + straddle
                - (self._cum_enter[started] - self._cum_enter_by_leave[finished])
            )
        out = [
            int(self._cum_dur_by_leave[j])
            + (int(k) - int(j)) * int(t)
            - (int(self._cum_enter[k]) - int(self._cum_enter_by_leave[j]))
            for t, j, k in zip(ts.tolist(), finished.tolist(), started.tolist())
        ]
        return np.array(out, dtype=object)

    def busy(self, t0: int, t1: int) -> int:
        """Busy ticks within [t0, t1)."""
        if t1 <= t0:
            return 0
        c = self.cumulative(np.array([t0, t1], dtype=np.int64))
        return int(c[1] - c[0])


@dataclass
class SummedAreaTable:
    """Prefix sums over fixed-width bins of one mass series.

    prefix has bin_count+1 entries, prefix[0] = 0, prefix[-1] = total mass.
    Bin-aligned range sums are exact (integer for tick-mass series);
    unaligned boundaries are prorated linearly within their bin.
    """

    series_key: str
    bin_count: int
    bin_width: int
    domain_span: int
    prefix: np.ndarray

    @property
    def total(self):
        v = self.prefix[-1]
        return float(v) if np.issubdtype(self.prefix.dtype, np.floating) else int(v)

    @classmethod
    def from_profile(
        cls, profile: CoverageProfile, span: int, bin_count: int, series_key: str
    ) -> "SummedAreaTable":
        if bin_count < 1:
            raise ValueError("bin_count must be >= 1")
        width = max(1, -(-max(span, 1) // bin_count))
        bounds = np.arange(bin_count + 1, dtype=np.int64) * width
        prefix = profile.cumulative(bounds)
        return cls(series_key, bin_count, width, span, np.ascontiguousarray(prefix))

    @classmethod
    def from_point_values(
        cls, values: Sequence[int], domain_span: int, bin_count: int, series_key: str
    ) -> "SummedAreaTable":
        """Counting series: mass 1 at each value (used for duration counts)."""
        if bin_count < 1:
            raise ValueError("bin_count must be >= 1")
        width = max(1, -(-max(domain_span, 1) // bin_count))
        ordered = np.sort(np.asarray(values, dtype=np.int64))
        bounds = np.arange(bin_count + 1, dtype=np.int64) * width
        prefix = np.searchsorted(ordered, bounds, side="left").astype(np.int64)
        return cls(series_key, bin_count, width, domain_span, prefix)

    @classmethod
    def from_counter_series(
        cls, series, span: int, bin_count: int, series_key: str
    ) -> "SummedAreaTable":
        """Accumulator-delta mass per time bin; exact at bin boundaries.

        `series` must expose mass_and_coverage(bounds) returning the
        cumulative mass before each boundary tick.
        """
        if bin_count < 1:
            raise ValueError("bin_count must be >= 1")
        width = max(1, -(-max(span, 1) // bin_count))
        bounds = np.arange(bin_count + 1, dtype=np.int64) * width
        mass, _ = series.mass_and_coverage(bounds)
        prefix = np.asarray(mass, dtype=np.float64)
        return cls(series_key, bin_count, width, span, np.ascontiguousarray(prefix))

    def range_sum(self, t0, t1):
        """Mass in [t0, t1); boundaries clamped to the domain.

        Bin-aligned integer boundaries give an exact integer result for
        integer series; the domain end also counts as aligned because no
        mass lies beyond it. Anything else is linearly prorated.
        """
        t0 = min(max(t0, 0), self.domain_span)
        t1 = min(max(t1, 0), self.domain_span)
        integral = not np.issubdtype(self.prefix.dtype, np.floating)
        if t1 <= t0:
            return 0 if integral else 0.0
        i0 = self._aligned_index(t0)
        i1 = self._aligned_index(t1)
        if integral and i0 is not None and i1 is not None:
            return int(self.prefix[i1]) - int(self.prefix[i0])
        return float(self._at(t1) - self._at(t0))

    def _aligned_index(self, t):
        """Prefix index reading cumulative(t) exactly, or None."""
        if not isinstance(t, (int, np.integer)):
            return None
        t = int(t)
        if t % self.bin_width == 0:
            return t // self.bin_width
        if t == self.domain_span:
            return self.bin_count
        return None

    def _at(self, t) -> float:
        pos = t / self.bin_width
        k = int(pos)
        if k >= self.bin_count:
            return float(self.prefix[self.bin_count])
        if t == self.domain_span:
            return float(self.prefix[self.bin_count])
        frac = pos - k
        mass = float(self.prefix[k + 1]) - float(self.prefix[k])
        return float(self.prefix[k]) + mass * frac


class _TreeNode:
    __slots__ = ("pivot", "left", "right", "center_by_enter", "center_enters", "center_by_leave", "center_leaves", "leaf_ids", "leaf_enters", "leaf_leaves")

    def __init__(self):
        self.pivot = 0
        self.left = None
        self.right = None
        self.center_by_enter = None
        self.center_enters = None
        self.center_by_leave = None
        self.center_leaves = None
        self.leaf_ids = None
        self.leaf_enters = None
        self.leaf_leaves = None


class IntervalTree:
    """Static centered interval tree over half-open [enter, leave) rows.

    query(t0, t1) returns exactly the row ids with enter < t1 and
    leave > t0, ascending, in O(log n + k).
    """

    LEAF_SIZE = 64

    def __init__(self, enters: np.ndarray, leaves: np.ndarray):
        self._enters = np.asarray(enters, dtype=np.int64)
        self._leaves = np.asarray(leaves, dtype=np.int64)
        self.count = len(self._enters)
        ids = np.arange(self.count, dtype=np.int64)
        self._root = self._build(ids) if self.count else None

    def _build(self, ids: np.ndarray) -> _TreeNode:
        node = _TreeNode()
        if len(ids) <= self.LEAF_SIZE:
            node.leaf_ids = ids
            node.leaf_enters = self._enters[ids]
            node.leaf_leaves = self._leaves[ids]
            return node
        enters = self._enters[ids]
        leaves = self._leaves[ids]
        pivot = int(np.median(enters))
        node.pivot = pivot
        left_mask = leaves <= pivot
        right_mask = enters > pivot
        center_mask = ~(left_mask | right_mask)
        center = ids[center_mask]
        enter_order = np.argsort(self._enters[center], kind="stable")
        node.center_by_enter = center[enter_order]
        node.center_enters = self._enters[node.center_by_enter]
        leave_order = np.argsort(-self._leaves[center], kind="stable")
        node.center_by_leave = center[leave_order]
        node.center_leaves = self._leaves[node.center_by_leave]
        left_ids = ids[left_mask]
        right_ids = ids[right_mask]
        node.left = self._build(left_ids) if len(left_ids) else None
        node.right = self._build(right_ids) if len(right_ids) else None
        return node

    def query(self, t0: int, t1: int) -> np.ndarray:
        """Row ids of intervals overlapping [t0, t1), ascending."""
        if self._root is None or t1 <= t0:
            return np.empty(0, dtype=np.int64)
        parts: list[np.ndarray] = []
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.leaf_ids is not None:
                mask = (node.leaf_enters < t1) & (node.leaf_leaves > t0)
                if mask.any():
                    parts.append(node.leaf_ids[mask])
                continue
            if t1 <= node.pivot:
                cut = np.searchsorted(node.center_enters, t1, side="left")
                if cut:
                    parts.append(node.center_by_enter[:cut])
                if node.left is not None:
                    stack.append(node.left)
            elif t0 > node.pivot:
                cut = np.searchsorted(-node.center_leaves, -t0, side="left")
                if cut:
                    parts.append(node.center_by_leave[:cut])
                if node.right is not None:
                    stack.append(node.right)
            else:
                if len(node.center_by_enter):
                    parts.append(node.center_by_enter)
                if node.left is not None:
                    stack.append(node.left)
                if node.right is not None:
                    stack.append(node.right)
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(parts))

    def stab(self, t: int) -> np.ndarray:
        """Row ids of intervals covering tick t."""
        return self.query(t, t + 1)


class ChildIndex:
    """Parent GUID to child GUIDs, child lists sorted by child enter time.

    Only resolved parent links appear; links to GUIDs outside the dataset
    are skipped (they surface as unresolved parents at tree build).
    """

    def __init__(self, mapping: dict[Guid, list[Guid]]):
        self._mapping = mapping

    @classmethod
    def build(cls, intervals: Iterable[Interval]) -> "ChildIndex":
        ordered = sorted(intervals, key=lambda iv: (iv.enter, iv.guid))
        known = {iv.guid for iv in ordered}
        mapping: dict[Guid, list[Guid]] = {}
        for iv in ordered:
            if iv.parent is not None and iv.parent in known:
                mapping.setdefault(iv.parent, []).append(iv.guid)
        return cls(mapping)

    def children_of(self, guid: Guid) -> list[Guid]:
        return list(self._mapping.get(guid, ()))

    def get(self, guid: Guid, default=()) -> Sequence[Guid]:
        return self._mapping.get(guid, default)

    def items(self):
        return self._mapping.items()

    def __len__(self) -> int:
        return len(self._mapping)

    def __contains__(self, guid: Guid) -> bool:
        return guid in self._mapping


def build_utilization_sat(
    intervals: Sequence[Interval],
    bin_count: int = DEFAULT_BIN_COUNT,
    *,
    span: int | None = None,
    location: int | None = None,
    member_guids: set[Guid] | None = None,
    series_key: str | None = None,
) -> SummedAreaTable:
    """Busy-tick mass per time bin for the matching intervals.

    `location` and `member_guids` narrow the interval set; `span` defaults
    to the max leave time. Partial bin overlap is exact, never estimated.
    """
    selected = [
        iv
        for iv in intervals
        if (location is None or iv.location == location)
        and (member_guids is None or iv.guid in member_guids)
    ]
    if span is None:
        span = max((iv.leave for iv in intervals), default=0)
    if series_key is None:
        series_key = "utilization-total" if location is None else f"utilization-location-{location}"
    profile = CoverageProfile(
        np.array([iv.enter for iv in selected], dtype=np.int64),
        np.array([iv.leave for iv in selected], dtype=np.int64),
    )
    return SummedAreaTable.from_profile(profile, span, bin_count, series_key)


def sat_range_sum(sat: SummedAreaTable, t0, t1):
    """Mass of `sat` within [t0, t1); see SummedAreaTable.range_sum."""
    return sat.range_sum(t0, t1)


def build_interval_tree(intervals: Sequence[Interval]) -> IntervalTree:
    """Overlap-query tree over the intervals, indexed by list position."""
    return IntervalTree(
        np.array([iv.enter for iv in intervals], dtype=np.int64),
        np.array([iv.leave for iv in intervals], dtype=np.int64),
    )


def build_child_index(intervals: Iterable[Interval]) -> ChildIndex:
    return ChildIndex.build(intervals)


def exact_prefix(values: Iterable[int]) -> list[int]:
    """Arbitrary-precision prefix sums, [0, v0, v0+v1, ...]."""
    return [0, *accumulate(int(v) for v in values)]
