"""Read-only queries that feed the views.

Every operation works over an immutable BundledDataset and is safe to
run concurrently. Pixel math uses exact integer tick boundaries: pixel i
covers [t0 + i*span//W, t0 + (i+1)*span//W), so busy masses are exact
and a fully busy trace yields utilization equal to the location count
at every pixel.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from tracescope.dataset import BundledDataset
from tracescope.errors import BadRangeError, UnknownGuidError
from tracescope.indices import CoverageProfile
from tracescope.model import Guid, Interval

DESCENDANT_CAP = 10_000
DEFAULT_OVERDRAW = 3.0


def pixel_bounds(t0: int, t1: int, width: int) -> np.ndarray:
    """Integer tick boundary i -> t0 + i*span//W for i in 0..W."""
    span = t1 - t0
    if width * span < 2**62:
        return t0 + (np.arange(width + 1, dtype=np.int64) * span) // width
    bounds = [t0 + (i * span) // width for i in range(width + 1)]
    return np.array(bounds, dtype=np.int64)


def check_range(t0: int, t1: int, width: int) -> None:
    if t1 <= t0:
        raise BadRangeError(f"empty time range [{t0}, {t1})")
    if width < 1:
        raise BadRangeError(f"width must be >= 1, got {width}")


def apply_overdraw(
    t0: int, t1: int, factor: float, lo: int, hi: int
) -> tuple[int, int]:
    """Widen [t0, t1) symmetrically to factor times its span, clamped."""
    if factor <= 1:
        return max(t0, lo), min(t1, hi)
    span = t1 - t0
    pad = int(span * (factor - 1) / 2)
    return max(t0 - pad, lo), min(t1 + pad, hi)


@dataclass
class PixelSeries:
    t0: int
    t1: int
    width: int
    values: np.ndarray


@dataclass
class GanttRow:
    location: int
    label: str
    counts: np.ndarray
    solo_guid: np.ndarray
    busy_fraction: np.ndarray
    selected: np.ndarray | None = None


@dataclass
class GanttMatrix:
    t0: int
    t1: int
    width: int
    rows: list[GanttRow]


@dataclass
class AggBar:
    instance_guid: Guid
    start: int
    end: int
    row: int
    utilization: PixelSeries


@dataclass
class BoxPlotSeries:
    t0: int
    t1: int
    width: int
    counter: str
    mins: np.ndarray
    maxs: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray
    per_location: np.ndarray
    covered: np.ndarray


@dataclass
class HistogramResult:
    bin_edges: np.ndarray
    counts: np.ndarray
    scale: str
    filter_node: int | None = None

    @property
    def empty(self) -> bool:
        return len(self.counts) == 0


@dataclass
class DependencyChain:
    guid: Guid
    ancestors: list[Guid]
    children: list[Guid]
    descendants: list[Guid] | None = None
    descendants_truncated: bool = False


@dataclass(frozen=True)
class Selection:
    """One of: a tree node, a clicked interval (with its dependency
    chain), an explicit guid set, or an inclusive duration range."""

    kind: str
    node_id: int = -1
    guid: int = -1
    guids: tuple[int, ...] = ()
    dur_lo: float = 0.0
    dur_hi: float = 0.0
    text: str = ""


def parse_selection(text: str) -> Selection:
    """Decode a selection query parameter.

    Forms: node:<id> | guid:<g> | guids:<g1>,<g2>,... | dur:<lo>-<hi>
    """
    head, sep, rest = text.partition(":")
    try:
        if sep and head == "node":
            return Selection(kind="node", node_id=int(rest), text=text)
        if sep and head == "guid":
            return Selection(kind="guid", guid=int(rest), text=text)
        if sep and head == "guids":
            parts = tuple(int(p) for p in rest.split(",") if p != "")
            return Selection(kind="guids", guids=parts, text=text)
        if sep and head == "dur":
            lo_s, dash, hi_s = rest.partition("-")
            if not dash:
                raise ValueError(rest)
            lo, hi = float(lo_s), float(hi_s)
            if math.isnan(lo) or math.isnan(hi) or hi < lo:
                raise ValueError(rest)
            return Selection(kind="dur", dur_lo=lo, dur_hi=hi, text=text)
    except ValueError:
        raise BadRangeError(f"malformed selection {text!r}") from None
    raise BadRangeError(f"malformed selection {text!r}")


def rows_for_selection(ds: BundledDataset, sel: Selection) -> np.ndarray:
    """Interval rows a selection covers, ascending.

    A node selects its whole subtree's instances; a clicked guid selects
    itself plus ancestors and descendants; a duration range is inclusive
    at both ends.
    """
    if sel.kind == "node":
        return ds.subtree_rows(sel.node_id)
    if sel.kind == "guid":
        chain = dependency_chain(ds, sel.guid, include_descendants=True)
        members = {sel.guid, *chain.ancestors, *(chain.descendants or ())}
        return np.sort(
            np.fromiter(
                (ds.cols.row_of_guid[g] for g in members), dtype=np.int64, count=len(members)
            )
        )
    if sel.kind == "guids":
        rows = sorted(ds.row_for_guid(g) for g in set(sel.guids))
        return np.array(rows, dtype=np.int64)
    if sel.kind == "dur":
        durs = ds.cols.durations
        mask = (durs >= sel.dur_lo) & (durs <= sel.dur_hi)
        return np.nonzero(mask)[0].astype(np.int64)
    raise BadRangeError(f"malformed selection {sel.text!r}")


def _series_from_profile(
    profile_cumulative, t0: int, t1: int, width: int
) -> PixelSeries:
    bounds = pixel_bounds(t0, t1, width)
    busy = np.diff(np.asarray(profile_cumulative(bounds), dtype=np.float64))
    ticks = np.diff(bounds).astype(np.float64)
    values = np.divide(busy, ticks, out=np.zeros(width), where=ticks > 0)
    return PixelSeries(t0=t0, t1=t1, width=width, values=values)


def utilization(
    ds: BundledDataset,
    t0: int,
    t1: int,
    width: int,
    node: int | None = None,
    locations: list[int] | None = None,
) -> PixelSeries:
    """Busy ticks per pixel span divided by the span, per pixel.

    Unfiltered values sum resource activity, so a fully busy trace reads
    exactly the number of locations. A node filter restricts to the
    node's subtree instances; a location filter to those lanes.
    """
    check_range(t0, t1, width)
    if node is not None and locations is not None:
        rows = ds.subtree_rows(node)
        rows = rows[np.isin(ds.cols.location[rows], locations)]
        for l in locations:
            ds.lane(l)
        profile = ds.profile_for_rows(rows)
        return _series_from_profile(profile.cumulative, t0, t1, width)
    if node is not None:
        return _series_from_profile(ds.node_profile(node).cumulative, t0, t1, width)
    if locations is not None:
        lanes = [ds.lane(l) for l in locations]

        def summed(bounds: np.ndarray) -> np.ndarray:
            total = np.zeros(len(bounds), dtype=np.int64)
            for lane in lanes:
                total = total + np.asarray(lane.profile.cumulative(bounds))
            return total

        return _series_from_profile(summed, t0, t1, width)
    return _series_from_profile(ds.total_profile.cumulative, t0, t1, width)


def selection_utilization(
    ds: BundledDataset, selection: Selection, t0: int, t1: int, width: int
) -> PixelSeries:
    """Utilization restricted to the selected intervals; never exceeds
    the unfiltered series at any pixel."""
    check_range(t0, t1, width)
    rows = rows_for_selection(ds, selection)
    profile = ds.profile_for_rows(rows)
    return _series_from_profile(profile.cumulative, t0, t1, width)


def gantt_matrix(
    ds: BundledDataset,
    t0: int,
    t1: int,
    width: int,
    loc0: int = 0,
    loc1: int | None = None,
    selection: Selection | None = None,
) -> GanttMatrix:
    """Per-location pixel cells: overlap count, the single covering guid
    when the count is exactly one, and the busy fraction of the pixel."""
    check_range(t0, t1, width)
    if loc1 is None:
        loc1 = len(ds.locations) - 1
    if loc0 > loc1:
        raise BadRangeError(f"empty location range [{loc0}, {loc1}]")
    ds.lane(loc0)
    ds.lane(loc1)
    bounds = pixel_bounds(t0, t1, width)
    ticks = np.diff(bounds).astype(np.float64)
    sel_rows = rows_for_selection(ds, selection) if selection is not None else None

    rows_out: list[GanttRow] = []
    for l in range(loc0, loc1 + 1):
        lane = ds.lanes[l]
        counts = lane.overlap_counts(bounds)
        busy = np.diff(np.asarray(lane.profile.cumulative(bounds), dtype=np.float64))
        busy_fraction = np.clip(
            np.divide(busy, ticks, out=np.zeros(width), where=ticks > 0), 0.0, 1.0
        )
        solo = np.full(width, -1, dtype=np.int64)
        for p in np.nonzero(counts == 1)[0]:
            row = lane.latest_cover_in(int(bounds[p]), int(bounds[p + 1]))
            if row >= 0:
                solo[p] = ds.cols.guid[row]
        selected = None
        if sel_rows is not None:
            lane_sel = sel_rows[ds.cols.location[sel_rows] == l]
            sel_enters = ds.cols.enter[lane_sel]
            sel_leaves = np.sort(ds.cols.leave[lane_sel])
            started = np.searchsorted(sel_enters, bounds[1:], side="left")
            finished = np.searchsorted(sel_leaves, bounds[:-1], side="right")
            selected = (started - finished) > 0
        rows_out.append(
            GanttRow(
                location=l,
                label=ds.locations[l].label,
                counts=counts,
                solo_guid=solo,
                busy_fraction=busy_fraction,
                selected=selected,
            )
        )
    return GanttMatrix(t0=t0, t1=t1, width=width, rows=rows_out)


def histogram(
    ds: BundledDataset,
    bins: int,
    node: int | None = None,
    scale: str = "linear",
) -> HistogramResult:
    """Interval durations binned over [min, max]; last bin closed.

    A node filter keeps only intervals whose context equals that node
    exactly. No matching intervals yields the empty marker, not an error.
    """
    if bins < 1:
        raise BadRangeError(f"bins must be >= 1, got {bins}")
    if scale not in ("linear", "log"):
        raise BadRangeError(f"scale must be linear or log, got {scale!r}")
    if node is not None:
        rows = ds.node_rows[ds.tree.node(node).node_id]
        durations = ds.cols.durations[rows]
    else:
        durations = ds.cols.durations
    if len(durations) == 0:
        return HistogramResult(
            bin_edges=np.empty(0), counts=np.empty(0, dtype=np.int64),
            scale=scale, filter_node=node,
        )
    lo = float(durations.min())
    hi = float(durations.max())
    if lo == hi:
        edges = np.array([lo - 0.5, lo + 0.5])
        counts = np.array([len(durations)], dtype=np.int64)
        return HistogramResult(edges, counts, scale, node)
    if scale == "log":
        edges = np.power(10.0, np.linspace(math.log10(lo), math.log10(hi), bins + 1))
        edges[0] = lo
        edges[-1] = hi
        if np.any(np.diff(edges) <= 0):
            edges = np.unique(edges)
    else:
        edges = np.linspace(lo, hi, bins + 1)
    counts, edges = np.histogram(durations, bins=edges)
    return HistogramResult(edges, counts.astype(np.int64), scale, node)


def _greedy_rows(starts: list[int], ends: list[int]) -> list[int]:
    """Lowest-index free row per bar, processing bars in start order."""
    rows = [0] * len(starts)
    free: list[int] = []
    busy: list[tuple[int, int]] = []
    next_row = 0
    for i in range(len(starts)):
        while busy and busy[0][0] <= starts[i]:
            _, r = heapq.heappop(busy)
            heapq.heappush(free, r)
        if free:
            r = heapq.heappop(free)
        else:
            r = next_row
            next_row += 1
        rows[i] = r
        heapq.heappush(busy, (ends[i], r))
    return rows


def aggregated_gantt(
    ds: BundledDataset, node: int, t0: int, t1: int, width: int
) -> tuple[list[AggBar], int]:
    """One bar per node instance spanning the instance and all of its
    descendant intervals, with greedy non-colliding row layout.

    Rows are assigned over every instance so panning never reshuffles
    them; the returned list keeps only bars overlapping [t0, t1).
    Returns (bars sorted by start, total row count).
    """
    check_range(t0, t1, width)
    guids = ds.tree.instances[ds.tree.node(node).node_id]
    members_per_bar: list[np.ndarray] = []
    extents: list[tuple[int, int, Guid]] = []
    for g in guids:
        row = ds.row_for_guid(g)
        desc_rows = ds.descendant_rows(g)
        member_rows = np.concatenate(([row], desc_rows)) if len(desc_rows) else np.array([row])
        start = int(ds.cols.enter[member_rows].min())
        end = int(ds.cols.leave[member_rows].max())
        members_per_bar.append(member_rows)
        extents.append((start, end, g))
    order = sorted(range(len(extents)), key=lambda i: (extents[i][0], extents[i][2]))
    row_of = _greedy_rows(
        [extents[i][0] for i in order], [extents[i][1] for i in order]
    )
    total_rows = (max(row_of) + 1) if row_of else 0

    bars: list[AggBar] = []
    for pos, i in enumerate(order):
        start, end, g = extents[i]
        if start >= t1 or end <= t0:
            continue
        profile = ds.profile_for_rows(members_per_bar[i])
        series = _series_from_profile(profile.cumulative, start, end, width)
        bars.append(
            AggBar(instance_guid=g, start=start, end=end, row=row_of[pos], utilization=series)
        )
    return bars, total_rows


def counter_rates(
    ds: BundledDataset, counter: str, t0: int, t1: int, width: int
) -> BoxPlotSeries:
    """Per-pixel min/max/mean/stddev across locations of the counter's
    rate, each location's pixel value being the time-weighted mean rate.

    Pixels no location covers are NaN (absent). Stddev is population
    stddev across the locations covering that pixel.
    """
    check_range(t0, t1, width)
    cid = ds.counter_id(counter)
    bounds = pixel_bounds(t0, t1, width)
    location_count = len(ds.locations)
    per_location = np.full((location_count, width), np.nan)
    for (loc, c), series in ds.counter_series.items():
        if c != cid:
            continue
        per_location[loc] = series.pixel_rates(bounds)
    present = ~np.isnan(per_location)
    n = present.sum(axis=0)
    covered = n > 0
    filled = np.where(present, per_location, 0.0)
    sums = filled.sum(axis=0)
    means = np.full(width, np.nan)
    np.divide(sums, n, out=means, where=covered)
    sq = np.full(width, np.nan)
    np.divide((filled**2).sum(axis=0), n, out=sq, where=covered)
    variance = np.maximum(sq - means**2, 0.0)
    stddevs = np.sqrt(variance, out=np.full(width, np.nan), where=covered)
    masked = np.where(present, per_location, np.inf)
    mins = np.where(covered, masked.min(axis=0), np.nan)
    masked = np.where(present, per_location, -np.inf)
    maxs = np.where(covered, masked.max(axis=0), np.nan)
    return BoxPlotSeries(
        t0=t0, t1=t1, width=width, counter=counter,
        mins=mins, maxs=maxs, means=means, stddevs=stddevs,
        per_location=per_location, covered=covered,
    )


def dependency_chain(
    ds: BundledDataset,
    guid: Guid,
    include_descendants: bool = False,
    cap: int = DESCENDANT_CAP,
) -> DependencyChain:
    """Root-first ancestors and direct children; the full descendant
    closure only on request, capped with a truncation flag."""
    from tracescope.tree import descendants_of

    row = ds.row_for_guid(guid)
    chain: list[Guid] = []
    seen = {guid}
    cur_row = row
    while ds.cols.has_parent[cur_row]:
        p = int(ds.cols.parent[cur_row])
        if p in seen or p not in ds.cols.row_of_guid:
            break
        chain.append(p)
        seen.add(p)
        cur_row = ds.cols.row_of_guid[p]
    chain.reverse()
    children = ds.child_guids.children_of(guid)
    descendants = None
    truncated = False
    if include_descendants:
        descendants, truncated = descendants_of(
            ds.child_guids, guid, known=ds.cols.row_of_guid, cap=cap
        )
    return DependencyChain(
        guid=guid,
        ancestors=chain,
        children=children,
        descendants=descendants,
        descendants_truncated=truncated,
    )


def interval_at(ds: BundledDataset, time: int, location: int) -> Interval | None:
    """The interval covering `time` on that location; when several
    overlap, the latest enter wins. None when the tick is idle."""
    lane = ds.lane(location)
    row = lane.latest_cover(time)
    return ds.cols.interval(row) if row >= 0 else None
