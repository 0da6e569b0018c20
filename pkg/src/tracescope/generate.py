"""Deterministic synthetic trace generator.

Produces canonical-format traces with a fork-style GUID hierarchy (every
non-root interval's parent starts earlier) plus linear accumulator
counters, and reports the exact ground truth from its own bookkeeping so
tests can verify bundling independently of the ingest pipeline.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

PRIMITIVE_POOL = [
    "run",
    "loop_body",
    "fork",
    "gemm",
    "reduce",
    "scan",
    "halo_exchange",
    "join",
]


@dataclass
class GroundTruth:
    """Exact per-trace facts recorded while generating."""

    location_count: int
    interval_count: int
    span: int
    busy_per_location: list[int]
    context_counts: dict[tuple[str, ...], int]
    durations: list[int]
    counters: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "location_count": self.location_count,
            "interval_count": self.interval_count,
            "span": self.span,
            "busy_per_location": self.busy_per_location,
            "context_counts": [
                [list(path), count]
                for path, count in sorted(self.context_counts.items())
            ],
            "durations": self.durations,
            "counters": self.counters,
        }


@dataclass
class _Emitted:
    guid: int
    enter: int
    depth: int
    path: tuple[str, ...]


def generate(
    seed: int,
    locations: int = 8,
    intervals: int = 1000,
    max_depth: int = 4,
    counters: dict[str, float] | None = None,
    samples_per_location: int = 20,
    allow_overlap: bool = False,
) -> tuple[list[str], GroundTruth]:
    """Build trace lines and ground truth for one seed.

    Same arguments always produce byte-identical lines. Locations get
    non-overlapping intervals unless allow_overlap is set; counter values
    follow v = coefficient * time exactly.
    """
    if intervals < 1 or locations < 1:
        raise ValueError("need at least one interval and one location")
    rng = random.Random(seed)
    counters = counters or {}

    lines = [f"L {i} {i // 2} {i % 2}" for i in range(locations)]
    events: list[tuple[int, int, str]] = []
    seq = 0

    cursors = [0] * locations
    busy = [0] * locations
    context_counts: dict[tuple[str, ...], int] = {}
    durations: list[int] = []
    emitted: list[_Emitted] = []

    for n in range(intervals):
        loc = rng.randrange(locations)
        gap = 0 if n == 0 else rng.randint(0, 5)
        enter = cursors[loc] + gap
        if allow_overlap and n > 0:
            enter = max(0, enter - rng.randint(0, 20))
        dur = rng.randint(1, 100)
        leave = enter + dur
        cursors[loc] = max(cursors[loc], leave)
        guid = n + 1

        parent: _Emitted | None = None
        if emitted and rng.random() >= 0.2:
            for _ in range(30):
                cand = emitted[rng.randrange(len(emitted))]
                if cand.enter < enter and cand.depth < max_depth:
                    parent = cand
                    break
        name = rng.choice(PRIMITIVE_POOL)
        path = (parent.path + (name,)) if parent else (name,)
        depth = parent.depth + 1 if parent else 1

        parent_field = str(parent.guid) if parent else "-"
        events.append((enter, seq, f"E {enter} {loc} {guid} {parent_field} {name}"))
        seq += 1
        events.append((leave, seq, f"X {leave} {loc} {guid}"))
        seq += 1

        busy[loc] += dur
        durations.append(dur)
        context_counts[path] = context_counts.get(path, 0) + 1
        emitted.append(_Emitted(guid, enter, depth, path))

    span = max(cursors)
    for name in sorted(counters):
        coeff = counters[name]
        for loc in range(locations):
            times = {0, span}
            for _ in range(samples_per_location):
                times.add(rng.randint(0, span))
            for t in sorted(times):
                events.append((t, seq, f"C {t} {loc} {name} {coeff * t!r}"))
                seq += 1

    events.sort(key=lambda e: (e[0], e[1]))
    lines.extend(line for _, _, line in events)

    truth = GroundTruth(
        location_count=locations,
        interval_count=intervals,
        span=span,
        busy_per_location=busy,
        context_counts=context_counts,
        durations=sorted(durations),
        counters=dict(counters),
    )
    return lines, truth


def write_trace(
    path,
    seed: int,
    locations: int = 8,
    intervals: int = 1000,
    max_depth: int = 4,
    counters: dict[str, float] | None = None,
    samples_per_location: int = 20,
    allow_overlap: bool = False,
) -> GroundTruth:
    """Generate and write a trace file; returns its ground truth."""
    lines, truth = generate(
        seed,
        locations=locations,
        intervals=intervals,
        max_depth=max_depth,
        counters=counters,
        samples_per_location=samples_per_location,
        allow_overlap=allow_overlap,
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
    return truth
