"""Core domain types shared by every other module. No I/O here.

Times are integer ticks (nanoseconds) relative to the trace epoch; ingest
normalizes so the earliest surviving event sits at tick 0. All types are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

# Ticks since trace epoch (nanoseconds). Plain ints keep the math exact.
TimePoint = int
Guid = int


@dataclass(frozen=True)
class Location:
    """A computational resource: a core/hardware-thread pair.

    `index` is the dense id (0..L-1) used everywhere internally; the label
    renders as "core-thread" for display.
    """

    index: int
    core_id: int
    thread_id: int

    @property
    def label(self) -> str:
        return f"{self.core_id}-{self.thread_id}"


@dataclass(frozen=True)
class Interval:
    """One durational trace event.

    `primitive` is an interned name id (see StringTable); `location` is a
    dense Location index. `parent` is the GUID of the spawning interval, or
    None when it was not collected.
    """

    guid: Guid
    parent: Guid | None
    location: int
    primitive: int
    enter: TimePoint
    leave: TimePoint

    def __post_init__(self) -> None:
        if self.leave <= self.enter:
            raise ValueError(f"interval {self.guid}: leave {self.leave} must exceed enter {self.enter}")
        if self.parent == self.guid:
            raise ValueError(f"interval {self.guid} cannot be its own parent")

    @property
    def duration(self) -> int:
        return self.leave - self.enter


def duration(interval: Interval) -> int:
    """Ticks between enter and leave. Always positive for a valid interval."""
    return interval.leave - interval.enter


@dataclass(frozen=True)
class CounterSample:
    """One sample of a monotone accumulator on one location.

    `counter` is an interned name id. Accumulators may reset mid-trace
    (value decreases); that is tolerated here and handled at rate
    derivation, not treated as a model error.
    """

    location: int
    counter: int
    time: TimePoint
    value: float


class StringTable:
    """Bijective interning of names to dense integer ids.

    Ids are assigned in first-appearance order, which makes interning
    deterministic for a fixed input ordering.
    """

    def __init__(self, names: Iterable[str] = ()):
        self._names: list[str] = []
        self._ids: dict[str, int] = {}
        for name in names:
            self.intern(name)

    def intern(self, name: str) -> int:
        found = self._ids.get(name)
        if found is not None:
            return found
        new_id = len(self._names)
        self._names.append(name)
        self._ids[name] = new_id
        return new_id

    def id_of(self, name: str) -> int | None:
        return self._ids.get(name)

    def name_of(self, name_id: int) -> str:
        return self._names[name_id]

    def names(self) -> list[str]:
        return list(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StringTable) and self._names == other._names


@dataclass
class DatasetMeta:
    """Descriptive metadata for one bundled dataset.

    After normalization time_begin is always 0 and time_end is the maximum
    over interval leave times and counter sample times.
    """

    dataset_id: str
    label: str
    time_begin: TimePoint
    time_end: TimePoint
    location_count: int
    interval_count: int
    primitive_names: list[str] = field(default_factory=list)
    counter_names: list[str] = field(default_factory=list)
    source_files: list[tuple[str, str]] | None = None

    @property
    def span(self) -> int:
        return self.time_end - self.time_begin

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "label": self.label,
            "time_begin": self.time_begin,
            "time_end": self.time_end,
            "location_count": self.location_count,
            "interval_count": self.interval_count,
            "primitive_names": list(self.primitive_names),
            "counter_names": list(self.counter_names),
            "source_files": [p for p, _ in self.source_files] if self.source_files else [],
        }
