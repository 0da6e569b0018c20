"""Exception types shared across the package."""

from __future__ import annotations


class TracescopeError(Exception):
    """Base class for all errors raised by this package."""

    code = "INTERNAL"


class ParseIssue:
    """One malformed line: where it was and why it was rejected."""

    __slots__ = ("line_no", "byte_offset", "message")

    def __init__(self, line_no: int, byte_offset: int, message: str):
        self.line_no = line_no
        self.byte_offset = byte_offset
        self.message = message

    def __str__(self) -> str:
        return f"line {self.line_no} (byte {self.byte_offset}): {self.message}"

    def __repr__(self) -> str:
        return f"ParseIssue({self.line_no}, {self.byte_offset}, {self.message!r})"


class TraceParseError(TracescopeError):
    """Hard parse failures, aggregated. Only the first `REPORT_CAP` are kept."""

    code = "PARSE_ERROR"
    REPORT_CAP = 100

    def __init__(self, issues: list[ParseIssue], total: int | None = None):
        self.issues = issues[: self.REPORT_CAP]
        self.total = total if total is not None else len(issues)
        shown = "\n".join(str(i) for i in self.issues)
        suffix = "" if self.total <= self.REPORT_CAP else f"\n... {self.total - self.REPORT_CAP} more"
        super().__init__(f"{self.total} parse error(s):\n{shown}{suffix}")


class DuplicateGuidError(TracescopeError):
    """Two enter events carried the same GUID."""

    code = "DUPLICATE_GUID"

    def __init__(self, guid: int, line_no: int | None = None):
        self.guid = guid
        self.line_no = line_no
        where = f" (second enter at line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate GUID {guid} on two enter events{where}")


class EventOrderError(TracescopeError):
    """Per-location timestamps out of order beyond the 1-event lookahead."""

    code = "EVENT_ORDER"


class UnknownDatasetError(TracescopeError):
    code = "UNKNOWN_DATASET"

    def __init__(self, dataset_id: str):
        self.dataset_id = dataset_id
        super().__init__(f"unknown dataset {dataset_id!r}")


class UnsupportedVersionError(TracescopeError):
    code = "UNSUPPORTED_VERSION"

    def __init__(self, found: int, supported: int):
        self.found = found
        self.supported = supported
        super().__init__(f"bundle format version {found} not supported (this build reads {supported})")


class UnknownNodeError(TracescopeError):
    code = "UNKNOWN_NODE"

    def __init__(self, node_id: int):
        self.node_id = node_id
        super().__init__(f"unknown tree node {node_id}")


class UnknownGuidError(TracescopeError):
    code = "UNKNOWN_GUID"

    def __init__(self, guid: int):
        self.guid = guid
        super().__init__(f"unknown interval GUID {guid}")


class UnknownCounterError(TracescopeError):
    code = "UNKNOWN_COUNTER"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown counter {name!r}")


class UnknownLocationError(TracescopeError):
    code = "UNKNOWN_LOCATION"

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"unknown location index {index}")


class BadRangeError(TracescopeError):
    code = "BAD_RANGE"


class StorageFullError(TracescopeError):
    """Disk-full while writing a bundle, reported distinctly from other I/O errors."""

    code = "STORAGE_FULL"


class InvalidLabelError(TracescopeError):
    code = "BAD_LABEL"


class CorruptBundleError(TracescopeError):
    """A persisted bundle failed its checksum or cross-index integrity check."""

    code = "CORRUPT_BUNDLE"


class BundlingInProgressError(TracescopeError):
    """The dataset exists but its bundle is still being written."""

    code = "BUNDLING"

    def __init__(self, dataset_id: str):
        self.dataset_id = dataset_id
        super().__init__(f"dataset {dataset_id} is still bundling")


class UnknownJobError(TracescopeError):
    code = "UNKNOWN_JOB"

    def __init__(self, job_id: str):
        self.job_id = job_id
        super().__init__(f"unknown job {job_id}")


class SupersededError(TracescopeError):
    """A newer view generation arrived; this request's work was dropped."""

    code = "SUPERSEDED"
