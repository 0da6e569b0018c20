"""Interactive performance analysis for task-parallel execution traces.

Bundles raw traces into fast query indices (summed area tables, an
interval tree, an execution tree) and answers aggregate temporal and
structural queries at pixel granularity, either in-process or over HTTP.
"""

__version__ = "0.1.0"

from tracescope.model import (  # noqa: F401
    CounterSample,
    DatasetMeta,
    Interval,
    Location,
    StringTable,
)
