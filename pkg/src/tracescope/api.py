"""HTTP interface under /api/v1.

Stateless JSON endpoints over the store and query modules. Uploads
return 202 with a job id and bundle in a background thread. Pixel
endpoints widen the requested range by the overdraw factor (default 3x,
clamped to the trace span) and report both the requested and the
actually rendered window; the rendered width keeps the pixel-per-tick
density of the request. Clients may tag requests with a view-generation
counter so a superseded request is dropped with 409 SUPERSEDED.

Pixel value arrays can be fetched as raw little-endian float32 by
sending Accept: application/octet-stream (utilization values and counter
means); the window metadata then arrives in X-Requested-* and
X-Rendered-* headers.
"""

from __future__ import annotations

import math
import threading
import uuid
from collections import Counter
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from tracescope import query as q
from tracescope.dataset import BundledDataset
from tracescope.errors import (
    BadRangeError,
    BundlingInProgressError,
    SupersededError,
    TraceParseError,
    TracescopeError,
    UnknownJobError,
)
from tracescope.model import Interval
from tracescope.store import DatasetStore

DEFAULT_TREE_DEPTH = 5

_STATUS_FOR_CODE = {
    "BAD_RANGE": 400,
    "BAD_LABEL": 400,
    "PARSE_ERROR": 400,
    "DUPLICATE_GUID": 400,
    "EVENT_ORDER": 400,
    "UNKNOWN_DATASET": 404,
    "UNKNOWN_NODE": 404,
    "UNKNOWN_GUID": 404,
    "UNKNOWN_COUNTER": 404,
    "UNKNOWN_LOCATION": 404,
    "UNKNOWN_JOB": 404,
    "BUNDLING": 409,
    "SUPERSEDED": 409,
    "STORAGE_FULL": 507,
}


@dataclass
class Job:
    job_id: str
    state: str
    label: str
    dataset_id: str | None = None
    reused: bool = False
    warning_counts: dict[str, int] | None = None
    error: dict | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "label": self.label,
            "dataset_id": self.dataset_id,
            "reused": self.reused,
            "warning_counts": self.warning_counts,
            "error": self.error,
        }


class JobRegistry:
    """Background bundling jobs keyed by id."""

    def __init__(self, store: DatasetStore):
        self._store = store
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def launch(self, raw: bytes, label: str, filename: str) -> str:
        job = Job(job_id=uuid.uuid4().hex[:12], state="queued", label=label)
        with self._lock:
            self._jobs[job.job_id] = job
        worker = threading.Thread(
            target=self._run, args=(job, raw, label, filename), daemon=True
        )
        worker.start()
        return job.job_id

    def _run(self, job: Job, raw: bytes, label: str, filename: str) -> None:
        job.state = "running"
        try:
            ds_id, reused = self._store.bundle_bytes(raw, label, filename)
            ds = self._store.load(ds_id)
            job.dataset_id = ds_id
            job.reused = reused
            job.warning_counts = dict(Counter(code for code, _ in ds.warnings))
            job.state = "done"
        except TracescopeError as exc:
            detail: dict = {"code": exc.code, "message": str(exc)}
            if isinstance(exc, TraceParseError):
                detail["issues"] = [
                    {"line": i.line_no, "offset": i.byte_offset, "message": i.message}
                    for i in exc.issues[:20]
                ]
            job.error = detail
            job.state = "failed"
        except Exception as exc:
            job.error = {"code": "INTERNAL", "message": str(exc)}
            job.state = "failed"

    def get(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise UnknownJobError(job_id)
        return job


class ViewGenerations:
    """Latest generation counter per (dataset, view) for cancellation."""

    def __init__(self):
        self._latest: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    def check(self, ds_id: str, view: str | None, gen: int | None) -> None:
        if view is None or gen is None:
            return
        key = (ds_id, view)
        with self._lock:
            latest = self._latest.get(key, -1)
            if gen < latest:
                raise SupersededError(
                    f"view {view!r} generation {gen} superseded by {latest}"
                )
            self._latest[key] = max(latest, gen)


def _floats(arr) -> list:
    return [v if math.isfinite(v) else None for v in np.asarray(arr, dtype=np.float64).tolist()]


def _ints(arr) -> list[int]:
    return [int(v) for v in np.asarray(arr).tolist()]


def _parse_locations(text: str, location_count: int) -> list[int]:
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            lo, sep, hi = part.partition("-")
            if sep:
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise BadRangeError(f"malformed locations {text!r}") from None
    if not out:
        raise BadRangeError(f"empty locations {text!r}")
    return out


def _interval_payload(ds: BundledDataset, iv: Interval) -> dict:
    row = ds.cols.row_of_guid[iv.guid]
    return {
        "guid": iv.guid,
        "parent": iv.parent,
        "primitive": ds.primitives.name_of(iv.primitive),
        "location": iv.location,
        "location_label": ds.locations[iv.location].label,
        "enter": iv.enter,
        "leave": iv.leave,
        "duration": iv.duration,
        "node_id": int(ds.cols.node_id[row]),
    }


def _tree_payload(ds: BundledDataset, depth_limit: int) -> dict:
    nodes_out = []
    queue: list[tuple[int, int]] = [(root, 1) for root in ds.tree.roots]
    idx = 0
    while idx < len(queue):
        nid, depth = queue[idx]
        idx += 1
        node = ds.tree.nodes[nid]
        collapsed = depth >= depth_limit and bool(node.children)
        nodes_out.append(
            {
                "node_id": node.node_id,
                "primitive": ds.primitives.name_of(node.primitive),
                "context": [ds.primitives.name_of(p) for p in node.context],
                "parent": node.parent_node,
                "children": list(node.children),
                "interval_count": node.interval_count,
                "inclusive_duration": node.inclusive_duration,
                "subtree_duration": node.subtree_duration,
                "depth": depth,
                "collapsed": collapsed,
            }
        )
        if not collapsed:
            queue.extend((c, depth + 1) for c in node.children)
    return {
        "depth": depth_limit,
        "node_count": len(ds.tree.nodes),
        "roots": list(ds.tree.roots),
        "nodes": nodes_out,
    }


def _wants_binary(request: Request) -> bool:
    return "application/octet-stream" in request.headers.get("accept", "")


def _window_payload(t0: int, t1: int, width: int) -> dict:
    return {"t0": t0, "t1": t1, "width": width}


def _binary_response(values: np.ndarray, requested: dict, rendered: dict) -> Response:
    return Response(
        content=np.asarray(values, dtype="<f4").tobytes(),
        media_type="application/octet-stream",
        headers={
            "X-Requested-T0": str(requested["t0"]),
            "X-Requested-T1": str(requested["t1"]),
            "X-Requested-Width": str(requested["width"]),
            "X-Rendered-T0": str(rendered["t0"]),
            "X-Rendered-T1": str(rendered["t1"]),
            "X-Rendered-Width": str(rendered["width"]),
        },
    )


def create_app(store: DatasetStore, overdraw: float = q.DEFAULT_OVERDRAW) -> FastAPI:
    app = FastAPI(title="tracescope", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    jobs = JobRegistry(store)
    gens = ViewGenerations()
    app.state.store = store
    app.state.overdraw = overdraw

    @app.exception_handler(TracescopeError)
    async def on_domain_error(request: Request, exc: TracescopeError):
        status = _STATUS_FOR_CODE.get(exc.code, 500)
        return JSONResponse(
            status_code=status,
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "BAD_RANGE", "message": str(exc.errors()[:3])}},
        )

    def dataset(ds_id: str) -> BundledDataset:
        if store.is_bundling(ds_id):
            raise BundlingInProgressError(ds_id)
        return store.load(ds_id)

    def window(ds: BundledDataset, t0: int, t1: int, width: int) -> tuple[int, int, int]:
        q.check_range(t0, t1, width)
        r0, r1 = q.apply_overdraw(t0, t1, overdraw, 0, ds.meta.time_end)
        r0 = min(r0, t0)
        r1 = max(r1, t1)
        rw = max(width, round(width * (r1 - r0) / (t1 - t0)))
        return r0, r1, rw

    # Dataset lifecycle

    @app.get("/api/v1/datasets")
    def list_datasets():
        return [m.to_dict() for m in store.list_datasets()]

    @app.post("/api/v1/datasets", status_code=202)
    async def upload_dataset(file: UploadFile = File(...), label: str = Form(...)):
        raw = await file.read()
        job_id = jobs.launch(raw, label, file.filename or "upload.trace")
        return {"job_id": job_id}

    @app.get("/api/v1/jobs/{job_id}")
    def job_status(job_id: str):
        return jobs.get(job_id).to_dict()

    @app.delete("/api/v1/datasets/{ds_id}")
    def delete_dataset(ds_id: str):
        store.delete(ds_id)
        return {"deleted": ds_id}

    # Pixel queries

    @app.get("/api/v1/datasets/{ds_id}/utilization")
    def get_utilization(
        ds_id: str,
        request: Request,
        t0: int,
        t1: int,
        width: int,
        node: int | None = None,
        locations: str | None = None,
        selection: str | None = None,
        gen: int | None = None,
        view: str | None = None,
    ):
        ds = dataset(ds_id)
        gens.check(ds_id, view, gen)
        r0, r1, rw = window(ds, t0, t1, width)
        loc_list = (
            _parse_locations(locations, len(ds.locations)) if locations else None
        )
        series = q.utilization(ds, r0, r1, rw, node=node, locations=loc_list)
        sel_values = None
        if selection is not None:
            sel = q.parse_selection(selection)
            sel_values = q.selection_utilization(ds, sel, r0, r1, rw).values
        gens.check(ds_id, view, gen)
        requested = _window_payload(t0, t1, width)
        rendered = _window_payload(r0, r1, rw)
        if _wants_binary(request):
            return _binary_response(series.values, requested, rendered)
        body = {
            "requested": requested,
            "rendered": rendered,
            "values": _floats(series.values),
        }
        if sel_values is not None:
            body["selection"] = _floats(sel_values)
        return body

    @app.get("/api/v1/datasets/{ds_id}/gantt")
    def get_gantt(
        ds_id: str,
        t0: int,
        t1: int,
        width: int,
        loc0: int = 0,
        loc1: int | None = None,
        selection: str | None = None,
        gen: int | None = None,
        view: str | None = None,
    ):
        ds = dataset(ds_id)
        gens.check(ds_id, view, gen)
        r0, r1, rw = window(ds, t0, t1, width)
        sel = q.parse_selection(selection) if selection is not None else None
        matrix = q.gantt_matrix(ds, r0, r1, rw, loc0, loc1, selection=sel)
        gens.check(ds_id, view, gen)
        rows = []
        for row in matrix.rows:
            item = {
                "location": row.location,
                "label": row.label,
                "counts": _ints(row.counts),
                "solo_guid": [g if g >= 0 else None for g in _ints(row.solo_guid)],
                "busy_fraction": _floats(row.busy_fraction),
            }
            if row.selected is not None:
                item["selected"] = [bool(v) for v in row.selected.tolist()]
            rows.append(item)
        return {
            "requested": _window_payload(t0, t1, width),
            "rendered": _window_payload(r0, r1, rw),
            "rows": rows,
        }

    @app.get("/api/v1/datasets/{ds_id}/histogram")
    def get_histogram(
        ds_id: str,
        bins: int,
        node: int | None = None,
        scale: str = "linear",
    ):
        ds = dataset(ds_id)
        hist = q.histogram(ds, bins, node=node, scale=scale)
        return {
            "bin_edges": _floats(hist.bin_edges),
            "counts": _ints(hist.counts),
            "empty": hist.empty,
            "scale": hist.scale,
            "node": hist.filter_node,
        }

    @app.get("/api/v1/datasets/{ds_id}/tree")
    def get_tree(ds_id: str, depth: int = DEFAULT_TREE_DEPTH):
        ds = dataset(ds_id)
        if depth < 1:
            raise BadRangeError(f"depth must be >= 1, got {depth}")
        return _tree_payload(ds, depth)

    @app.get("/api/v1/datasets/{ds_id}/agg-gantt")
    def get_agg_gantt(
        ds_id: str,
        node: int,
        t0: int,
        t1: int,
        width: int,
        gen: int | None = None,
        view: str | None = None,
    ):
        ds = dataset(ds_id)
        gens.check(ds_id, view, gen)
        r0, r1, rw = window(ds, t0, t1, width)
        bars, total_rows = q.aggregated_gantt(ds, node, r0, r1, width)
        gens.check(ds_id, view, gen)
        return {
            "requested": _window_payload(t0, t1, width),
            "rendered": _window_payload(r0, r1, rw),
            "rows": total_rows,
            "bars": [
                {
                    "guid": bar.instance_guid,
                    "start": bar.start,
                    "end": bar.end,
                    "row": bar.row,
                    "utilization": {
                        "t0": bar.utilization.t0,
                        "t1": bar.utilization.t1,
                        "width": bar.utilization.width,
                        "values": _floats(bar.utilization.values),
                    },
                }
                for bar in bars
            ],
        }

    # Counters

    @app.get("/api/v1/datasets/{ds_id}/counters")
    def get_counters(ds_id: str):
        ds = dataset(ds_id)
        by_name: dict[str, list[int]] = {}
        for (loc, cid), _series in sorted(ds.counter_series.items()):
            by_name.setdefault(ds.counter_names.name_of(cid), []).append(loc)
        return [
            {"name": name, "locations": sorted(locs)}
            for name, locs in sorted(by_name.items())
        ]

    @app.get("/api/v1/datasets/{ds_id}/counter")
    def get_counter(
        ds_id: str,
        request: Request,
        name: str,
        t0: int,
        t1: int,
        width: int,
        per_location: int = 0,
        gen: int | None = None,
        view: str | None = None,
    ):
        ds = dataset(ds_id)
        gens.check(ds_id, view, gen)
        r0, r1, rw = window(ds, t0, t1, width)
        series = q.counter_rates(ds, name, r0, r1, rw)
        gens.check(ds_id, view, gen)
        requested = _window_payload(t0, t1, width)
        rendered = _window_payload(r0, r1, rw)
        if _wants_binary(request):
            return _binary_response(series.means, requested, rendered)
        body = {
            "requested": requested,
            "rendered": rendered,
            "counter": series.counter,
            "min": _floats(series.mins),
            "max": _floats(series.maxs),
            "mean": _floats(series.means),
            "stddev": _floats(series.stddevs),
            "covered": [bool(v) for v in series.covered.tolist()],
        }
        if per_location:
            body["per_location"] = [_floats(row) for row in series.per_location]
        return body

    # Point lookups

    @app.get("/api/v1/datasets/{ds_id}/interval/{guid}")
    def get_interval(ds_id: str, guid: int):
        ds = dataset(ds_id)
        return _interval_payload(ds, ds.interval_by_guid(guid))

    @app.get("/api/v1/datasets/{ds_id}/interval-at")
    def get_interval_at(ds_id: str, time: int, loc: int):
        ds = dataset(ds_id)
        found = q.interval_at(ds, time, loc)
        return {"interval": _interval_payload(ds, found) if found else None}

    @app.get("/api/v1/datasets/{ds_id}/deps/{guid}")
    def get_deps(ds_id: str, guid: int, descendants: int = 0):
        ds = dataset(ds_id)
        chain = q.dependency_chain(ds, guid, include_descendants=bool(descendants))
        return {
            "guid": chain.guid,
            "ancestors": chain.ancestors,
            "children": chain.children,
            "descendants": chain.descendants,
            "descendants_truncated": chain.descendants_truncated,
        }

    @app.get("/api/v1/datasets/{ds_id}/source")
    def get_source(ds_id: str):
        ds = dataset(ds_id)
        return {
            "files": [{"path": p, "text": t} for p, t in ds.source_files]
        }

    return app
