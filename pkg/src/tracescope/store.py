"""On-disk dataset catalog.

Each dataset lives in <data_dir>/<dataset_id>/ with a plain-text
manifest, numpy archives for columnar data, and JSON for names, sources
and warnings. Bundles are written into a temp directory and published
with one atomic rename, so a crash never leaves a half-visible dataset.
dataset_id is the first 16 hex chars of the sha256 of the raw trace
bytes, which makes re-bundling identical input a cache hit.
"""

from __future__ import annotations

import errno
import hashlib
import json
import os
import shutil
import tempfile
import threading
import uuid
from pathlib import Path

import numpy as np

from tracescope.dataset import BundledDataset, assemble
from tracescope.errors import (
    CorruptBundleError,
    InvalidLabelError,
    StorageFullError,
    TracescopeError,
    UnknownDatasetError,
    UnsupportedVersionError,
)
from tracescope.indices import DEFAULT_BIN_COUNT
from tracescope.ingest import RawTrace, ingest_trace
from tracescope.model import CounterSample, DatasetMeta, Interval, Location, StringTable

FORMAT_VERSION = 1

_DATA_FILES = (
    "intervals.npz",
    "tree.npz",
    "counters.npz",
    "sats.npz",
    "names.json",
    "sources.json",
    "warnings.json",
)


def dataset_id_for(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()[:16]


def _check_label(label: str) -> str:
    label = label.strip()
    if not label or any(c in label for c in "\r\n"):
        raise InvalidLabelError("label must be non-empty single-line text")
    return label


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class DatasetStore:
    """Catalog of bundled datasets under one data directory.

    Catalog mutations are serialized by a lock; loaded datasets are
    immutable and cached. Bundling different inputs may run concurrently;
    bundling the same input concurrently collapses to one build.
    """

    def __init__(self, data_dir: str | Path, bin_count: int = DEFAULT_BIN_COUNT):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.bin_count = bin_count
        self._lock = threading.Lock()
        self._loaded: dict[str, BundledDataset] = {}
        self._inflight: dict[str, threading.Event] = {}

    # Bundling

    def bundle(self, trace_path: str | Path, label: str, bin_count: int | None = None) -> tuple[str, bool]:
        """Bundle a trace file; returns (dataset_id, reused)."""
        label = _check_label(label)
        trace_path = Path(trace_path)
        raw_bytes = trace_path.read_bytes()
        ds_id = dataset_id_for(raw_bytes)
        return self._bundle_common(ds_id, trace_path, label, bin_count)

    def bundle_bytes(
        self, raw_bytes: bytes, label: str, filename: str = "upload.trace", bin_count: int | None = None
    ) -> tuple[str, bool]:
        """Bundle an uploaded trace held in memory; returns (dataset_id, reused)."""
        label = _check_label(label)
        ds_id = dataset_id_for(raw_bytes)
        with self._lock:
            if self._dir_of(ds_id).exists():
                return ds_id, True
        with tempfile.TemporaryDirectory(prefix="tracescope-upload-") as tmp:
            trace_path = Path(tmp) / (Path(filename).name or "upload.trace")
            trace_path.write_bytes(raw_bytes)
            return self._bundle_common(ds_id, trace_path, label, bin_count)

    def _bundle_common(
        self, ds_id: str, trace_path: Path, label: str, bin_count: int | None
    ) -> tuple[str, bool]:
        with self._lock:
            if self._dir_of(ds_id).exists():
                return ds_id, True
            done = self._inflight.get(ds_id)
            if done is None:
                done = threading.Event()
                self._inflight[ds_id] = done
                owner = True
            else:
                owner = False
        if not owner:
            done.wait()
            if self._dir_of(ds_id).exists():
                return ds_id, True
            raise TracescopeError(f"concurrent bundling of {ds_id} failed")
        try:
            raw = ingest_trace(trace_path)
            ds = assemble(raw, ds_id, label, bin_count or self.bin_count)
            self._persist(ds, raw)
            return ds_id, False
        finally:
            with self._lock:
                self._inflight.pop(ds_id, None)
            done.set()

    def is_bundling(self, ds_id: str) -> bool:
        with self._lock:
            return ds_id in self._inflight

    # Persistence

    def _dir_of(self, ds_id: str) -> Path:
        return self.data_dir / ds_id

    def _persist(self, ds: BundledDataset, raw: RawTrace) -> None:
        final = self._dir_of(ds.meta.dataset_id)
        tmp = self.data_dir / f".tmp-{ds.meta.dataset_id}-{uuid.uuid4().hex[:8]}"
        try:
            tmp.mkdir(parents=True)
            self._write_files(tmp, ds, raw)
            os.rename(tmp, final)
        except OSError as exc:
            shutil.rmtree(tmp, ignore_errors=True)
            if exc.errno == errno.ENOSPC:
                raise StorageFullError(f"no space writing bundle {ds.meta.dataset_id}") from exc
            if final.exists():
                return
            raise

    def _write_files(self, out: Path, ds: BundledDataset, raw: RawTrace) -> None:
        cols = ds.cols
        np.savez_compressed(
            out / "intervals.npz",
            guid=cols.guid,
            parent=cols.parent,
            has_parent=cols.has_parent,
            location=cols.location,
            primitive=cols.primitive,
            enter=cols.enter,
            leave=cols.leave,
            node_id=cols.node_id,
        )
        nodes = ds.tree.nodes
        np.savez_compressed(
            out / "tree.npz",
            parent_node=np.array(
                [n.parent_node if n.parent_node is not None else -1 for n in nodes],
                dtype=np.int32,
            ),
            primitive=np.array([n.primitive for n in nodes], dtype=np.int32),
            interval_count=np.array([n.interval_count for n in nodes], dtype=np.int64),
            inclusive=np.array([n.inclusive_duration for n in nodes], dtype=np.int64),
            subtree=np.array([n.subtree_duration for n in nodes], dtype=np.int64),
            unresolved=np.int64(ds.tree.unresolved_parent_count),
        )
        n = len(raw.counters)
        np.savez_compressed(
            out / "counters.npz",
            location=np.fromiter((c.location for c in raw.counters), dtype=np.int32, count=n),
            counter=np.fromiter((c.counter for c in raw.counters), dtype=np.int32, count=n),
            time=np.fromiter((c.time for c in raw.counters), dtype=np.int64, count=n),
            value=np.fromiter((c.value for c in raw.counters), dtype=np.float64, count=n),
        )
        np.savez_compressed(
            out / "sats.npz",
            total_prefix=np.asarray(ds.total_sat.prefix, dtype=np.int64),
            duration_prefix=np.asarray(ds.duration_sat.prefix, dtype=np.int64),
            bin_count=np.int64(ds.bin_count),
        )
        names = {
            "primitives": ds.primitives.names(),
            "counters": ds.counter_names.names(),
            "locations": [[loc.index, loc.core_id, loc.thread_id] for loc in ds.locations],
            "source_paths": list(raw.source_paths),
        }
        (out / "names.json").write_text(
            json.dumps(names, sort_keys=True), encoding="utf-8"
        )
        (out / "sources.json").write_text(
            json.dumps([[p, t] for p, t in ds.source_files]), encoding="utf-8"
        )
        warnings = {
            "ingest": [[c, m] for c, m in raw.warnings],
            "tree": [[c, m] for c, m in ds.tree.warnings],
        }
        (out / "warnings.json").write_text(
            json.dumps(warnings), encoding="utf-8"
        )
        manifest = {
            "format_version": str(FORMAT_VERSION),
            "dataset_id": ds.meta.dataset_id,
            "label": ds.meta.label,
            "time_begin": str(ds.meta.time_begin),
            "time_end": str(ds.meta.time_end),
            "location_count": str(ds.meta.location_count),
            "interval_count": str(ds.meta.interval_count),
            "bin_count": str(ds.bin_count),
        }
        for name in _DATA_FILES:
            manifest[f"sha256.{name}"] = _sha256_file(out / name)
        lines = [f"{k}={v}" for k, v in sorted(manifest.items())]
        (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    @staticmethod
    def _read_manifest(path: Path) -> dict[str, str]:
        manifest: dict[str, str] = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            key, sep, value = line.partition("=")
            if sep:
                manifest[key] = value
        return manifest

    # Catalog

    def list_datasets(self) -> list[DatasetMeta]:
        metas = []
        for child in sorted(self.data_dir.iterdir()) if self.data_dir.exists() else []:
            if not child.is_dir() or child.name.startswith("."):
                continue
            if not (child / "manifest.txt").exists():
                continue
            try:
                metas.append(self._meta_from_dir(child))
            except (OSError, KeyError, ValueError, json.JSONDecodeError):
                continue
        metas.sort(key=lambda m: (m.label, m.dataset_id))
        return metas

    def _meta_from_dir(self, child: Path) -> DatasetMeta:
        manifest = self._read_manifest(child / "manifest.txt")
        names = json.loads((child / "names.json").read_text(encoding="utf-8"))
        sources = json.loads((child / "sources.json").read_text(encoding="utf-8"))
        return DatasetMeta(
            dataset_id=manifest["dataset_id"],
            label=manifest["label"],
            time_begin=int(manifest["time_begin"]),
            time_end=int(manifest["time_end"]),
            location_count=int(manifest["location_count"]),
            interval_count=int(manifest["interval_count"]),
            primitive_names=list(names["primitives"]),
            counter_names=list(names["counters"]),
            source_files=[p for p, _ in sources],
        )

    def load(self, ds_id: str) -> BundledDataset:
        """Load a bundle, verifying checksums and index integrity.

        Profiles and search structures are rebuilt deterministically from
        the stored columns; the stored tree and prefix arrays must match
        the rebuild exactly or the bundle is reported corrupt.
        """
        with self._lock:
            cached = self._loaded.get(ds_id)
        if cached is not None:
            return cached
        dirp = self._dir_of(ds_id)
        if not (dirp / "manifest.txt").exists():
            raise UnknownDatasetError(ds_id)
        manifest = self._read_manifest(dirp / "manifest.txt")
        version = int(manifest.get("format_version", "-1"))
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(version, FORMAT_VERSION)
        for name in _DATA_FILES:
            want = manifest.get(f"sha256.{name}")
            if want is None or not (dirp / name).exists():
                raise CorruptBundleError(f"{ds_id}: missing {name}")
            if _sha256_file(dirp / name) != want:
                raise CorruptBundleError(f"{ds_id}: checksum mismatch on {name}")

        ds = self._reassemble(dirp, manifest)
        with self._lock:
            self._loaded.setdefault(ds_id, ds)
            return self._loaded[ds_id]

    def _reassemble(self, dirp: Path, manifest: dict[str, str]) -> BundledDataset:
        names = json.loads((dirp / "names.json").read_text(encoding="utf-8"))
        sources = json.loads((dirp / "sources.json").read_text(encoding="utf-8"))
        warnings = json.loads((dirp / "warnings.json").read_text(encoding="utf-8"))
        primitives = StringTable()
        for name in names["primitives"]:
            primitives.intern(name)
        counter_names = StringTable()
        for name in names["counters"]:
            counter_names.intern(name)
        locations = [Location(i, c, t) for i, c, t in names["locations"]]

        with np.load(dirp / "intervals.npz") as iv:
            intervals = [
                Interval(
                    guid=int(iv["guid"][r]),
                    parent=int(iv["parent"][r]) if iv["has_parent"][r] else None,
                    location=int(iv["location"][r]),
                    primitive=int(iv["primitive"][r]),
                    enter=int(iv["enter"][r]),
                    leave=int(iv["leave"][r]),
                )
                for r in range(len(iv["guid"]))
            ]
            stored_node_id = iv["node_id"].copy()
        with np.load(dirp / "counters.npz") as cn:
            counters = [
                CounterSample(
                    location=int(cn["location"][r]),
                    counter=int(cn["counter"][r]),
                    time=int(cn["time"][r]),
                    value=float(cn["value"][r]),
                )
                for r in range(len(cn["location"]))
            ]

        raw = RawTrace(
            intervals=intervals,
            counters=counters,
            locations=locations,
            warnings=[(c, m) for c, m in warnings["ingest"]],
            primitives=primitives,
            counter_names=counter_names,
            source_paths=list(names["source_paths"]),
            source_files=[(p, t) for p, t in sources],
        )
        ds = assemble(
            raw,
            manifest["dataset_id"],
            manifest["label"],
            int(manifest["bin_count"]),
        )

        ds_id = manifest["dataset_id"]
        if not np.array_equal(ds.cols.node_id, stored_node_id):
            raise CorruptBundleError(f"{ds_id}: tree attribution mismatch")
        with np.load(dirp / "tree.npz") as tr:
            rebuilt_subtree = np.array(
                [n.subtree_duration for n in ds.tree.nodes], dtype=np.int64
            )
            if not np.array_equal(rebuilt_subtree, tr["subtree"]):
                raise CorruptBundleError(f"{ds_id}: tree duration mismatch")
        with np.load(dirp / "sats.npz") as st:
            if not np.array_equal(
                np.asarray(ds.total_sat.prefix, dtype=np.int64), st["total_prefix"]
            ):
                raise CorruptBundleError(f"{ds_id}: utilization index mismatch")
            if not np.array_equal(
                np.asarray(ds.duration_sat.prefix, dtype=np.int64),
                st["duration_prefix"],
            ):
                raise CorruptBundleError(f"{ds_id}: duration index mismatch")
        return ds

    def delete(self, ds_id: str) -> None:
        with self._lock:
            self._loaded.pop(ds_id, None)
            dirp = self._dir_of(ds_id)
            if not dirp.exists():
                raise UnknownDatasetError(ds_id)
            shutil.rmtree(dirp)
