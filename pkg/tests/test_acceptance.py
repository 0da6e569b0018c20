"""Acceptance gate: end-to-end guarantees checked at fixed tolerances.

Each test covers one shipped guarantee and prints a single PASS/FAIL
line outside pytest's capture so the verdict always reaches the log.
"""

import random
import socket
import statistics
import subprocess
import sys
import time
from contextlib import contextmanager

import httpx
import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import THREE_INTERVAL_TRACE, dataset_from_text, write_trace_text
from tracescope.api import create_app
from tracescope.dataset import assemble
from tracescope.generate import write_trace
from tracescope.ingest import ingest_trace
from tracescope.query import (
    _greedy_rows,
    counter_rates,
    gantt_matrix,
    histogram,
    interval_at,
    parse_selection,
    selection_utilization,
    utilization,
)
from tracescope.store import DatasetStore, dataset_id_for


@contextmanager
def verdict(capsys, label):
    """Print one PASS/FAIL line per guarantee, bypassing pytest capture."""
    note = {}
    try:
        yield note
    except Exception:
        with capsys.disabled():
            print(f"\n[FAIL] {label}", flush=True)
        raise
    extra = f"  ({note['detail']})" if "detail" in note else ""
    with capsys.disabled():
        print(f"\n[PASS] {label}{extra}", flush=True)


def _assemble_file(path, dataset_id, label):
    return assemble(ingest_trace(path), dataset_id, label)


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    """Fifty seeded random traces (1,000 intervals, 8 locations) plus
    the wall-clock cost of building them."""
    base = tmp_path_factory.mktemp("suite")
    start = time.perf_counter()
    datasets = []
    for seed in range(1, 51):
        path = base / f"s{seed}.trace"
        write_trace(path, seed=seed, locations=8, intervals=1000)
        datasets.append(_assemble_file(path, f"suite{seed:011d}", f"s{seed}"))
    return datasets, time.perf_counter() - start


@pytest.fixture(scope="module")
def big(tmp_path_factory):
    """A 30,000-interval 8-location trace for the latency budget."""
    path = tmp_path_factory.mktemp("latency") / "big.trace"
    write_trace(path, seed=88, locations=8, intervals=30_000)
    return _assemble_file(path, "latencycase00000", "big")


def test_sat_and_interval_tree_match_brute_force(suite, capsys):
    datasets, build_seconds = suite
    with verdict(capsys, "index brute-force equivalence") as note:
        start = time.perf_counter()
        for i, ds in enumerate(datasets):
            rng = random.Random(1_000 + i)
            sat = ds.total_sat
            enters = ds.cols.enter
            leaves = ds.cols.leave
            for _ in range(100):
                b0, b1 = sorted(rng.randrange(sat.bin_count + 1) for _ in range(2))
                t0 = min(b0 * sat.bin_width, sat.domain_span)
                t1 = min(b1 * sat.bin_width, sat.domain_span)
                got = sat.range_sum(t0, t1)
                overlap = np.minimum(leaves, t1) - np.maximum(enters, t0)
                want = int(overlap.clip(min=0).sum())
                assert isinstance(got, int)
                assert got == want
                rows = ds.itree.query(t0, t1)
                want_rows = np.nonzero((enters < t1) & (leaves > t0))[0]
                assert np.array_equal(rows, want_rows)
        elapsed = build_seconds + (time.perf_counter() - start)
        assert elapsed < 60.0
        note["detail"] = f"50 traces x 100 aligned ranges, exact, {elapsed:.1f}s"


def _busy_trace(locations, span):
    """One wall-to-wall interval per location: utilization is everywhere
    exactly the location count."""
    lines = [f"L {loc} {loc} {loc}" for loc in range(locations)]
    for loc in range(locations):
        lines.append(f"E 0 {loc} {loc + 1} - spin")
    for loc in range(locations):
        lines.append(f"X {span} {loc} {loc + 1}")
    return "\n".join(lines) + "\n"


def test_utilization_exact_when_fully_busy_and_bounded_by_total(suite, tmp_path, capsys):
    datasets, _ = suite
    with verdict(capsys, "utilization semantics") as note:
        for span, width in ((192_000, 1920), (100_003, 1920), (100_003, 997)):
            ds = dataset_from_text(
                tmp_path, _busy_trace(8, span), name=f"busy-{span}-{width}.trace"
            )
            values = utilization(ds, 0, span, width).values
            assert values.shape == (width,)
            assert np.all(values == 8.0)
        overlays = 0
        for ds in datasets:
            span = ds.meta.time_end
            total = utilization(ds, 0, span, 256).values
            guid = int(ds.cols.guid[len(ds.cols.guid) // 2])
            half = int(ds.durations_sorted[len(ds.durations_sorted) // 2])
            for text in (f"dur:0-{half}", "node:0", f"guid:{guid}"):
                sel = parse_selection(text)
                picked = selection_utilization(ds, sel, 0, span, 256).values
                assert np.all(picked <= total)
                overlays += 1
        note["detail"] = f"busy pixels exact; {overlays} selection overlays bounded"


UNRESOLVED_TRACE = """\
L 0 0 0
E 0 0 1 999 run
X 50 0 1
E 60 0 2 1 leaf
X 70 0 2
"""

CYCLE_TRACE = """\
L 0 0 0
E 0 0 1 2 run
E 10 0 2 1 run
X 30 0 2
X 40 0 1
"""

CHAIN_CYCLE_TRACE = """\
L 0 0 0
E 0 0 1 3 a
E 5 0 2 1 b
E 10 0 3 2 c
E 15 0 4 3 d
X 20 0 4
X 25 0 3
X 30 0 2
X 35 0 1
"""


def test_tree_durations_conserved(suite, tmp_path, capsys):
    datasets, _ = suite
    with verdict(capsys, "tree duration conservation") as note:
        extras = [
            dataset_from_text(tmp_path, text, name=f"edge{i}.trace")
            for i, text in enumerate(
                (UNRESOLVED_TRACE, CYCLE_TRACE, CHAIN_CYCLE_TRACE)
            )
        ]
        assert extras[0].tree.unresolved_parent_count >= 1
        assert any(code == "PARENT_CYCLE" for code, _ in extras[1].tree.warnings)
        for ds in list(datasets) + extras:
            nodes = ds.tree.nodes
            assert sum(n.inclusive_duration for n in nodes) == int(
                ds.cols.durations.sum()
            )
            for n in nodes:
                assert n.subtree_duration == n.inclusive_duration + sum(
                    nodes[c].subtree_duration for c in n.children
                )
        note["detail"] = f"{len(datasets) + len(extras)} fixtures, exact"


def test_counter_rates_recover_constant(tmp_path, capsys):
    with verdict(capsys, "counter rate recovery") as note:
        path = tmp_path / "rated.trace"
        write_trace(path, seed=907, locations=4, intervals=300, counters={"flux": 3.7})
        ds = _assemble_file(path, "ratedcase0000000", "rated")
        res = counter_rates(ds, "flux", 0, ds.meta.time_end, 512)
        cov = res.covered
        assert cov.any()
        worst = 0.0
        for series in (res.means, res.mins, res.maxs):
            rel = np.abs(series[cov] - 3.7) / 3.7
            worst = max(worst, float(rel.max()))
        assert worst < 1e-9

        solo_path = tmp_path / "solo.trace"
        write_trace(
            solo_path, seed=908, locations=1, intervals=120, counters={"flux": 2.25}
        )
        solo = _assemble_file(solo_path, "solocase00000000", "solo")
        res1 = counter_rates(solo, "flux", 0, solo.meta.time_end, 512)
        assert res1.covered.any()
        assert np.all(res1.stddevs[res1.covered] == 0.0)
        note["detail"] = f"max relative error {worst:.2e}; solo stddev identically 0"


def test_greedy_layout_uses_minimum_rows(capsys):
    with verdict(capsys, "greedy layout optimality") as note:
        rng = random.Random(4242)
        for _ in range(100):
            n = rng.randrange(1, 120)
            bars = []
            for _ in range(n):
                s = rng.randrange(0, 900)
                bars.append((s, s + rng.randrange(1, 90)))
            bars.sort()
            starts = [b[0] for b in bars]
            ends = [b[1] for b in bars]
            rows = _greedy_rows(starts, ends)
            by_row = {}
            for i, r in enumerate(rows):
                by_row.setdefault(r, []).append(i)
            for members in by_row.values():
                for a, b in zip(members, members[1:]):
                    assert ends[a] <= starts[b]
            # Ends sort before starts at ties: touching bars do not overlap.
            points = sorted([(s, 1) for s in starts] + [(e, -1) for e in ends])
            depth = peak = 0
            for _, step in points:
                depth += step
                peak = max(peak, depth)
            assert len(by_row) == max(rows) + 1 == peak
        note["detail"] = "100 random bar sets, rows == max overlap"


SMALL_DURATION_TRACE = """\
L 0 0 0
E 0 0 1 - run
X 1 0 1
E 2 0 2 - run
X 3 0 2
E 4 0 3 - run
X 9 0 3
"""


def test_histogram_counts_conserved(suite, tmp_path, capsys):
    datasets, _ = suite
    with verdict(capsys, "histogram count conservation") as note:
        ds = datasets[0]
        n = len(ds.cols.guid)
        for bins in range(1, 65):
            for scale in ("linear", "log"):
                h = histogram(ds, bins, scale=scale)
                assert int(h.counts.sum()) == n
        filtered = histogram(ds, 16, node=0)
        assert int(filtered.counts.sum()) == ds.tree.nodes[0].interval_count

        small = dataset_from_text(tmp_path, SMALL_DURATION_TRACE)
        h2 = histogram(small, 2)
        assert h2.bin_edges.tolist() == [1.0, 3.0, 5.0]
        assert h2.counts.tolist() == [2, 1]
        note["detail"] = "K=1..64 both scales conserve; {1,1,5} -> [2,1]"


def _probe_set(ds_id, span, guid):
    binary = {"Accept": "application/octet-stream"}
    mid0, mid1 = span // 4, span // 2
    root = f"/api/v1/datasets/{ds_id}"
    return [
        (f"{root}/utilization", {"t0": 0, "t1": span, "width": 300}, None),
        (f"{root}/utilization", {"t0": mid0, "t1": mid1, "width": 128}, None),
        (f"{root}/utilization", {"t0": 0, "t1": span, "width": 200, "node": 0}, None),
        (
            f"{root}/utilization",
            {"t0": 0, "t1": span, "width": 200, "locations": "0-1"},
            None,
        ),
        (
            f"{root}/utilization",
            {"t0": 0, "t1": span, "width": 200, "selection": f"guid:{guid}"},
            None,
        ),
        (f"{root}/utilization", {"t0": 0, "t1": span, "width": 300}, binary),
        (f"{root}/gantt", {"t0": 0, "t1": span, "width": 96}, None),
        (
            f"{root}/gantt",
            {"t0": mid0, "t1": mid1, "width": 64, "selection": f"guid:{guid}"},
            None,
        ),
        (f"{root}/gantt", {"t0": 0, "t1": span, "width": 96, "loc0": 1, "loc1": 2}, None),
        (f"{root}/histogram", {"bins": 16}, None),
        (f"{root}/histogram", {"bins": 32, "scale": "log"}, None),
        (f"{root}/histogram", {"bins": 8, "node": 0}, None),
        (f"{root}/tree", {}, None),
        (f"{root}/tree", {"depth": 3}, None),
        (f"{root}/agg-gantt", {"node": 0, "t0": 0, "t1": span, "width": 64}, None),
        (f"{root}/counters", {}, None),
        (f"{root}/counter", {"name": "flux", "t0": 0, "t1": span, "width": 200}, None),
        (
            f"{root}/counter",
            {"name": "flux", "t0": 0, "t1": span, "width": 200, "per_location": 1},
            None,
        ),
        (f"{root}/counter", {"name": "flux", "t0": 0, "t1": span, "width": 200}, binary),
        (f"{root}/interval/{guid}", {}, None),
    ]


def test_bundle_round_trip_byte_identical(tmp_path, capsys):
    with verdict(capsys, "bundle round trip") as note:
        trace = tmp_path / "probe.trace"
        write_trace(trace, seed=55, locations=3, intervals=500, counters={"flux": 2.0})
        ds_id = dataset_id_for(trace.read_bytes())

        # Seed the cache so one server answers from the never-persisted
        # dataset while the other reloads the bundle from disk.
        mem_store = DatasetStore(tmp_path / "mem")
        mem_store._loaded[ds_id] = _assemble_file(trace, ds_id, "probe")

        disk_dir = tmp_path / "disk"
        DatasetStore(disk_dir).bundle(trace, "probe")
        disk_store = DatasetStore(disk_dir)

        ds = mem_store.load(ds_id)
        guid = int(ds.cols.guid[len(ds.cols.guid) // 2])
        probes = _probe_set(ds_id, ds.meta.time_end, guid)
        assert len(probes) == 20

        with TestClient(create_app(mem_store)) as before, TestClient(
            create_app(disk_store)
        ) as after:
            for path, params, headers in probes:
                r0 = before.get(path, params=params, headers=headers)
                r1 = after.get(path, params=params, headers=headers)
                assert r0.status_code == 200
                assert r1.status_code == 200
                assert r0.content == r1.content
                assert r0.headers.get("content-type") == r1.headers.get("content-type")
        note["detail"] = "20 probes byte-identical across persist/reload"


def test_query_latency_budget(big, capsys):
    with verdict(capsys, "query latency") as note:
        span = big.meta.time_end
        rng = random.Random(99)
        windows = [(0, span)]
        for _ in range(39):
            a = rng.randrange(0, span - 1920)
            b = rng.randrange(a + 1920, span + 1)
            windows.append((a, b))

        def timed(fn):
            samples = []
            for a, b in windows:
                t = time.perf_counter()
                fn(a, b)
                samples.append(time.perf_counter() - t)
            samples.sort()
            return statistics.median(samples), samples[int(0.99 * (len(samples) - 1))]

        g_med, g_p99 = timed(lambda a, b: gantt_matrix(big, a, b, 1920))
        u_med, u_p99 = timed(lambda a, b: utilization(big, a, b, 1920))
        assert g_med < 0.100 and g_p99 < 0.500
        assert u_med < 0.100 and u_p99 < 0.500

        lookups = []
        for _ in range(300):
            t0 = rng.randrange(0, span)
            loc = rng.randrange(8)
            t = time.perf_counter()
            interval_at(big, t0, loc)
            lookups.append(time.perf_counter() - t)
        lookups.sort()
        l_p99 = lookups[int(0.99 * (len(lookups) - 1))]
        assert l_p99 < 0.010
        note["detail"] = (
            f"gantt med {g_med * 1e3:.1f}ms p99 {g_p99 * 1e3:.1f}ms; "
            f"util med {u_med * 1e3:.1f}ms p99 {u_p99 * 1e3:.1f}ms; "
            f"lookup p99 {l_p99 * 1e6:.0f}us"
        )


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_cli_bundle_serve_probe(tmp_path, capsys):
    with verdict(capsys, "cli end-to-end") as note:
        trace = write_trace_text(tmp_path, THREE_INTERVAL_TRACE, name="three.trace")
        data_dir = tmp_path / "served-data"
        out = subprocess.run(
            [
                sys.executable,
                "-m",
                "tracescope.cli",
                "bundle",
                str(trace),
                "--label",
                "three",
                "--data-dir",
                str(data_dir),
            ],
            capture_output=True,
            text=True,
            check=True,
        )
        assert out.stdout.startswith("dataset ")
        ds_id = out.stdout.split()[1]

        extra_path = tmp_path / "extra.trace"
        write_trace(extra_path, seed=60, locations=2, intervals=40, counters={"flux": 1.5})

        port = _free_port()
        proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "tracescope.cli",
                "serve",
                "--port",
                str(port),
                "--host",
                "127.0.0.1",
                "--data-dir",
                str(data_dir),
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        try:
            with httpx.Client(
                base_url=f"http://127.0.0.1:{port}/api/v1", timeout=5.0
            ) as http:
                for _ in range(150):
                    assert proc.poll() is None, "server exited early"
                    try:
                        if http.get("/datasets").status_code == 200:
                            break
                    except httpx.TransportError:
                        pass
                    time.sleep(0.1)
                else:
                    pytest.fail("server never came up")

                listing = http.get("/datasets").json()
                assert [m["dataset_id"] for m in listing] == [ds_id]
                assert listing[0]["interval_count"] == 3

                r = http.get(
                    f"/datasets/{ds_id}/utilization",
                    params={"t0": 0, "t1": 100, "width": 10},
                )
                assert r.status_code == 200
                body = r.json()
                assert body["values"] == [1, 2, 3, 3, 2, 2, 1, 1, 1, 1]
                assert body["requested"] == {"t0": 0, "t1": 100, "width": 10}

                r = http.get(
                    f"/datasets/{ds_id}/gantt",
                    params={"t0": 0, "t1": 100, "width": 10},
                ).json()
                assert len(r["rows"]) == 2
                assert {row["location"] for row in r["rows"]} == {0, 1}
                assert all(len(row["counts"]) == 10 for row in r["rows"])

                r = http.get(f"/datasets/{ds_id}/histogram", params={"bins": 2}).json()
                assert r["bin_edges"] == [30.0, 65.0, 100.0]
                assert r["counts"] == [2, 1]

                r = http.get(f"/datasets/{ds_id}/tree").json()
                assert r["node_count"] == 2
                assert r["roots"] == [0]

                r = http.get(
                    f"/datasets/{ds_id}/agg-gantt",
                    params={"node": 1, "t0": 0, "t1": 100, "width": 8},
                ).json()
                assert r["rows"] == 2
                assert len(r["bars"]) == 2

                assert http.get(f"/datasets/{ds_id}/counters").json() == []

                r = http.get(f"/datasets/{ds_id}/interval/1").json()
                assert r["guid"] == 1
                assert r["duration"] == 100

                r = http.get(
                    f"/datasets/{ds_id}/interval-at",
                    params={"time": 25, "loc": 0},
                ).json()
                assert r["interval"]["guid"] == 2

                r = http.get(
                    f"/datasets/{ds_id}/deps/1", params={"descendants": 1}
                ).json()
                assert r["ancestors"] == []
                assert r["children"] == [2, 3]

                assert http.get(f"/datasets/{ds_id}/source").json() == {"files": []}

                resp = http.post(
                    "/datasets",
                    files={"file": ("extra.trace", extra_path.read_bytes())},
                    data={"label": "extra"},
                )
                assert resp.status_code == 202
                job_id = resp.json()["job_id"]
                for _ in range(200):
                    job = http.get(f"/jobs/{job_id}").json()
                    if job["state"] in ("done", "failed"):
                        break
                    time.sleep(0.05)
                assert job["state"] == "done"
                extra_id = job["dataset_id"]

                counters = http.get(f"/datasets/{extra_id}/counters").json()
                assert counters == [{"name": "flux", "locations": [0, 1]}]
                extra_span = next(
                    m["time_end"]
                    for m in http.get("/datasets").json()
                    if m["dataset_id"] == extra_id
                )
                r = http.get(
                    f"/datasets/{extra_id}/counter",
                    params={"name": "flux", "t0": 0, "t1": extra_span, "width": 50},
                ).json()
                means = np.array([v for v in r["mean"] if v is not None])
                assert means.size > 0
                assert np.all(np.abs(means - 1.5) / 1.5 < 1e-9)

                assert http.delete(f"/datasets/{extra_id}").json() == {
                    "deleted": extra_id
                }
                remaining = http.get("/datasets").json()
                assert [m["dataset_id"] for m in remaining] == [ds_id]
        finally:
            proc.terminate()
            proc.wait(timeout=10)
        note["detail"] = "bundle + live server, every endpoint probed"
