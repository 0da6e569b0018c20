// Crowding must stay visible: a lane packed with a thousand sub-pixel
// intervals renders density marks on every pixel and can never be
// mistaken for one solid bar, while a lane holding a single long
// interval still reads as exactly that.

import { describe, expect, inject, it } from "vitest";
import {
  ApiClient,
  GanttView,
  ViewHub,
  looksLikeSolidBar,
} from "../../src/index.js";

const baseUrl = inject("baseUrl");
const threeId = inject("threeId");
const denseId = inject("denseId");
const denseSpan = inject("denseSpan");

describe("density signifier", () => {
  it("renders a thousand sub-pixel intervals as density marks, never solids", async () => {
    const client = new ApiClient(baseUrl);
    const meta = (await client.listDatasets()).find(
      (d) => d.dataset_id === denseId,
    );
    expect(meta?.interval_count).toBe(1000);

    const hub = new ViewHub(denseId, denseSpan, 1);
    const gantt = new GanttView("gantt", hub, client);
    gantt.width = 300;
    await gantt.refresh();

    const lane = gantt.display?.lanes[0];
    expect(lane).toBeDefined();
    expect(lane!.ops).toHaveLength(300);
    for (const op of lane!.ops) {
      expect(op.kind).toBe("dense");
      if (op.kind !== "dense") continue;
      expect(op.count).toBeGreaterThan(1);
      expect(op.occupancy).toBeGreaterThan(0);
      expect(op.occupancy).toBeLessThan(0.5);
      expect(op.weight).toBeGreaterThan(0);
      expect(op.weight).toBeLessThan(1);
    }
    expect(looksLikeSolidBar(lane!.ops)).toBe(false);
  });

  it("still shows a lone long interval as a solid bar", async () => {
    const client = new ApiClient(baseUrl);
    const hub = new ViewHub(threeId, 100, 2);
    const gantt = new GanttView("gantt", hub, client);
    gantt.width = 10;
    await gantt.refresh();

    const lanes = gantt.display?.lanes;
    expect(lanes).toHaveLength(2);

    // Location 1 holds exactly one interval, [20, 60): four full solid
    // pixels, everything else empty.
    const solo = lanes![1];
    expect(solo.ops.filter((op) => op.kind === "solid")).toHaveLength(4);
    expect(solo.ops.filter((op) => op.kind === "empty")).toHaveLength(6);
    expect(looksLikeSolidBar(solo.ops)).toBe(true);

    // Location 0 overlaps two intervals on three pixels; those pixels
    // must be density marks, so the lane no longer reads as one bar.
    const crowded = lanes![0];
    expect(crowded.ops.filter((op) => op.kind === "dense")).toHaveLength(3);
    expect(crowded.ops.filter((op) => op.kind === "solid")).toHaveLength(7);
    expect(looksLikeSolidBar(crowded.ops)).toBe(false);
  });
});
