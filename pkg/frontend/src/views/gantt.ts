// Per-location timeline rows over the shared brushed domain. Crowded
// pixels render as density marks, never solid bars. Clicking resolves
// the interval under the cursor through the server and selects it; the
// selected interval's dependency chain is drawn as connecting lines.

import type { DepsResponse, GanttResponse, Window } from "../api/types.js";
import type { WindowSlice } from "../state/cache.js";
import { rasterizeLane, type PixelOp } from "../render/density.js";
import { TemporalView } from "./base.js";

export interface GanttLaneDisplay {
  location: number;
  label: string;
  ops: PixelOp[];
  selected: boolean[] | null;
}

export interface GanttDisplay {
  domain: Window;
  lanes: GanttLaneDisplay[];
}

export class GanttView extends TemporalView<GanttResponse> {
  display: GanttDisplay | null = null;
  /** Dependency chain of the selected interval, for the line overlay. */
  chain: DepsResponse | null = null;

  attach(): () => void {
    return this.hub.subscribe((event) => {
      if (event === "domain") {
        void this.refresh();
      } else if (event === "selection" || event === "locations") {
        // Selected flags are part of the payload; band changes rows.
        this.invalidate();
        void this.refresh();
        void this.refreshChain();
      }
    });
  }

  protected wantedWindow(): Window {
    const { t0, t1 } = this.hub.temporalDomain();
    return { t0, t1, width: this.width };
  }

  protected fetchWindow(
    win: Window,
    tag: { view: string; gen: number },
  ): Promise<GanttResponse | null> {
    const { loc0, loc1 } = this.hub.locationBand();
    const selection = this.hub.selectionParam();
    return this.client.gantt(
      this.hub.datasetId,
      win,
      selection === null ? { loc0, loc1 } : { loc0, loc1, selection },
      tag,
    );
  }

  protected project(
    want: Window,
    payload: GanttResponse,
    slice: WindowSlice,
  ): void {
    this.display = {
      domain: { ...want },
      lanes: payload.rows.map((row) => ({
        location: row.location,
        label: row.label,
        ops: rasterizeLane({
          counts: this.slice(row.counts, slice),
          solo_guid: this.slice(row.solo_guid, slice),
          busy_fraction: this.slice(row.busy_fraction, slice),
        }),
        selected: row.selected ? this.slice(row.selected, slice) : null,
      })),
    };
  }

  /** Pan by a tick delta, clamped to the trace span; zoom unchanged. */
  panBy(deltaTicks: number): Promise<void> {
    const { t0, t1 } = this.hub.temporalDomain();
    const span = t1 - t0;
    let lo = t0 + deltaTicks;
    lo = Math.max(0, Math.min(lo, this.hub.span - span));
    this.hub.setBrush(lo, lo + span);
    return this.settled();
  }

  /** Zoom about the window center by a factor (>1 zooms in). */
  zoomBy(factor: number): Promise<void> {
    const { t0, t1 } = this.hub.temporalDomain();
    const center = (t0 + t1) / 2;
    const half = Math.max(1, Math.round((t1 - t0) / (2 * factor)));
    this.hub.setBrush(Math.round(center) - half, Math.round(center) + half);
    return this.settled();
  }

  /** Click at a pixel in a lane: resolve and select that interval. */
  async clickPixel(px: number, laneIndex: number): Promise<void> {
    const display = this.display;
    if (display === null || laneIndex >= display.lanes.length) return;
    const { t0, t1 } = display.domain;
    const time = t0 + Math.floor(((px + 0.5) * (t1 - t0)) / display.domain.width);
    const lane = display.lanes[laneIndex];
    const found = await this.client.intervalAt(
      this.hub.datasetId,
      Math.min(time, t1 - 1),
      lane.location,
    );
    if (found?.interval) {
      this.hub.selectInterval(found.interval.guid);
    } else {
      this.hub.clearSelection();
    }
  }

  private async refreshChain(): Promise<void> {
    const selection = this.hub.getSelection();
    if (selection === null || selection.kind !== "interval") {
      this.chain = null;
      return;
    }
    this.chain = await this.client.deps(
      this.hub.datasetId,
      selection.guid,
      true,
    );
  }
}
