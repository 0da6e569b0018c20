// Full trace overview: an area chart of busy-location count per pixel,
// always pinned to the complete span. Its rectangular brush is the one
// control that sets the time domain every other temporal view follows.
// The current selection is drawn as a second area under the total.

import type { UtilizationResponse, Window } from "../api/types.js";
import type { WindowSlice } from "../state/cache.js";
import { TemporalView } from "./base.js";

export interface UtilizationDisplay {
  domain: Window;
  values: number[];
  selection: number[] | null;
  brush: { t0: number; t1: number };
}

export class UtilizationView extends TemporalView<UtilizationResponse> {
  display: UtilizationDisplay | null = null;

  attach(): () => void {
    return this.hub.subscribe((event) => {
      if (event === "selection") {
        // The overlay series baked into the payload is stale now.
        this.invalidate();
        void this.refresh();
      } else if (event === "domain") {
        // Only the brush rectangle moves; pixels stay valid.
        if (this.display !== null) {
          this.display.brush = this.hub.temporalDomain();
        }
      }
    });
  }

  protected wantedWindow(): Window {
    const { t0, t1 } = this.hub.utilizationDomain();
    return { t0, t1, width: this.width };
  }

  protected fetchWindow(
    win: Window,
    tag: { view: string; gen: number },
  ): Promise<UtilizationResponse | null> {
    const selection = this.hub.selectionParam();
    return this.client.utilization(
      this.hub.datasetId,
      win,
      selection === null ? {} : { selection },
      tag,
    );
  }

  protected project(
    want: Window,
    payload: UtilizationResponse,
    slice: WindowSlice,
  ): void {
    this.display = {
      domain: { ...want },
      values: this.slice(payload.values, slice),
      selection: payload.selection ? this.slice(payload.selection, slice) : null,
      brush: this.hub.temporalDomain(),
    };
  }

  /** Brush gesture: publish the domain every temporal view adopts. */
  brushTo(t0: number, t1: number): void {
    this.hub.setBrush(t0, t1);
  }

  clearBrushGesture(): void {
    this.hub.clearBrush();
  }
}
