// Aggregated timeline: one bar per instance of the selected tree node,
// each spanning the instance plus all of its descendants, laid out by
// the server in non-colliding rows. Each bar carries its own internal
// utilization series drawn as a miniature area.

import type { AggBar, AggGanttResponse, Window } from "../api/types.js";
import type { WindowSlice } from "../state/cache.js";
import { TemporalView } from "./base.js";

export interface AggGanttDisplay {
  domain: Window;
  node: number;
  rowCount: number;
  bars: AggBar[];
}

export class AggGanttView extends TemporalView<AggGanttResponse> {
  display: AggGanttDisplay | null = null;
  private node: number | null = null;

  attach(): () => void {
    return this.hub.subscribe((event) => {
      if (event === "domain") {
        void this.refresh();
      } else if (event === "selection") {
        const selection = this.hub.getSelection();
        const node =
          selection !== null && selection.kind === "node"
            ? selection.node
            : null;
        if (node !== this.node) {
          this.node = node;
          this.invalidate();
          if (node === null) {
            this.display = null;
          } else {
            void this.refresh();
          }
        }
      }
    });
  }

  protected wantedWindow(): Window {
    const { t0, t1 } = this.hub.temporalDomain();
    return { t0, t1, width: this.width };
  }

  protected async fetchWindow(
    win: Window,
    tag: { view: string; gen: number },
  ): Promise<AggGanttResponse | null> {
    if (this.node === null) return null;
    return this.client.aggGantt(this.hub.datasetId, this.node, win, tag);
  }

  protected project(
    want: Window,
    payload: AggGanttResponse,
    _slice: WindowSlice,
  ): void {
    // Bars carry absolute times; the viewport maps them, no slicing.
    this.display = {
      domain: { ...want },
      node: this.node as number,
      rowCount: payload.rows,
      bars: payload.bars.filter(
        (bar) => bar.start < want.t1 && bar.end > want.t0,
      ),
    };
  }
}
