// Attribute table for the current selection: interval selections show
// the full server payload for the interval; node and duration-range
// selections show their parameters. Rows are label/value pairs straight
// from one API response, never derived locally.

import type { ApiClient } from "../api/client.js";
import type { ViewHub } from "../state/hub.js";

export type InfoRow = [label: string, value: string];

export class SelectionInfoView {
  rows: InfoRow[] = [];

  constructor(
    readonly name: string,
    private readonly hub: ViewHub,
    private readonly client: ApiClient,
  ) {}

  attach(): () => void {
    return this.hub.subscribe((event) => {
      if (event === "selection") void this.refresh();
    });
  }

  async refresh(): Promise<void> {
    const selection = this.hub.getSelection();
    if (selection === null) {
      this.rows = [];
      return;
    }
    if (selection.kind === "interval") {
      const iv = await this.client.interval(this.hub.datasetId, selection.guid);
      if (iv === null) return;
      this.rows = [
        ["guid", String(iv.guid)],
        ["primitive", iv.primitive],
        ["location", iv.location_label],
        ["enter", String(iv.enter)],
        ["leave", String(iv.leave)],
        ["duration", String(iv.duration)],
        ["parent", iv.parent === null ? "(none)" : String(iv.parent)],
        ["context node", String(iv.node_id)],
      ];
    } else if (selection.kind === "node") {
      this.rows = [["selected context node", String(selection.node)]];
    } else {
      this.rows = [
        ["duration range", `${selection.lo} .. ${selection.hi} ticks`],
      ];
    }
  }
}
