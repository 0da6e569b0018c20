// Interval duration histogram with brushable bins. Brushing a bin range
// publishes a duration selection, so every linked view highlights the
// contributing intervals. A context dropdown narrows the population to
// one tree node's own intervals.

import type { HistogramResponse } from "../api/types.js";
import type { ApiClient } from "../api/client.js";
import type { ViewHub } from "../state/hub.js";

export class HistogramView {
  bins = 32;
  scale: "linear" | "log" = "linear";
  /** Context filter: a tree node id, or null for all intervals. */
  contextNode: number | null = null;
  response: HistogramResponse | null = null;

  constructor(
    readonly name: string,
    private readonly hub: ViewHub,
    private readonly client: ApiClient,
  ) {}

  async load(): Promise<void> {
    this.response = await this.client.histogram(this.hub.datasetId, this.bins, {
      node: this.contextNode ?? undefined,
      scale: this.scale,
    });
  }

  async setContext(node: number | null): Promise<void> {
    this.contextNode = node;
    await this.load();
  }

  /**
   * Brush bins [first, last] (inclusive): selects every interval whose
   * duration falls in the covered edge range, across all views.
   */
  brushBins(first: number, last: number): void {
    const edges = this.response?.bin_edges;
    if (!edges || edges.length < 2) return;
    const lo = Math.max(0, Math.min(first, last));
    const hi = Math.min(edges.length - 2, Math.max(first, last));
    this.hub.selectDurationRange(edges[lo], edges[hi + 1]);
  }

  clearBrush(): void {
    this.hub.clearSelection();
  }
}
