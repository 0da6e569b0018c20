// Shared state for all views of one dataset. The hub owns the brushed
// time domain, the current selection, the visible location band, and the
// open-view layout; views subscribe and re-query the server on change.

export interface TimeDomain {
  t0: number;
  t1: number;
}

/**
 * One selection at a time, expressed exactly as the server's selection
 * grammar so views can forward it verbatim.
 */
export type SelectionState =
  | { kind: "interval"; guid: number }
  | { kind: "node"; node: number }
  | { kind: "duration"; lo: number; hi: number }
  | null;

export type HubEvent = "domain" | "selection" | "locations" | "layout";

export type HubListener = (event: HubEvent) => void;

export const DEFAULT_LAYOUT = ["utilization", "gantt", "info", "source"];

export class ViewHub {
  /** Brushed domain shared by every temporal view except utilization. */
  private brush: TimeDomain;
  private selection: SelectionState = null;
  private loc0 = 0;
  private loc1: number;
  private openViews: string[] = [...DEFAULT_LAYOUT];
  private listeners = new Set<HubListener>();
  private generations = new Map<string, number>();
  /**
   * Session marker mixed into request stream names. The server tracks
   * the latest generation per (dataset, stream) and rejects older ones,
   * so two UI sessions on one dataset (another tab, a restart) must not
   * share a stream or the younger session's requests all look stale.
   */
  private readonly session = Math.random().toString(36).slice(2, 8);

  constructor(
    readonly datasetId: string,
    readonly span: number,
    readonly locationCount: number,
  ) {
    this.brush = { t0: 0, t1: span };
    this.loc1 = locationCount - 1;
  }

  subscribe(listener: HubListener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private publish(event: HubEvent): void {
    for (const listener of this.listeners) listener(event);
  }

  /** The domain temporal views display; utilization never uses this. */
  temporalDomain(): TimeDomain {
    return { ...this.brush };
  }

  /** Utilization is pinned to the full trace span at all times. */
  utilizationDomain(): TimeDomain {
    return { t0: 0, t1: this.span };
  }

  setBrush(t0: number, t1: number): void {
    const lo = Math.max(0, Math.min(t0, t1));
    const hi = Math.min(this.span, Math.max(t0, t1));
    if (hi <= lo) return;
    this.brush = { t0: lo, t1: hi };
    this.publish("domain");
  }

  clearBrush(): void {
    this.setBrush(0, this.span);
  }

  getSelection(): SelectionState {
    return this.selection;
  }

  /** Server-grammar form of the selection, or null when nothing picked. */
  selectionParam(): string | null {
    const sel = this.selection;
    if (sel === null) return null;
    switch (sel.kind) {
      case "interval":
        return `guid:${sel.guid}`;
      case "node":
        return `node:${sel.node}`;
      case "duration":
        return `dur:${sel.lo}-${sel.hi}`;
    }
  }

  selectInterval(guid: number): void {
    this.selection = { kind: "interval", guid };
    this.publish("selection");
  }

  selectNode(node: number): void {
    this.selection = { kind: "node", node };
    this.publish("selection");
  }

  selectDurationRange(lo: number, hi: number): void {
    this.selection = { kind: "duration", lo, hi };
    this.publish("selection");
  }

  clearSelection(): void {
    if (this.selection === null) return;
    this.selection = null;
    this.publish("selection");
  }

  locationBand(): { loc0: number; loc1: number } {
    return { loc0: this.loc0, loc1: this.loc1 };
  }

  setLocationBand(loc0: number, loc1: number): void {
    const lo = Math.max(0, Math.min(loc0, loc1));
    const hi = Math.min(this.locationCount - 1, Math.max(loc0, loc1));
    this.loc0 = lo;
    this.loc1 = hi;
    this.publish("locations");
  }

  layout(): string[] {
    return [...this.openViews];
  }

  openView(name: string): void {
    if (this.openViews.includes(name)) return;
    this.openViews.push(name);
    this.publish("layout");
  }

  closeView(name: string): void {
    const at = this.openViews.indexOf(name);
    if (at < 0) return;
    this.openViews.splice(at, 1);
    this.publish("layout");
  }

  /** Monotonic per-view counter attached to requests for cancellation. */
  nextGeneration(view: string): number {
    const next = (this.generations.get(view) ?? 0) + 1;
    this.generations.set(view, next);
    return next;
  }

  latestGeneration(view: string): number {
    return this.generations.get(view) ?? 0;
  }

  /** Wire name of a view's request stream, unique to this session. */
  streamName(view: string): string {
    return `${view}.${this.session}`;
  }
}
