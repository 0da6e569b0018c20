// Base machinery shared by every server-backed temporal view: at most
// one in-flight request, per-request generation tags so the server can
// drop superseded work, local discard of stale responses, and an
// overdraw cache that answers pans without touching the network.

import type { Window } from "../api/types.js";
import type { ApiClient } from "../api/client.js";
import type { ViewHub } from "../state/hub.js";
import { OverdrawCache, slicePixels, type WindowSlice } from "../state/cache.js";

export interface WindowedPayload {
  rendered: Window;
}

export abstract class TemporalView<T extends WindowedPayload> {
  /** Pixel width of the view; tests set small deterministic values. */
  width = 300;

  protected readonly cache = new OverdrawCache<T>();
  private running: Promise<void> | null = null;
  private queued = false;

  constructor(
    readonly name: string,
    protected readonly hub: ViewHub,
    protected readonly client: ApiClient,
  ) {}

  /** The window this view wants to display right now. */
  protected abstract wantedWindow(): Window;

  /** Issue the server query for a window; null means superseded. */
  protected abstract fetchWindow(
    win: Window,
    tag: { view: string; gen: number },
  ): Promise<T | null>;

  /** Update the display snapshot from a rendered payload slice. */
  protected abstract project(want: Window, payload: T, slice: WindowSlice): void;

  /**
   * Bring the display up to date. Calls arriving while a request is in
   * flight coalesce into one follow-up pass, so the view never has two
   * outstanding requests.
   */
  refresh(): Promise<void> {
    if (this.running !== null) {
      this.queued = true;
      return this.running;
    }
    this.running = (async () => {
      try {
        do {
          this.queued = false;
          await this.refreshOnce();
        } while (this.queued);
      } finally {
        this.running = null;
      }
    })();
    return this.running;
  }

  /** Resolves when no request is outstanding. */
  settled(): Promise<void> {
    return this.running ?? Promise.resolve();
  }

  protected invalidate(): void {
    this.cache.clear();
  }

  private async refreshOnce(): Promise<void> {
    const want = this.wantedWindow();
    const hit = this.cache.lookup(want);
    if (hit !== null) {
      this.project(want, hit.payload, this.cache.sliceFor(want));
      return;
    }
    const gen = this.hub.nextGeneration(this.name);
    const payload = await this.fetchWindow(want, {
      view: this.hub.streamName(this.name),
      gen,
    });
    if (payload === null) return;
    if (gen < this.hub.latestGeneration(this.name)) return;
    this.cache.store(want, payload.rendered, payload);
    this.project(want, payload, this.cache.sliceFor(want));
  }

  protected slice<V>(values: V[], slice: WindowSlice): V[] {
    return slicePixels(values, slice);
  }
}
