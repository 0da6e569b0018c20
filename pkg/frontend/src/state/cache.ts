// Overdraw cache: the server renders a window wider than requested, and
// a pan that stays inside it must be answered locally with zero network
// requests. The oversized raster keeps the server's rendered resolution;
// panning translates a slice of it. Changing zoom level (a different
// requested ticks-per-pixel) always refetches.

import type { Window } from "../api/types.js";

export interface CachedWindow<T> {
  rendered: Window;
  /** The request that produced the render, pinning the zoom level. */
  requested: Window;
  payload: T;
}

export interface WindowSlice {
  offset: number;
  length: number;
}

/** True when both windows ask for the same ticks-per-pixel. */
export function sameZoom(a: Window, b: Window): boolean {
  return (a.t1 - a.t0) * b.width === (b.t1 - b.t0) * a.width;
}

export class OverdrawCache<T> {
  private entry: CachedWindow<T> | null = null;

  store(requested: Window, rendered: Window, payload: T): void {
    this.entry = { requested, rendered, payload };
  }

  clear(): void {
    this.entry = null;
  }

  /** The cached render able to serve `want` without a request, if any. */
  lookup(want: Window): CachedWindow<T> | null {
    const entry = this.entry;
    if (entry === null) return null;
    const r = entry.rendered;
    if (want.t0 < r.t0 || want.t1 > r.t1) return null;
    if (!sameZoom(want, entry.requested)) return null;
    return entry;
  }

  /** Slice of the rendered pixel array showing `want`. */
  sliceFor(want: Window): WindowSlice {
    const r = this.entry!.rendered;
    const perPixel = (r.t1 - r.t0) / r.width;
    const offset = Math.round((want.t0 - r.t0) / perPixel);
    const length = Math.max(1, Math.round((want.t1 - want.t0) / perPixel));
    return { offset, length: Math.min(length, r.width - offset) };
  }
}

/** Slice a per-pixel array down to a viewport. */
export function slicePixels<V>(values: V[], slice: WindowSlice): V[] {
  return values.slice(slice.offset, slice.offset + slice.length);
}
