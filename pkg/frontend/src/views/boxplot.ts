// Functional box plot of one performance counter's rate: min/max/mean
// lines plus a one-stddev band around the mean, per pixel, over the
// shared temporal domain. Several instances with different counters can
// be open at once; each is its own view object with its own cache.

import type { CounterResponse, Window } from "../api/types.js";
import type { ApiClient } from "../api/client.js";
import type { ViewHub } from "../state/hub.js";
import type { WindowSlice } from "../state/cache.js";
import { TemporalView } from "./base.js";

export interface BoxPlotDisplay {
  domain: Window;
  counter: string;
  min: (number | null)[];
  max: (number | null)[];
  mean: (number | null)[];
  /** [mean - stddev, mean + stddev] band, null where uncovered. */
  band: ([number, number] | null)[];
  covered: boolean[];
}

export class BoxPlotView extends TemporalView<CounterResponse> {
  display: BoxPlotDisplay | null = null;

  constructor(
    name: string,
    hub: ViewHub,
    client: ApiClient,
    readonly counterName: string,
  ) {
    super(name, hub, client);
  }

  attach(): () => void {
    return this.hub.subscribe((event) => {
      if (event === "domain") void this.refresh();
    });
  }

  protected wantedWindow(): Window {
    const { t0, t1 } = this.hub.temporalDomain();
    return { t0, t1, width: this.width };
  }

  protected fetchWindow(
    win: Window,
    tag: { view: string; gen: number },
  ): Promise<CounterResponse | null> {
    return this.client.counter(
      this.hub.datasetId,
      this.counterName,
      win,
      {},
      tag,
    );
  }

  protected project(
    want: Window,
    payload: CounterResponse,
    slice: WindowSlice,
  ): void {
    const mean = this.slice(payload.mean, slice);
    const stddev = this.slice(payload.stddev, slice);
    this.display = {
      domain: { ...want },
      counter: payload.counter,
      min: this.slice(payload.min, slice),
      max: this.slice(payload.max, slice),
      mean,
      band: mean.map((m, i) => {
        const s = stddev[i];
        return m === null || s === null ? null : [m - s, m + s];
      }),
      covered: this.slice(payload.covered, slice),
    };
  }
}
