// Per-pixel draw plan for one Gantt lane. A pixel holding more than one
// interval is never painted as a plain solid bar: it gets a density mark
// whose strength encodes how crowded and how busy the pixel is, so a
// thousand sub-pixel intervals stay visually distinct from one long task.

export interface LanePixels {
  counts: number[];
  solo_guid: (number | null)[];
  busy_fraction: number[];
}

export type PixelOp =
  | { kind: "empty" }
  | { kind: "solid"; guid: number; occupancy: number }
  | { kind: "dense"; count: number; occupancy: number; weight: number };

/** Count at which the density weight saturates. */
export const DENSITY_CAP = 256;

export function densityWeight(count: number): number {
  const capped = Math.min(count, DENSITY_CAP);
  return Math.log1p(capped) / Math.log1p(DENSITY_CAP);
}

export function rasterizeLane(lane: LanePixels): PixelOp[] {
  const ops: PixelOp[] = new Array(lane.counts.length);
  for (let i = 0; i < lane.counts.length; i++) {
    const count = lane.counts[i];
    const occupancy = Math.max(0, Math.min(1, lane.busy_fraction[i]));
    if (count <= 0) {
      ops[i] = { kind: "empty" };
    } else if (count === 1 && lane.solo_guid[i] !== null) {
      ops[i] = { kind: "solid", guid: lane.solo_guid[i] as number, occupancy };
    } else {
      ops[i] = { kind: "dense", count, occupancy, weight: densityWeight(count) };
    }
  }
  return ops;
}

/**
 * True when the lane would look like one uninterrupted solid bar, i.e.
 * every painted pixel is a full-occupancy solid. Dense marks, occupancy
 * dips, and gaps all break the illusion; tests assert crowded lanes are
 * never mistakable for this.
 */
export function looksLikeSolidBar(ops: PixelOp[]): boolean {
  let painted = 0;
  for (const op of ops) {
    if (op.kind === "empty") continue;
    if (op.kind !== "solid") return false;
    if (op.occupancy < 1) return false;
    painted += 1;
  }
  return painted > 0;
}
