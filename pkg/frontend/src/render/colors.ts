// Palette: a colorblind-safe purple ramp for aggregated-time fills and a
// single yellow reserved for the active selection.

export const SELECTION_YELLOW = "#ffd54a";

export const BAR_BLUE = "#4477aa";

export const DEPENDENCY_LINE = "#ccaa00";

/** Light-to-dark purples, perceptually ordered. */
export const PURPLE_RAMP = [
  "#fcfbfd",
  "#efedf5",
  "#dadaeb",
  "#bcbddc",
  "#9e9ac8",
  "#807dba",
  "#6a51a3",
  "#4a1486",
];

/** Ramp color for a normalized weight in [0, 1]. */
export function purpleFor(weight: number): string {
  const t = Math.max(0, Math.min(1, weight));
  const index = Math.min(
    PURPLE_RAMP.length - 1,
    Math.floor(t * PURPLE_RAMP.length),
  );
  return PURPLE_RAMP[index];
}
