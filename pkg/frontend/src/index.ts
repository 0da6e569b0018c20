export * from "./api/types.js";
export { ApiClient, ApiError } from "./api/client.js";
export type { LoggedRequest, ViewTag } from "./api/client.js";
export { ViewHub, DEFAULT_LAYOUT } from "./state/hub.js";
export type { HubEvent, SelectionState, TimeDomain } from "./state/hub.js";
export { OverdrawCache, sameZoom, slicePixels } from "./state/cache.js";
export type { CachedWindow, WindowSlice } from "./state/cache.js";
export {
  rasterizeLane,
  densityWeight,
  looksLikeSolidBar,
  DENSITY_CAP,
} from "./render/density.js";
export type { PixelOp, LanePixels } from "./render/density.js";
export { purpleFor, PURPLE_RAMP, SELECTION_YELLOW } from "./render/colors.js";
export { tokenize } from "./render/highlight.js";
export type { Token, TokenKind } from "./render/highlight.js";
export { TemporalView } from "./views/base.js";
export { UtilizationView } from "./views/utilization.js";
export type { UtilizationDisplay } from "./views/utilization.js";
export { GanttView } from "./views/gantt.js";
export type { GanttDisplay, GanttLaneDisplay } from "./views/gantt.js";
export { AggGanttView } from "./views/agg-gantt.js";
export type { AggGanttDisplay } from "./views/agg-gantt.js";
export { TreeView, DEFAULT_TREE_DEPTH } from "./views/tree.js";
export type { TreeNodeDisplay } from "./views/tree.js";
export { HistogramView } from "./views/histogram.js";
export { BoxPlotView } from "./views/boxplot.js";
export type { BoxPlotDisplay } from "./views/boxplot.js";
export { SelectionInfoView } from "./views/info.js";
export type { InfoRow } from "./views/info.js";
export { SourceView } from "./views/source.js";
export type { HighlightedFile } from "./views/source.js";
