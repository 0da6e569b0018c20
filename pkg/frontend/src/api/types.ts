// Response payload types for the trace server's /api/v1 surface.
// Field names mirror the JSON exactly; times are integer ticks.

export interface DatasetMeta {
  dataset_id: string;
  label: string;
  time_begin: number;
  time_end: number;
  location_count: number;
  interval_count: number;
  primitive_names: string[];
  counter_names: string[];
  source_files: string[];
}

export interface JobStatus {
  job_id: string;
  state: "queued" | "running" | "done" | "failed";
  label: string;
  dataset_id: string | null;
  reused: boolean | null;
  warning_counts: Record<string, number> | null;
  error: {
    code: string;
    message: string;
    issues?: { line: number; offset: number; message: string }[];
  } | null;
}

/** A pixel window: [t0, t1) mapped onto `width` equal pixel spans. */
export interface Window {
  t0: number;
  t1: number;
  width: number;
}

export interface UtilizationResponse {
  requested: Window;
  rendered: Window;
  values: number[];
  selection?: number[];
}

export interface GanttRow {
  location: number;
  label: string;
  counts: number[];
  solo_guid: (number | null)[];
  busy_fraction: number[];
  selected?: boolean[];
}

export interface GanttResponse {
  requested: Window;
  rendered: Window;
  rows: GanttRow[];
}

export interface HistogramResponse {
  bin_edges: number[];
  counts: number[];
  empty: boolean;
  scale: "linear" | "log";
  node: number | null;
}

export interface TreeNode {
  node_id: number;
  primitive: string;
  context: string[];
  parent: number | null;
  children: number[];
  interval_count: number;
  inclusive_duration: number;
  subtree_duration: number;
  depth: number;
  collapsed: boolean;
}

export interface TreeResponse {
  depth: number;
  node_count: number;
  roots: number[];
  nodes: TreeNode[];
}

export interface AggBar {
  guid: number;
  start: number;
  end: number;
  row: number;
  utilization: { t0: number; t1: number; width: number; values: number[] };
}

export interface AggGanttResponse {
  requested: Window;
  rendered: Window;
  rows: number;
  bars: AggBar[];
}

export interface CounterInfo {
  name: string;
  locations: number[];
}

export interface CounterResponse {
  requested: Window;
  rendered: Window;
  counter: string;
  min: (number | null)[];
  max: (number | null)[];
  mean: (number | null)[];
  stddev: (number | null)[];
  covered: boolean[];
  per_location?: (number | null)[][];
}

export interface IntervalPayload {
  guid: number;
  parent: number | null;
  primitive: string;
  location: number;
  location_label: string;
  enter: number;
  leave: number;
  duration: number;
  node_id: number;
}

export interface IntervalAtResponse {
  interval: IntervalPayload | null;
}

export interface DepsResponse {
  guid: number;
  ancestors: number[];
  children: number[];
  descendants: number[];
  descendants_truncated: boolean;
}

export interface SourceFile {
  path: string;
  text: string;
}

export interface SourceResponse {
  files: SourceFile[];
}

export interface ApiErrorBody {
  error: {
    code: string;
    message: string;
    issues?: { line: number; offset: number; message: string }[];
  };
}
