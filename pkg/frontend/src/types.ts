// Wire types for the composition service (schema version 1).

export type Cell = number | string | null;

export interface ChartSpec {
  v: number;
  mark: string;
  encodings: Record<string, string>;
  layoutMode: "superimpose" | "juxtapose";
  data: Record<string, Cell>[];
  warnings: string[];
}

export type VerdictStatus = "Safe" | "UnsafeOverridable" | "Unsafe";

export interface SafetyVerdict {
  v: number;
  status: VerdictStatus;
  matching: Record<string, string> | null;
  diffPair: string[] | null;
  reasons: string[];
}

export interface TableData {
  columns: string[];
  rows: Cell[][];
}

export interface ViewCard {
  name: string;
  label: string;
  chartSpec: ChartSpec;
}

export interface EvalResult {
  v: number;
  name?: string;
  chartSpec?: ChartSpec;
  table?: TableData;
  warnings?: string[];
  views?: (ViewCard & { table?: TableData })[];
  model?: unknown;
}

export interface TableUpload {
  name: string;
  csv: string;
  roles?: Record<string, "dimension" | "measure">;
}

export interface ViewDef {
  name: string;
  source: string;
  pred?: string;
  groupby: string[];
  agg: string;
  measure: string;
  mark?: string;
  encodings?: Record<string, string>;
}

export interface FdEdge {
  from: string;
  to: string;
}

// ── drag gestures ─────────────────────────────────────────────────────────

export type SourceKind = "chart" | "mark" | "legendEntry" | "constant";

/** The composition operator chosen on the drag ghost. */
export type Modifier = "minus" | "plus" | "union" | "stat-avg" | "lift-then-compose";

export interface DragPayload {
  sessionId: string;
  source: {
    viewName: string;
    kind: SourceKind;
    /** predicate text selecting the mark / legend rows */
    selector?: string;
    /** literal value when kind is "constant" */
    value?: number;
    /** quantitative attribute used as the model feature for lift */
    featureAttr?: string;
  };
  modifier: Modifier;
}
