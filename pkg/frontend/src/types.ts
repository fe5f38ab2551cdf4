// Payload shapes mirroring the session service; the UI is a pure projection
// of these and performs no diagnosis logic of its own.

export interface Counters {
  fc: number;
  rd: number;
  cc_tree: number;
  cc_session: number;
  [extra: string]: number;
}

export interface HistoryEntry {
  iteration: number;
  diagnoses: number[][];
  diagnoses_formatted: string[];
  probabilities: number[] | null;
  proposed: string | null;
  outcome: boolean | null;
  d_check: number[][];
  d_times: number[][];
  d_times_formatted: string[];
  counters: Counters;
  counters_delta: Counters;
}

export type SessionStatus = "computing" | "awaiting-answer" | "done" | "failed";

export interface SessionView {
  id: string;
  created_at: number;
  engine: string;
  status: SessionStatus;
  iteration: number;
  diagnoses: number[][];
  diagnoses_formatted: string[];
  probabilities: number[] | null;
  pending_question: string | null;
  final: number[] | null;
  final_formatted: string | null;
  counters: Counters;
  error: string | null;
  history: HistoryEntry[];
}

export interface SessionSummary {
  id: string;
  created_at: number;
  engine: string;
  status: SessionStatus;
  iteration: number;
  final_formatted: string | null;
}

export interface SessionConfigPayload {
  engine?: "dynamic" | "hstree";
  ld?: number;
  order?: "bfs" | "prob";
  pr?: Record<string, number> | null;
  question_script?: string[] | null;
}

export interface GoldenExample {
  dpi: string;
  config: SessionConfigPayload;
}
