// Canned service payloads for the recorded example session, matching the
// shapes (and the interesting values) the real service produces.

import type { Counters, HistoryEntry, SessionView } from "../src/types.js";

function counters(fc: number, rd: number, cc: number, ccs: number): Counters {
  return { fc, rd, cc_tree: cc, cc_session: ccs };
}

function entry(partial: Partial<HistoryEntry> & { iteration: number }): HistoryEntry {
  return {
    diagnoses: [],
    diagnoses_formatted: [],
    probabilities: null,
    proposed: null,
    outcome: null,
    d_check: [],
    d_times: [],
    d_times_formatted: [],
    counters: counters(0, 0, 0, 0),
    counters_delta: counters(0, 0, 0, 0),
    ...partial,
  };
}

const ITER1 = entry({
  iteration: 1,
  diagnoses: [[1, 3], [1, 4], [2, 3], [2, 5]],
  diagnoses_formatted: ["[a1, a3]", "[a1, a4]", "[a2, a3]", "[a2, a5]"],
  proposed: "A -> C",
  counters: counters(4, 0, 4, 0),
  counters_delta: counters(4, 0, 4, 0),
});

const ITER1_ANSWERED = {
  ...ITER1,
  outcome: false,
  d_check: [[1, 4], [2, 5]],
  d_times: [[1, 3], [2, 3]],
  d_times_formatted: ["[a1, a3]", "[a2, a3]"],
};

const ITER2 = entry({
  iteration: 2,
  diagnoses: [[1, 4], [2, 5]],
  diagnoses_formatted: ["[a1, a4]", "[a2, a5]"],
  proposed: "A -> !B",
  counters: counters(5, 2, 4, 4),
  counters_delta: counters(1, 2, 0, 4),
});

const ITER2_ANSWERED = {
  ...ITER2,
  outcome: false,
  d_check: [[1, 4]],
  d_times: [[2, 5]],
  d_times_formatted: ["[a2, a5]"],
};

const ITER3 = entry({
  iteration: 3,
  diagnoses: [[1, 4], [1, 2, 3, 5]],
  diagnoses_formatted: ["[a1, a4]", "[a1, a2, a3, a5]"],
  proposed: "A -> !C",
  counters: counters(6, 3, 5, 6),
  counters_delta: counters(1, 1, 1, 2),
});

const ITER3_ANSWERED = {
  ...ITER3,
  outcome: true,
  d_check: [[1, 4]],
  d_times: [[1, 2, 3, 5]],
  d_times_formatted: ["[a1, a2, a3, a5]"],
};

const ITER4 = entry({
  iteration: 4,
  diagnoses: [[1, 4]],
  diagnoses_formatted: ["[a1, a4]"],
  counters: counters(6, 4, 5, 8),
  counters_delta: counters(0, 1, 0, 2),
});

function view(partial: Partial<SessionView>): SessionView {
  return {
    id: "abc123",
    created_at: 1700000000,
    engine: "dynamic",
    status: "computing",
    iteration: 0,
    diagnoses: [],
    diagnoses_formatted: [],
    probabilities: null,
    pending_question: null,
    final: null,
    final_formatted: null,
    counters: counters(0, 0, 0, 0),
    error: null,
    history: [],
    ...partial,
  };
}

export const CREATED = view({ status: "computing" });

export const AWAITING_1 = view({
  status: "awaiting-answer",
  iteration: 1,
  diagnoses: ITER1.diagnoses,
  diagnoses_formatted: ITER1.diagnoses_formatted,
  pending_question: "A -> C",
  counters: ITER1.counters,
  history: [ITER1],
});

export const COMPUTING_2 = view({
  status: "computing",
  iteration: 1,
  diagnoses: ITER1.diagnoses,
  diagnoses_formatted: ITER1.diagnoses_formatted,
  counters: ITER1.counters,
  history: [ITER1_ANSWERED],
});

export const AWAITING_2 = view({
  status: "awaiting-answer",
  iteration: 2,
  diagnoses: ITER2.diagnoses,
  diagnoses_formatted: ITER2.diagnoses_formatted,
  pending_question: "A -> !B",
  counters: ITER2.counters,
  history: [ITER1_ANSWERED, ITER2],
});

export const AWAITING_3 = view({
  status: "awaiting-answer",
  iteration: 3,
  diagnoses: ITER3.diagnoses,
  diagnoses_formatted: ITER3.diagnoses_formatted,
  pending_question: "A -> !C",
  counters: ITER3.counters,
  history: [ITER1_ANSWERED, ITER2_ANSWERED, ITER3],
});

export const DONE = view({
  status: "done",
  iteration: 4,
  diagnoses: ITER4.diagnoses,
  diagnoses_formatted: ITER4.diagnoses_formatted,
  final: [1, 4],
  final_formatted: "[a1, a4]",
  counters: ITER4.counters,
  history: [ITER1_ANSWERED, ITER2_ANSWERED, ITER3_ANSWERED, ITER4],
});

export const HSTREE_DONE = view({
  id: "hst789",
  engine: "hstree",
  status: "done",
  iteration: 4,
  diagnoses: ITER4.diagnoses,
  diagnoses_formatted: ITER4.diagnoses_formatted,
  final: [1, 4],
  final_formatted: "[a1, a4]",
  counters: counters(14, 0, 9, 8),
  history: [],
});

export const GOLDEN_EXAMPLE = {
  dpi: "[O]\na1: A -> !B\na2: A -> B\na3: A -> !C\na4: B -> C\na5: A -> B | C\n[B]\n[P]\n[N]\n!A\n",
  config: {
    engine: "dynamic" as const,
    ld: 5,
    order: "bfs" as const,
    question_script: ["A -> C", "A -> !B", "A -> !C"],
  },
};
