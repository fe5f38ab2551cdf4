// Session screen state machine: a pure reducer over service responses, so the
// double-submission guard and polling decisions are unit-testable without DOM.

import type { SessionView } from "./types.js";

export type Phase =
  | "setup"
  | "creating"
  | "computing"
  | "awaiting"
  | "submitting"
  | "done"
  | "failed";

export interface WizardState {
  phase: Phase;
  view: SessionView | null;
  banner: string | null;
}

export type WizardEvent =
  | { kind: "create-started" }
  | { kind: "request-failed"; message: string }
  | { kind: "view"; view: SessionView }
  | { kind: "answer-started" }
  | { kind: "reset" };

export const initialState: WizardState = { phase: "setup", view: null, banner: null };

function phaseForView(view: SessionView): Phase {
  switch (view.status) {
    case "computing":
      return "computing";
    case "awaiting-answer":
      return "awaiting";
    case "done":
      return "done";
    case "failed":
      return "failed";
  }
}

export function reduce(state: WizardState, event: WizardEvent): WizardState {
  switch (event.kind) {
    case "create-started":
      return { phase: "creating", view: null, banner: null };
    case "answer-started":
      if (state.phase !== "awaiting") return state; // guard: one mutation in flight
      return { ...state, phase: "submitting", banner: null };
    case "view":
      return { phase: phaseForView(event.view), view: event.view, banner: null };
    case "request-failed":
      if (state.phase === "creating") {
        return { phase: "setup", view: null, banner: event.message };
      }
      // fall back to the last known view; surface the error as a banner
      return {
        ...state,
        phase: state.view ? phaseForView(state.view) : "setup",
        banner: event.message,
      };
    case "reset":
      return initialState;
  }
}

export function canAnswer(state: WizardState): boolean {
  return state.phase === "awaiting" && state.view?.pending_question != null;
}

export function shouldPoll(state: WizardState): boolean {
  return state.phase === "computing";
}
