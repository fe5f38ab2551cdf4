// DOM wiring for the session wizard: create-session form, yes/no question
// screen with auto-refresh while the engine computes, done/failed screens,
// and the diagnosis board underneath.

import type { SessionApi } from "./api.js";
import { renderBoard, renderComparePanel } from "./board.js";
import { answerKeyFor, escapeHtml, questionText } from "./format.js";
import {
  WizardState,
  canAnswer,
  initialState,
  reduce,
  shouldPoll,
} from "./state.js";
import type { SessionConfigPayload, SessionView } from "./types.js";

const SKELETON = `
  <div id="banner" class="banner" hidden></div>
  <section id="setup-screen">
    <h2>New diagnosis session</h2>
    <label for="dpi-input">Problem description</label>
    <textarea id="dpi-input" rows="12" spellcheck="false"
      placeholder="[O]&#10;a1: A -> !B&#10;..."></textarea>
    <div class="controls">
      <button id="load-example" type="button">Load example</button>
      <label>engine
        <select id="engine-select">
          <option value="dynamic">dynamic</option>
          <option value="hstree">hstree</option>
        </select>
      </label>
      <label>diagnoses per step
        <input id="ld-input" type="number" min="2" value="5">
      </label>
      <label>order
        <select id="order-select">
          <option value="bfs">bfs</option>
          <option value="prob">prob</option>
        </select>
      </label>
      <button id="start-session" type="button" class="primary">Start session</button>
    </div>
    <p id="example-note" class="note" hidden></p>
  </section>
  <section id="session-screen" hidden>
    <div id="question-area"></div>
    <div id="board-area"></div>
    <div class="controls">
      <button id="new-session" type="button">New session</button>
    </div>
  </section>
  <section id="compare-screen">
    <h3>Compare sessions</h3>
    <div class="controls">
      <button id="refresh-compare" type="button">Refresh</button>
    </div>
    <div id="compare-list"></div>
    <div id="compare-area"></div>
  </section>`;

export class Wizard {
  state: WizardState = initialState;
  private exampleConfig: SessionConfigPayload | null = null;
  private exampleDpi: string | null = null;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;
  private compareSelection = new Set<string>();

  constructor(
    private root: HTMLElement,
    private client: SessionApi,
    private pollMs = 1000,
  ) {}

  mount(): void {
    this.root.innerHTML = SKELETON;
    this.query("#load-example").addEventListener("click", () => this.loadExample());
    this.query("#start-session").addEventListener("click", () => this.start());
    this.query("#new-session").addEventListener("click", () => this.resetToSetup());
    this.query("#refresh-compare").addEventListener("click", () => this.refreshCompare());
    this.query("#question-area").addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (target.id === "btn-yes") void this.answer(true);
      if (target.id === "btn-no") void this.answer(false);
    });
    this.query("#compare-list").addEventListener("change", () => this.renderCompareSelection());
    this.render();
  }

  private query<T extends HTMLElement = HTMLElement>(selector: string): T {
    const found = this.root.querySelector(selector);
    if (!found) throw new Error(`missing element ${selector}`);
    return found as T;
  }

  private dispatch(event: Parameters<typeof reduce>[1]): void {
    this.state = reduce(this.state, event);
    this.render();
    if (shouldPoll(this.state)) this.schedulePoll();
  }

  async loadExample(): Promise<void> {
    try {
      const example = await this.client.goldenExample();
      this.query<HTMLTextAreaElement>("#dpi-input").value = example.dpi;
      this.exampleConfig = example.config;
      this.exampleDpi = example.dpi;
      if (example.config.engine) {
        this.query<HTMLSelectElement>("#engine-select").value = example.config.engine;
      }
      if (example.config.ld) {
        this.query<HTMLInputElement>("#ld-input").value = String(example.config.ld);
      }
      const note = this.query("#example-note");
      note.hidden = false;
      note.textContent =
        "Example loaded with its recorded question sequence; answer no, no, yes to reproduce it.";
    } catch (error) {
      this.showBanner(error);
    }
  }

  async start(): Promise<void> {
    if (this.state.phase === "creating" || this.state.phase === "submitting") return;
    const dpi = this.query<HTMLTextAreaElement>("#dpi-input").value;
    const config: SessionConfigPayload = {
      engine: this.query<HTMLSelectElement>("#engine-select").value as "dynamic" | "hstree",
      ld: Number(this.query<HTMLInputElement>("#ld-input").value) || 5,
      order: this.query<HTMLSelectElement>("#order-select").value as "bfs" | "prob",
    };
    if (this.exampleConfig?.question_script && dpi === this.exampleDpi) {
      config.question_script = this.exampleConfig.question_script;
    }
    this.dispatch({ kind: "create-started" });
    try {
      const view = await this.client.createSession(dpi, config);
      this.dispatch({ kind: "view", view });
    } catch (error) {
      this.dispatch({ kind: "request-failed", message: describe(error) });
    }
  }

  async answer(outcome: boolean): Promise<void> {
    if (!canAnswer(this.state) || !this.state.view) return; // double-click guard
    const view = this.state.view;
    const key = answerKeyFor(view.id, view.iteration);
    this.dispatch({ kind: "answer-started" });
    try {
      const next = await this.client.answer(view.id, outcome, key);
      this.dispatch({ kind: "view", view: next });
    } catch (error) {
      this.dispatch({ kind: "request-failed", message: describe(error) });
    }
  }

  private schedulePoll(): void {
    if (this.pollTimer !== null) return;
    this.pollTimer = setTimeout(() => {
      this.pollTimer = null;
      void this.pollOnce();
    }, this.pollMs);
  }

  async pollOnce(): Promise<void> {
    const id = this.state.view?.id;
    if (!id || !shouldPoll(this.state)) return;
    try {
      const view = await this.client.getSession(id);
      this.dispatch({ kind: "view", view });
    } catch (error) {
      this.dispatch({ kind: "request-failed", message: describe(error) });
      this.schedulePoll();
    }
  }

  private resetToSetup(): void {
    if (this.pollTimer !== null) {
      clearTimeout(this.pollTimer);
      this.pollTimer = null;
    }
    this.dispatch({ kind: "reset" });
  }

  private showBanner(error: unknown): void {
    this.dispatch({ kind: "request-failed", message: describe(error) });
  }

  // -- rendering -------------------------------------------------------------

  private render(): void {
    const banner = this.query("#banner");
    banner.hidden = this.state.banner === null;
    banner.textContent = this.state.banner ?? "";

    const onSetup = this.state.phase === "setup" || this.state.phase === "creating";
    this.query("#setup-screen").hidden = !onSetup;
    this.query("#session-screen").hidden = onSetup;
    const startButton = this.query<HTMLButtonElement>("#start-session");
    startButton.disabled = this.state.phase === "creating";
    if (!onSetup) this.renderSession();
  }

  private renderSession(): void {
    const view = this.state.view;
    const area = this.query("#question-area");
    if (!view) {
      area.innerHTML = "";
      return;
    }
    if (this.state.phase === "computing" || this.state.phase === "submitting") {
      area.innerHTML = `<p class="status" id="status-line">Computing diagnoses
        (iteration ${view.iteration})&hellip;</p>
        <div class="answers">
          <button id="btn-yes" disabled>Yes</button>
          <button id="btn-no" disabled>No</button>
        </div>`;
    } else if (this.state.phase === "awaiting" && view.pending_question) {
      area.innerHTML = `<p class="question" id="question-line">
          ${escapeHtml(questionText(view.pending_question))}</p>
        <div class="answers">
          <button id="btn-yes" class="primary">Yes</button>
          <button id="btn-no" class="primary">No</button>
        </div>`;
    } else if (this.state.phase === "done") {
      area.innerHTML = `<p class="done" id="final-line">Fault isolated:
        <strong>${escapeHtml(view.final_formatted ?? "")}</strong></p>`;
    } else {
      area.innerHTML = `<p class="failed" id="failed-line">Session failed:
        ${escapeHtml(view.error ?? "unknown error")}</p>`;
    }
    this.query("#board-area").innerHTML = renderBoard(view);
  }

  // -- comparison ------------------------------------------------------------

  async refreshCompare(): Promise<void> {
    try {
      const sessions = await this.client.listSessions();
      const list = this.query("#compare-list");
      list.innerHTML = sessions
        .map(
          (s) => `<label class="compare-item">
            <input type="checkbox" value="${escapeHtml(s.id)}"
              ${this.compareSelection.has(s.id) ? "checked" : ""}>
            ${escapeHtml(s.engine)} &middot; ${escapeHtml(s.id)} &middot;
            ${escapeHtml(s.final_formatted ?? s.status)}
          </label>`,
        )
        .join("");
      await this.renderCompareSelection();
    } catch (error) {
      this.showBanner(error);
    }
  }

  async renderCompareSelection(): Promise<void> {
    const list = this.query("#compare-list");
    this.compareSelection = new Set(
      Array.from(list.querySelectorAll<HTMLInputElement>("input:checked")).map(
        (input) => input.value,
      ),
    );
    const views: SessionView[] = [];
    for (const id of this.compareSelection) {
      try {
        views.push(await this.client.getSession(id));
      } catch {
        // dropped sessions simply disappear from the panel
      }
    }
    this.query("#compare-area").innerHTML = renderComparePanel(views);
  }
}

function describe(error: unknown): string {
  if (error instanceof Error) return error.message;
  return String(error);
}
