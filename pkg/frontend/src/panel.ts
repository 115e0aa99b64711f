/**
 * Prompt panel DOM: the transcript, the budget meter, the state chip, and
 * the input row (disabled whenever the session is not idle).
 */

import { ConsoleState, transcriptRows } from "./state.js";

export interface PanelElements {
  transcript: HTMLElement;
  stateChip: HTMLElement;
  budgetMeter: HTMLElement;
  input: HTMLInputElement;
  sendButton: HTMLButtonElement;
  notice: HTMLElement;
}

export class PromptPanel {
  constructor(private readonly el: PanelElements) {}

  render(state: ConsoleState): void {
    const rows = transcriptRows(state.transcript);
    this.el.transcript.innerHTML = "";
    for (const row of rows) {
      const div = document.createElement("div");
      div.className = `turn turn-${row.kind}`;
      div.textContent = row.text;
      this.el.transcript.appendChild(div);
    }
    this.el.transcript.scrollTop = this.el.transcript.scrollHeight;

    this.el.stateChip.textContent = state.finalStatus
      ? `${state.sessionState} (${state.finalStatus})`
      : state.sessionState;
    this.el.stateChip.className = `chip chip-${state.sessionState}`;

    const budget = state.budget;
    this.el.budgetMeter.textContent =
      `calls ${budget.callsUsed}/${budget.callLimit} · $${budget.accruedCost.toFixed(4)}`;

    const enabled = state.inputEnabled;
    this.el.input.disabled = !enabled;
    this.el.sendButton.disabled = !enabled;
    if (state.sessionState === "finished") {
      this.el.notice.textContent = budget.exhausted
        ? "call budget exhausted, session closed"
        : `mission ${state.finalStatus ?? "finished"}`;
    } else if (!enabled) {
      this.el.notice.textContent = "working…";
    } else {
      this.el.notice.textContent = "";
    }
  }

  showRejection(reason: string): void {
    this.el.notice.textContent = `prompt rejected: ${reason}`;
  }
}
