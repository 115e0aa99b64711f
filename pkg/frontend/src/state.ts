/**
 * Pure console state: everything the widgets render is derived from the
 * snapshot + frames received on the telemetry socket plus the transcript
 * fetched over HTTP. Rebuilding this state from a fresh subscription must
 * reproduce the identical view (the reload contract), so no widget keeps
 * private data.
 */

import type {
  SessionState,
  SocketMessage,
  TelemetryFrame,
  TranscriptTurn,
} from "./types.js";

export interface BudgetView {
  callsUsed: number;
  callLimit: number;
  accruedCost: number;
  exhausted: boolean;
}

export class ConsoleState {
  sessionState: SessionState = "idle";
  finalStatus: string | null = null;
  frames: TelemetryFrame[] = [];
  transcript: TranscriptTurn[] = [];
  callLimit = 0;
  stale = false;

  get latestFrame(): TelemetryFrame | null {
    return this.frames.length ? this.frames[this.frames.length - 1]! : null;
  }

  /** Agent positions so far, for the map trace. */
  get trace(): Array<[number, number]> {
    return this.frames.map((f) => [f.pose.position[0], f.pose.position[1]]);
  }

  /** (sim time, altitude) series for the altitude strip. */
  get altitudeSeries(): Array<[number, number]> {
    return this.frames.map((f) => [f.sim_time, f.pose.position[2]]);
  }

  get budget(): BudgetView {
    const latest = this.latestFrame;
    const callsUsed = latest ? latest.calls_used : 0;
    return {
      callsUsed,
      callLimit: this.callLimit,
      accruedCost: latest ? latest.accrued_cost : 0,
      exhausted: this.finalStatus === "budget_exhausted",
    };
  }

  /** Prompt input is only usable while the session sits idle. */
  get inputEnabled(): boolean {
    return this.sessionState === "idle";
  }

  apply(message: SocketMessage): void {
    switch (message.type) {
      case "snapshot":
        this.sessionState = message.state;
        this.frames = [...message.frames];
        this.stale = false;
        break;
      case "frame": {
        const frame = message.frame;
        const last = this.latestFrame;
        if (last && frame.seq <= last.seq) {
          return; // duplicate delivery; frames are append-only
        }
        this.frames.push(frame);
        if (this.sessionState === "idle") {
          this.sessionState = "executing";
        }
        break;
      }
      case "finished":
        this.sessionState = "finished";
        this.finalStatus = message.status;
        break;
      case "error":
        this.stale = true;
        break;
    }
  }

  setTranscript(turns: TranscriptTurn[]): void {
    this.transcript = turns;
  }

  setSessionState(state: SessionState): void {
    this.sessionState = state;
  }

  markStale(): void {
    this.stale = true;
  }
}

export interface TranscriptRow {
  kind: "user" | "assistant" | "tool";
  text: string;
}

/** Flatten a transcript into display rows: prompts and replies verbatim,
 * tool calls as collapsed one-line summaries naming the stream. */
export function transcriptRows(turns: TranscriptTurn[]): TranscriptRow[] {
  const rows: TranscriptRow[] = [];
  for (const turn of turns) {
    if (turn.role === "system") {
      continue;
    }
    if (turn.role === "tool") {
      continue; // results are summarized on the assistant row below
    }
    if (turn.role === "user") {
      rows.push({ kind: "user", text: turn.content });
      continue;
    }
    if (turn.tool_calls && turn.tool_calls.length > 0) {
      for (const call of turn.tool_calls) {
        rows.push({ kind: "tool", text: `→ ${call.name}` });
      }
    }
    if (turn.content.trim().length > 0) {
      rows.push({ kind: "assistant", text: turn.content });
    }
  }
  return rows;
}
