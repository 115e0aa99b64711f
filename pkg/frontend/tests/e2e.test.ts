/**
 * Criterion 9 end-to-end: against a live gateway running mission-2 with the
 * scripted provider, the console state shows the prompt round-trip, the
 * altitude curve crossing the 5 m guide, a budget meter ending under 10
 * calls, and survives a mid-run reload via the snapshot.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { dirname, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient, type SocketLike } from "../src/api";
import { ConsoleState, transcriptRows } from "../src/state";

const REPO = resolve(dirname(fileURLToPath(import.meta.url)), "..", "..");
const PORT = 8891;
const BASE = `http://127.0.0.1:${PORT}`;

let gateway: ChildProcess;

function wsFactory(url: string): SocketLike {
  const socket = new WebSocket(url);
  const like: SocketLike = {
    onmessage: null,
    onclose: null,
    onerror: null,
    close: () => socket.close(),
  };
  socket.onmessage = (ev) => like.onmessage?.({ data: ev.data.toString() });
  socket.onclose = (ev) => like.onclose?.(ev);
  socket.onerror = (ev) => like.onerror?.(ev);
  return like;
}

async function waitFor(
  predicate: () => boolean | Promise<boolean>,
  timeoutMs: number,
  what: string,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (await predicate()) {
      return;
    }
    await new Promise((r) => setTimeout(r, 25));
  }
  throw new Error(`timed out waiting for ${what}`);
}

beforeAll(async () => {
  gateway = spawn(
    "python3",
    ["-m", "gridpilot.cli", "--serve", "--port", String(PORT), "--missions-dir", "missions"],
    { cwd: REPO, env: { ...process.env, PYTHONPATH: "src" }, stdio: "pipe" },
  );
  await waitFor(
    async () => {
      try {
        const resp = await fetch(`${BASE}/health`);
        return resp.ok;
      } catch {
        return false;
      }
    },
    20_000,
    "gateway readiness",
  );
});

afterAll(() => {
  gateway?.kill("SIGTERM");
});

describe("console against a live gateway (mission 2, scripted)", () => {
  it("shows the round-trip, the altitude signature, the budget, and survives reload", async () => {
    const client = new GatewayClient(BASE, wsFactory);

    const missions = await client.listMissions();
    const mission = missions.find((m) => m.id === "mission-2");
    expect(mission).toBeDefined();
    expect(mission!.height_bound).toBe(5.0);

    const info = await client.createSession({
      mission_id: "mission-2",
      mode: "llm",
      provider: "scripted",
      fixture: "fixtures/mission-2.json",
      provider_delay_s: 0.15,
    });
    const sid = info.session_id;

    // Continuous client, connected for the whole run.
    const continuous = new ConsoleState();
    continuous.callLimit = mission!.call_limit;
    client.subscribeTelemetry(sid, {
      onMessage: (m) => continuous.apply(m),
      onDisconnect: () => continuous.markStale(),
    });
    await waitFor(() => continuous.frames.length >= 1, 10_000, "initial snapshot");

    await client.submitPrompt(sid, "fly mission-2 to the goal, altitude change only");

    // Mid-run: let some motion arrive, then simulate a page reload.
    await waitFor(() => continuous.frames.length >= 5, 20_000, "mid-run frames");
    const reloaded = new ConsoleState();
    reloaded.callLimit = mission!.call_limit;
    let reloadedFinished = false;
    client.subscribeTelemetry(sid, {
      onMessage: (m) => {
        reloaded.apply(m);
        if (m.type === "finished") {
          reloadedFinished = true;
        }
      },
      onDisconnect: () => reloaded.markStale(),
    });

    await waitFor(
      () => continuous.sessionState === "finished" && reloadedFinished,
      30_000,
      "both clients to finish",
    );

    // Prompt round-trip in the transcript.
    const turns = await client.transcript(sid);
    reloaded.setTranscript(turns);
    const rows = transcriptRows(reloaded.transcript);
    expect(rows.some((r) => r.kind === "user" && r.text.includes("altitude change only"))).toBe(true);
    expect(rows.some((r) => r.kind === "tool" && r.text.includes("startMission"))).toBe(true);
    expect(rows.some((r) => r.kind === "assistant" && r.text.includes("MISSION COMPLETE"))).toBe(true);

    // Altitude curve crosses the 5 m guide.
    const maxAltitude = Math.max(...reloaded.altitudeSeries.map(([, z]) => z));
    expect(maxAltitude).toBeGreaterThan(mission!.height_bound!);

    // Budget meter ends under 10 calls.
    expect(reloaded.budget.callsUsed).toBeLessThan(10);
    expect(reloaded.budget.callsUsed).toBeGreaterThan(0);

    // The reloaded view reconstructed the identical trace and counters.
    expect(continuous.sessionState).toBe("finished");
    expect(reloaded.trace).toEqual(continuous.trace);
    expect(reloaded.altitudeSeries).toEqual(continuous.altitudeSeries);
    expect(reloaded.budget).toEqual(continuous.budget);
    expect(reloaded.finalStatus).toBe("reached");
  });
});
