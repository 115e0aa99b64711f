/**
 * Console wiring: attach to (or create) a session, subscribe to telemetry,
 * and keep the three widgets in sync. The session id lives in the URL hash,
 * so a reload reconstructs the identical view from the snapshot.
 */

import { GatewayClient, type SocketLike } from "./api.js";
import { AltitudeStrip } from "./altitude.js";
import { MapRenderer } from "./map.js";
import { PromptPanel } from "./panel.js";
import { ConsoleState } from "./state.js";
import type { MissionInfo } from "./types.js";

function browserSocketFactory(url: string): SocketLike {
  const socket = new WebSocket(url);
  const like: SocketLike = {
    onmessage: null,
    onclose: null,
    onerror: null,
    close: () => socket.close(),
  };
  socket.onmessage = (ev) => like.onmessage?.({ data: ev.data });
  socket.onclose = (ev) => like.onclose?.(ev);
  socket.onerror = (ev) => like.onerror?.(ev);
  return like;
}

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

async function attach(client: GatewayClient, sessionId: string): Promise<void> {
  const info = await client.sessionStatus(sessionId);
  const missions = await client.listMissions();
  const mission = missions.find((m: MissionInfo) => m.id === info.mission_id);
  if (!mission) {
    throw new Error(`mission ${info.mission_id} not in the catalog`);
  }
  const world = await client.missionWorld(mission.id);

  const state = new ConsoleState();
  state.callLimit = mission.call_limit;
  state.setSessionState(info.state);
  state.finalStatus = info.final_status;

  const mapCanvas = byId<HTMLCanvasElement>("map");
  const stripCanvas = byId<HTMLCanvasElement>("altitude");
  const map = new MapRenderer(world, mission);
  const strip = new AltitudeStrip(mission.height_bound);
  const panel = new PromptPanel({
    transcript: byId("transcript"),
    stateChip: byId("state-chip"),
    budgetMeter: byId("budget"),
    input: byId<HTMLInputElement>("prompt-input"),
    sendButton: byId<HTMLButtonElement>("send"),
    notice: byId("notice"),
  });
  byId("session-label").textContent = `${info.mission_id} · ${sessionId} · ${info.mode}`;

  let dirty = true;
  const markDirty = () => {
    dirty = true;
  };
  const draw = () => {
    if (dirty) {
      dirty = false;
      // Latest-frame-wins for the map; charts and transcript append.
      map.render(mapCanvas.getContext("2d")!, mapCanvas.width, mapCanvas.height, state);
      strip.render(stripCanvas.getContext("2d")!, stripCanvas.width, stripCanvas.height, state);
      panel.render(state);
    }
    requestAnimationFrame(draw);
  };
  requestAnimationFrame(draw);

  const refreshTranscript = async () => {
    state.setTranscript(await client.transcript(sessionId));
    markDirty();
  };
  await refreshTranscript();

  client.subscribeTelemetry(sessionId, {
    onMessage: (message) => {
      state.apply(message);
      markDirty();
      if (message.type === "finished" || message.type === "snapshot") {
        void refreshTranscript();
      }
    },
    onDisconnect: () => {
      state.markStale();
      markDirty();
    },
  });

  byId<HTMLButtonElement>("send").onclick = async () => {
    const input = byId<HTMLInputElement>("prompt-input");
    const text = input.value.trim();
    if (!text) {
      return;
    }
    try {
      state.setSessionState("awaiting_llm");
      markDirty();
      await client.submitPrompt(sessionId, text);
      input.value = "";
    } catch (err) {
      state.setSessionState("idle");
      panel.showRejection(err instanceof Error ? err.message : String(err));
    }
    await refreshTranscript();
  };
}

async function boot(): Promise<void> {
  const client = new GatewayClient(
    `${location.protocol}//${location.host}`,
    browserSocketFactory,
  );
  const missions = await client.listMissions();
  const select = byId<HTMLSelectElement>("mission-select");
  for (const mission of missions) {
    const option = document.createElement("option");
    option.value = mission.id;
    option.textContent = mission.id;
    select.appendChild(option);
  }

  byId<HTMLButtonElement>("create").onclick = async () => {
    const fixture = byId<HTMLInputElement>("fixture-input").value.trim();
    const info = await client.createSession({
      mission_id: select.value,
      mode: fixture ? "llm" : "direct",
      provider: "scripted",
      ...(fixture ? { fixture } : {}),
    });
    location.hash = info.session_id;
    await attach(client, info.session_id);
  };

  const fromHash = location.hash.replace(/^#/, "");
  if (fromHash) {
    await attach(client, fromHash);
  }
}

window.addEventListener("load", () => {
  void boot();
});
