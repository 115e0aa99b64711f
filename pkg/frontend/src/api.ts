/**
 * Gateway client: HTTP commands plus the telemetry socket with automatic
 * reconnect. The WebSocket constructor is injected so tests can drive the
 * client from node.
 */

import type {
  MissionInfo,
  SessionInfo,
  SocketMessage,
  TranscriptTurn,
  WorldWire,
} from "./types.js";

export interface SocketLike {
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface TelemetryHandlers {
  onMessage(message: SocketMessage): void;
  onDisconnect(): void;
}

export class TelemetrySubscription {
  private socket: SocketLike | null = null;
  private closed = false;
  private reconnectDelayMs = 250;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    private readonly handlers: TelemetryHandlers,
  ) {
    this.connect();
  }

  private connect(): void {
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onmessage = (event) => {
      const message = JSON.parse(String(event.data)) as SocketMessage;
      this.handlers.onMessage(message);
      if (message.type === "finished") {
        this.close();
      }
    };
    socket.onclose = () => {
      if (this.closed) {
        return;
      }
      this.handlers.onDisconnect();
      setTimeout(() => {
        if (!this.closed) {
          this.connect();
        }
      }, this.reconnectDelayMs);
    };
    socket.onerror = () => {
      /* onclose follows and drives the reconnect */
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly socketFactory: SocketFactory,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await resp.json();
    if (!resp.ok) {
      const reason = (body as { detail?: { reason?: string } }).detail?.reason;
      throw new Error(reason ?? `request failed with ${resp.status}`);
    }
    return body as T;
  }

  listMissions(): Promise<MissionInfo[]> {
    return this.request<MissionInfo[]>("/missions");
  }

  missionWorld(missionId: string): Promise<WorldWire> {
    return this.request<WorldWire>(`/missions/${missionId}/world`);
  }

  createSession(body: {
    mission_id: string;
    mode: "direct" | "llm";
    provider?: "scripted" | "http";
    fixture?: string;
    provider_delay_s?: number;
  }): Promise<SessionInfo> {
    return this.request<SessionInfo>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  sessionStatus(sessionId: string): Promise<SessionInfo> {
    return this.request<SessionInfo>(`/sessions/${sessionId}`);
  }

  submitPrompt(sessionId: string, text: string): Promise<{ accepted: boolean; state: string }> {
    return this.request(`/sessions/${sessionId}/prompt`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  runDirect(sessionId: string): Promise<{ accepted: boolean; state: string }> {
    return this.request(`/sessions/${sessionId}/run`, { method: "POST" });
  }

  transcript(sessionId: string): Promise<TranscriptTurn[]> {
    return this.request<TranscriptTurn[]>(`/sessions/${sessionId}/transcript`);
  }

  subscribeTelemetry(sessionId: string, handlers: TelemetryHandlers): TelemetrySubscription {
    const wsBase = this.baseUrl.replace(/^http/, "ws");
    return new TelemetrySubscription(
      `${wsBase}/sessions/${sessionId}/telemetry`,
      this.socketFactory,
      handlers,
    );
  }
}
