/** Wire types mirroring the gateway's JSON payloads. */

export interface PoseWire {
  position: [number, number, number];
  yaw: number;
  roll: number;
  pitch: number;
}

export interface TelemetryFrame {
  seq: number;
  sim_time: number;
  pose: PoseWire;
  last_call: string | null;
  calls_used: number;
  accrued_cost: number;
  collision_count: number;
}

export type SessionState = "idle" | "awaiting_llm" | "executing" | "finished";

export interface SessionInfo {
  session_id: string;
  mission_id: string;
  mode: "direct" | "llm";
  state: SessionState;
  sim_time: number;
  pose: PoseWire;
  calls_used: number;
  call_limit: number;
  accrued_cost: number;
  collision_count: number;
  final_status: string | null;
}

export interface MissionInfo {
  id: string;
  start: [number, number, number];
  goal: [number, number, number];
  allowed_strategy: string;
  call_limit: number;
  goal_tolerance: number;
  height_bound: number | null;
  prompt_constraints: string[];
}

export interface WorldExtentWire {
  x_min: number;
  x_max: number;
  y_min: number;
  y_max: number;
  z_ceiling: number;
}

export interface ObstacleWire {
  id: string;
  shape: "cube" | "sphere";
  center: [number, number, number];
  edge_lengths?: [number, number, number];
  radius?: number;
  clearance: number;
}

export interface WorldWire {
  schema: string;
  extent: WorldExtentWire;
  resolution: number;
  obstacles: ObstacleWire[];
}

export interface TranscriptToolCall {
  id: string;
  name: string;
  arguments: Record<string, unknown>;
}

export interface TranscriptTurn {
  role: "system" | "user" | "assistant" | "tool";
  content: string;
  tool_calls?: TranscriptToolCall[];
  tool_call_id?: string;
}

export type SocketMessage =
  | { type: "snapshot"; state: SessionState; mission_id: string; frames: TelemetryFrame[] }
  | { type: "frame"; frame: TelemetryFrame }
  | { type: "finished"; status: string }
  | { type: "error"; reason: string };
