/**
 * Top-down map: occupancy cells, obstacle footprints with clearance rings,
 * the agent marker with its yaw arrow, and the accumulating trace.
 *
 * Drawing goes through a minimal context interface so the renderer is
 * testable without a browser canvas.
 */

import type { ConsoleState } from "./state.js";
import type { MissionInfo, ObstacleWire, WorldWire } from "./types.js";

export interface DrawContext {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  setLineDash(segments: number[]): void;
  fillText(text: string, x: number, y: number): void;
  font: string;
}

const PAD = 24;

function cellOccupied(obstacles: ObstacleWire[], x0: number, y0: number, x1: number, y1: number): boolean {
  for (const obs of obstacles) {
    if (obs.shape === "cube" && obs.edge_lengths) {
      const [cx, cy] = obs.center;
      const [ex, ey] = obs.edge_lengths;
      if (
        Math.min(cx + ex / 2, x1) > Math.max(cx - ex / 2, x0) &&
        Math.min(cy + ey / 2, y1) > Math.max(cy - ey / 2, y0)
      ) {
        return true;
      }
    } else if (obs.shape === "sphere" && obs.radius !== undefined) {
      const [cx, cy] = obs.center;
      const qx = Math.min(Math.max(cx, x0), x1);
      const qy = Math.min(Math.max(cy, y0), y1);
      if ((qx - cx) ** 2 + (qy - cy) ** 2 < obs.radius ** 2) {
        return true;
      }
    }
  }
  return false;
}

export class MapRenderer {
  constructor(
    private readonly world: WorldWire,
    private readonly mission: MissionInfo,
  ) {}

  render(ctx: DrawContext, width: number, height: number, state: ConsoleState): void {
    const ext = this.world.extent;
    const spanX = ext.x_max - ext.x_min;
    const spanY = ext.y_max - ext.y_min;
    const scale = Math.min((width - 2 * PAD) / spanX, (height - 2 * PAD) / spanY);
    const sx = (x: number) => PAD + (x - ext.x_min) * scale;
    const sy = (y: number) => height - PAD - (y - ext.y_min) * scale;

    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#fafafa";
    ctx.fillRect(sx(ext.x_min), sy(ext.y_max), spanX * scale, spanY * scale);

    // Occupancy cells at base resolution.
    const res = this.world.resolution;
    ctx.fillStyle = "#e4e4e4";
    for (let y = ext.y_min; y < ext.y_max - 1e-9; y += res) {
      for (let x = ext.x_min; x < ext.x_max - 1e-9; x += res) {
        if (cellOccupied(this.world.obstacles, x, y, x + res, y + res)) {
          ctx.fillRect(sx(x), sy(y + res), res * scale, res * scale);
        }
      }
    }

    // Obstacle footprints and clearance rings.
    for (const obs of this.world.obstacles) {
      if (obs.shape === "cube" && obs.edge_lengths) {
        const [cx, cy] = obs.center;
        const [ex, ey] = obs.edge_lengths;
        ctx.fillStyle = "#8d6e63";
        ctx.fillRect(sx(cx - ex / 2), sy(cy + ey / 2), ex * scale, ey * scale);
        if (obs.clearance > 0) {
          ctx.strokeStyle = "#d32f2f";
          ctx.lineWidth = 1;
          ctx.setLineDash([4, 3]);
          ctx.strokeRect(
            sx(cx - ex / 2 - obs.clearance),
            sy(cy + ey / 2 + obs.clearance),
            (ex + 2 * obs.clearance) * scale,
            (ey + 2 * obs.clearance) * scale,
          );
          ctx.setLineDash([]);
        }
      } else if (obs.shape === "sphere" && obs.radius !== undefined) {
        const [cx, cy] = obs.center;
        ctx.fillStyle = "#90a4ae";
        ctx.beginPath();
        ctx.arc(sx(cx), sy(cy), obs.radius * scale, 0, 2 * Math.PI);
        ctx.fill();
        if (obs.clearance > 0) {
          ctx.strokeStyle = "#d32f2f";
          ctx.lineWidth = 1;
          ctx.setLineDash([4, 3]);
          ctx.beginPath();
          ctx.arc(sx(cx), sy(cy), (obs.radius + obs.clearance) * scale, 0, 2 * Math.PI);
          ctx.stroke();
          ctx.setLineDash([]);
        }
      }
    }

    // World border.
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 1;
    ctx.strokeRect(sx(ext.x_min), sy(ext.y_max), spanX * scale, spanY * scale);

    // Start and goal markers.
    ctx.fillStyle = "#2e7d32";
    ctx.beginPath();
    ctx.arc(sx(this.mission.start[0]), sy(this.mission.start[1]), 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#c62828";
    ctx.beginPath();
    ctx.arc(sx(this.mission.goal[0]), sy(this.mission.goal[1]), 5, 0, 2 * Math.PI);
    ctx.fill();

    // Trajectory trace.
    const trace = state.trace;
    if (trace.length > 1) {
      ctx.strokeStyle = "#1565c0";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(sx(trace[0]![0]), sy(trace[0]![1]));
      for (const [x, y] of trace.slice(1)) {
        ctx.lineTo(sx(x), sy(y));
      }
      ctx.stroke();
    }

    // Agent marker with yaw arrow.
    const frame = state.latestFrame;
    if (frame) {
      const [ax, ay] = frame.pose.position;
      const yaw = frame.pose.yaw;
      ctx.fillStyle = "#0d47a1";
      ctx.beginPath();
      ctx.arc(sx(ax), sy(ay), 6, 0, 2 * Math.PI);
      ctx.fill();
      ctx.strokeStyle = "#0d47a1";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(sx(ax), sy(ay));
      ctx.lineTo(sx(ax + 1.2 * Math.cos(yaw)), sy(ay + 1.2 * Math.sin(yaw)));
      ctx.stroke();
    }

    if (state.stale) {
      ctx.fillStyle = "#b71c1c";
      ctx.font = "14px sans-serif";
      ctx.fillText("telemetry stale, reconnecting...", PAD, 16);
    }
  }
}
