/**
 * Altitude-vs-sim-time strip chart with the mission's height-bound guide
 * line when one is declared.
 */

import type { DrawContext } from "./map.js";
import type { ConsoleState } from "./state.js";

const PAD = 28;

export class AltitudeStrip {
  constructor(private readonly heightBound: number | null) {}

  render(ctx: DrawContext, width: number, height: number, state: ConsoleState): void {
    const series = state.altitudeSeries;
    const tMax = Math.max(10, ...series.map(([t]) => t));
    const zMax = Math.max(this.heightBound ?? 0, ...series.map(([, z]) => z), 1) * 1.15;
    const sx = (t: number) => PAD + (t / tMax) * (width - 2 * PAD);
    const sy = (z: number) => height - PAD - (z / zMax) * (height - 2 * PAD);

    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#fafafa";
    ctx.fillRect(PAD, PAD, width - 2 * PAD, height - 2 * PAD);
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 1;
    ctx.strokeRect(PAD, PAD, width - 2 * PAD, height - 2 * PAD);

    if (this.heightBound !== null) {
      ctx.strokeStyle = "#d32f2f";
      ctx.setLineDash([6, 4]);
      ctx.beginPath();
      ctx.moveTo(PAD, sy(this.heightBound));
      ctx.lineTo(width - PAD, sy(this.heightBound));
      ctx.stroke();
      ctx.setLineDash([]);
      ctx.fillStyle = "#d32f2f";
      ctx.font = "11px sans-serif";
      ctx.fillText(`${this.heightBound} m bound`, PAD + 4, sy(this.heightBound) - 4);
    }

    if (series.length > 1) {
      ctx.strokeStyle = "#1565c0";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(sx(series[0]![0]), sy(series[0]![1]));
      for (const [t, z] of series.slice(1)) {
        ctx.lineTo(sx(t), sy(z));
      }
      ctx.stroke();
    }

    ctx.fillStyle = "#333";
    ctx.font = "11px sans-serif";
    ctx.fillText("altitude (m) vs sim time (s)", PAD + 4, height - 8);
  }
}
