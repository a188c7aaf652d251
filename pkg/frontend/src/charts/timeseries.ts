// Canvas time-series chart: multiple series, wheel zoom, drag pan, and an
// automatically advancing right edge while the window is live.

import type { LiveWindow } from "../poll";
import {
  downsampleMinMax,
  formatClock,
  formatWatts,
  niceTicks,
  Point,
  scaleLinear,
  valueExtent,
} from "./scale";

const COLORS = ["#2f81f7", "#e3685c", "#4cc38a", "#d4a72c", "#a371f7", "#fd8c73"];
const PAD = { left: 64, right: 12, top: 10, bottom: 22 };

export interface Series {
  label: string;
  points: Point[];
}

export class TimeSeriesChart {
  private ctx: CanvasRenderingContext2D;
  private series: Series[] = [];
  private dragging: number | null = null;
  onWindowChange: (() => void) | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private window: LiveWindow,
  ) {
    this.ctx = canvas.getContext("2d")!;
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      const { from, to } = this.window.bounds();
      const frac = (e.offsetX - PAD.left) / this.plotWidth();
      const pivot = from + (to - from) * Math.min(1, Math.max(0, frac));
      this.window.zoom(e.deltaY > 0 ? 1.25 : 0.8, pivot);
      this.onWindowChange?.();
      this.draw();
    });
    canvas.addEventListener("pointerdown", (e) => {
      this.dragging = e.offsetX;
      canvas.setPointerCapture(e.pointerId);
    });
    canvas.addEventListener("pointermove", (e) => {
      if (this.dragging === null) return;
      const { from, to } = this.window.bounds();
      const perPixel = (to - from) / this.plotWidth();
      this.window.pan((this.dragging - e.offsetX) * perPixel);
      this.dragging = e.offsetX;
      this.onWindowChange?.();
      this.draw();
    });
    canvas.addEventListener("pointerup", () => (this.dragging = null));
    canvas.addEventListener("dblclick", () => {
      this.window.resumeLive();
      this.onWindowChange?.();
      this.draw();
    });
  }

  private plotWidth(): number {
    return this.canvas.width - PAD.left - PAD.right;
  }

  setSeries(series: Series[]): void {
    this.series = series;
    this.draw();
  }

  draw(): void {
    const { ctx, canvas } = this;
    const w = canvas.width;
    const h = canvas.height;
    ctx.clearRect(0, 0, w, h);
    const { from, to } = this.window.bounds();
    const plotted = this.series.map((s) => ({
      label: s.label,
      points: downsampleMinMax(
        s.points.filter((p) => p.t >= from && p.t < to),
        this.plotWidth(),
      ),
    }));
    const { min, max } = valueExtent(plotted.map((s) => s.points));
    const x = scaleLinear(from, to, PAD.left, w - PAD.right);
    const y = scaleLinear(min, max, h - PAD.bottom, PAD.top);

    ctx.strokeStyle = "#30363d";
    ctx.fillStyle = "#8b949e";
    ctx.font = "11px system-ui";
    ctx.lineWidth = 1;
    for (const tick of niceTicks(min, max)) {
      const py = y(tick);
      ctx.beginPath();
      ctx.moveTo(PAD.left, py);
      ctx.lineTo(w - PAD.right, py);
      ctx.stroke();
      ctx.fillText(formatWatts(tick), 4, py + 3);
    }
    for (const tick of niceTicks(from, to, 6)) {
      ctx.fillText(formatClock(tick, to - from), x(tick) - 18, h - 6);
    }

    plotted.forEach((s, i) => {
      ctx.strokeStyle = COLORS[i % COLORS.length];
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      s.points.forEach((p, j) => {
        if (j === 0) ctx.moveTo(x(p.t), y(p.v));
        else ctx.lineTo(x(p.t), y(p.v));
      });
      ctx.stroke();
    });

    // legend
    let lx = PAD.left + 6;
    plotted.forEach((s, i) => {
      ctx.fillStyle = COLORS[i % COLORS.length];
      ctx.fillRect(lx, PAD.top, 10, 10);
      ctx.fillStyle = "#c9d1d9";
      ctx.fillText(s.label, lx + 14, PAD.top + 9);
      lx += 24 + ctx.measureText(s.label).width;
    });
    if (!this.window.live) {
      ctx.fillStyle = "#d4a72c";
      ctx.fillText("paused (double-click to follow live)", w - 220, PAD.top + 9);
    }
  }
}
