// Histogram bars, contribution pie, and trend arrows on plain canvas.

import type { DistributionEntry, HistogramBucket } from "../api";
import { formatWatts, scaleLinear } from "./scale";

const PIE_COLORS = ["#2f81f7", "#e3685c", "#4cc38a", "#d4a72c", "#a371f7", "#fd8c73", "#79c0ff"];

export function drawHistogram(canvas: HTMLCanvasElement, buckets: HistogramBucket[]): void {
  const ctx = canvas.getContext("2d")!;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  if (!buckets.length) {
    drawEmpty(ctx, w, h);
    return;
  }
  const maxCount = Math.max(...buckets.map((b) => b.count), 1);
  const y = scaleLinear(0, maxCount, h - 18, 6);
  const barW = (w - 50) / buckets.length;
  ctx.font = "10px system-ui";
  buckets.forEach((b, i) => {
    const px = 40 + i * barW;
    ctx.fillStyle = "#2f81f7";
    ctx.fillRect(px, y(b.count), Math.max(1, barW - 2), h - 18 - y(b.count));
  });
  ctx.fillStyle = "#8b949e";
  ctx.fillText(formatWatts(buckets[0].lower), 40, h - 5);
  const last = buckets[buckets.length - 1];
  const label = formatWatts(last.upper);
  ctx.fillText(label, w - 10 - ctx.measureText(label).width, h - 5);
  ctx.fillText(String(maxCount), 4, 14);
}

export function pieSlices(
  entries: DistributionEntry[],
): { childId: string; start: number; end: number; share: number }[] {
  const slices = [];
  let angle = -Math.PI / 2;
  for (const e of entries) {
    const sweep = Math.max(0, e.share) * 2 * Math.PI;
    slices.push({ childId: e.childId, start: angle, end: angle + sweep, share: e.share });
    angle += sweep;
  }
  return slices;
}

export function drawPie(canvas: HTMLCanvasElement, entries: DistributionEntry[]): void {
  const ctx = canvas.getContext("2d")!;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  if (!entries.length) {
    drawEmpty(ctx, w, h);
    return;
  }
  const cx = h / 2;
  const cy = h / 2;
  const r = h / 2 - 8;
  pieSlices(entries).forEach((slice, i) => {
    ctx.fillStyle = PIE_COLORS[i % PIE_COLORS.length];
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.arc(cx, cy, r, slice.start, slice.end);
    ctx.closePath();
    ctx.fill();
  });
  ctx.font = "11px system-ui";
  entries.slice(0, 8).forEach((e, i) => {
    const ly = 16 + i * 16;
    ctx.fillStyle = PIE_COLORS[i % PIE_COLORS.length];
    ctx.fillRect(h + 8, ly - 9, 10, 10);
    ctx.fillStyle = "#c9d1d9";
    ctx.fillText(`${e.childId} ${(e.share * 100).toFixed(1)}%`, h + 22, ly);
  });
}

export type TrendDirection = "up" | "down" | "flat" | "unknown";

// Arrow thresholds: >1.05 rising, <0.95 falling, otherwise steady.
export function trendDirection(ratio: number | null): TrendDirection {
  if (ratio === null || !isFinite(ratio)) return "unknown";
  if (ratio > 1.05) return "up";
  if (ratio < 0.95) return "down";
  return "flat";
}

export function trendGlyph(direction: TrendDirection): string {
  switch (direction) {
    case "up":
      return "↗"; // rising consumption
    case "down":
      return "↘";
    case "flat":
      return "→";
    default:
      return "•";
  }
}

export function renderTrendArrow(el: HTMLElement, label: string, ratio: number | null): void {
  const direction = trendDirection(ratio);
  el.className = `trend trend-${direction}`;
  const pct =
    ratio === null ? "n/a" : `${ratio >= 1 ? "+" : ""}${((ratio - 1) * 100).toFixed(1)}%`;
  el.textContent = `${trendGlyph(direction)} ${label} ${pct}`;
}

function drawEmpty(ctx: CanvasRenderingContext2D, w: number, h: number): void {
  ctx.fillStyle = "#8b949e";
  ctx.font = "12px system-ui";
  ctx.fillText("no data in window", w / 2 - 50, h / 2);
}
