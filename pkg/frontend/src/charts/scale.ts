// Pure chart math: value<->pixel mapping, nice ticks, min-max downsampling.

export interface Point {
  t: number;
  v: number;
}

export function scaleLinear(
  domainMin: number,
  domainMax: number,
  rangeMin: number,
  rangeMax: number,
): (x: number) => number {
  const span = domainMax - domainMin || 1;
  return (x: number) => rangeMin + ((x - domainMin) / span) * (rangeMax - rangeMin);
}

export function niceTicks(min: number, max: number, target = 5): number[] {
  if (!(max > min)) return [min];
  const rawStep = (max - min) / target;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 5, 10].map((m) => m * mag);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[3];
  const first = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= max + step / 1e6; v += step) ticks.push(+v.toPrecision(12));
  return ticks;
}

// Min-max decimation: one column per horizontal pixel keeps spikes visible
// while capping the drawn segments, so 10^4+ point series stay smooth.
export function downsampleMinMax(points: Point[], columns: number): Point[] {
  if (columns < 1 || points.length <= 2 * columns) return points;
  const t0 = points[0].t;
  const t1 = points[points.length - 1].t;
  const span = t1 - t0 || 1;
  const buckets: Point[][] = Array.from({ length: columns }, () => []);
  for (const p of points) {
    const idx = Math.min(columns - 1, Math.floor(((p.t - t0) / span) * columns));
    buckets[idx].push(p);
  }
  const out: Point[] = [];
  for (const bucket of buckets) {
    if (!bucket.length) continue;
    let lo = bucket[0];
    let hi = bucket[0];
    for (const p of bucket) {
      if (p.v < lo.v) lo = p;
      if (p.v > hi.v) hi = p;
    }
    if (lo === hi) {
      out.push(lo);
    } else {
      out.push(lo.t <= hi.t ? lo : hi, lo.t <= hi.t ? hi : lo);
    }
  }
  return out;
}

export function valueExtent(series: Point[][]): { min: number; max: number } {
  let min = Infinity;
  let max = -Infinity;
  for (const points of series) {
    for (const p of points) {
      if (p.v < min) min = p.v;
      if (p.v > max) max = p.v;
    }
  }
  if (min === Infinity) return { min: 0, max: 1 };
  if (min === max) return { min: min - 1, max: max + 1 };
  return { min, max };
}

export function formatWatts(v: number): string {
  if (Math.abs(v) >= 1_000_000) return `${(v / 1_000_000).toFixed(2)} MW`;
  if (Math.abs(v) >= 1000) return `${(v / 1000).toFixed(2)} kW`;
  return `${v.toFixed(1)} W`;
}

export function formatClock(ms: number, windowMs: number): string {
  const d = new Date(ms);
  if (windowMs > 36e5 * 48) {
    return `${d.getMonth() + 1}/${d.getDate()} ${d.getHours()}h`;
  }
  const hh = String(d.getHours()).padStart(2, "0");
  const mm = String(d.getMinutes()).padStart(2, "0");
  if (windowMs <= 120_000) {
    const ss = String(d.getSeconds()).padStart(2, "0");
    return `${hh}:${mm}:${ss}`;
  }
  return `${hh}:${mm}`;
}
