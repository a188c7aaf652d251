import { describe, expect, it } from "vitest";
import {
  downsampleMinMax,
  formatWatts,
  niceTicks,
  scaleLinear,
  valueExtent,
} from "../src/charts/scale";
import { pieSlices, trendDirection, trendGlyph } from "../src/charts/widgets";

describe("scaleLinear", () => {
  it("maps the domain onto the range", () => {
    const s = scaleLinear(0, 10, 0, 100);
    expect(s(0)).toBe(0);
    expect(s(5)).toBe(50);
    expect(s(10)).toBe(100);
  });

  it("supports inverted ranges (canvas y axis)", () => {
    const s = scaleLinear(0, 10, 200, 0);
    expect(s(0)).toBe(200);
    expect(s(10)).toBe(0);
  });
});

describe("niceTicks", () => {
  it("produces round steps covering the domain", () => {
    const ticks = niceTicks(0, 100, 5);
    expect(ticks[0]).toBeGreaterThanOrEqual(0);
    expect(ticks[ticks.length - 1]).toBeLessThanOrEqual(100);
    const steps = new Set(ticks.slice(1).map((t, i) => +(t - ticks[i]).toFixed(9)));
    expect(steps.size).toBe(1);
  });

  it("handles degenerate domains", () => {
    expect(niceTicks(5, 5)).toEqual([5]);
  });
});

describe("downsampleMinMax", () => {
  const points = Array.from({ length: 10_000 }, (_, i) => ({
    t: i,
    v: Math.sin(i / 50) * 100 + (i % 97 === 0 ? 500 : 0), // spikes
  }));

  it("caps the point count at two per column", () => {
    const out = downsampleMinMax(points, 300);
    expect(out.length).toBeLessThanOrEqual(600);
  });

  it("preserves global extrema (spikes stay visible)", () => {
    const out = downsampleMinMax(points, 300);
    const maxIn = Math.max(...points.map((p) => p.v));
    const maxOut = Math.max(...out.map((p) => p.v));
    expect(maxOut).toBe(maxIn);
    const minIn = Math.min(...points.map((p) => p.v));
    expect(Math.min(...out.map((p) => p.v))).toBe(minIn);
  });

  it("keeps time ordering", () => {
    const out = downsampleMinMax(points, 200);
    for (let i = 1; i < out.length; i++) {
      expect(out[i].t).toBeGreaterThanOrEqual(out[i - 1].t);
    }
  });

  it("passes small series through untouched", () => {
    const small = points.slice(0, 100);
    expect(downsampleMinMax(small, 300)).toEqual(small);
  });
});

describe("valueExtent", () => {
  it("spans all series", () => {
    expect(
      valueExtent([[{ t: 0, v: 5 }], [{ t: 0, v: -3 }, { t: 1, v: 9 }]]),
    ).toEqual({ min: -3, max: 9 });
  });

  it("pads empty and flat extents", () => {
    expect(valueExtent([])).toEqual({ min: 0, max: 1 });
    expect(valueExtent([[{ t: 0, v: 4 }]])).toEqual({ min: 3, max: 5 });
  });
});

describe("pieSlices", () => {
  it("converts shares to contiguous angles", () => {
    const slices = pieSlices([
      { childId: "a", valueInW: 10, share: 0.25 },
      { childId: "b", valueInW: 30, share: 0.75 },
    ]);
    expect(slices[0].end).toBeCloseTo(slices[1].start);
    expect(slices[1].end - slices[0].start).toBeCloseTo(2 * Math.PI);
    expect(slices[0].end - slices[0].start).toBeCloseTo(Math.PI / 2);
  });
});

describe("trend arrows", () => {
  it("maps ratios to directions at the documented thresholds", () => {
    expect(trendDirection(1.2)).toBe("up");
    expect(trendDirection(1.05)).toBe("flat");
    expect(trendDirection(1.0)).toBe("flat");
    expect(trendDirection(0.95)).toBe("flat");
    expect(trendDirection(0.8)).toBe("down");
    expect(trendDirection(null)).toBe("unknown");
  });

  it("renders distinct glyphs", () => {
    const glyphs = new Set(["up", "down", "flat", "unknown"].map((d) => trendGlyph(d as never)));
    expect(glyphs.size).toBe(4);
  });
});

describe("formatWatts", () => {
  it("scales units", () => {
    expect(formatWatts(12.34)).toBe("12.3 W");
    expect(formatWatts(1234)).toBe("1.23 kW");
    expect(formatWatts(12_340_000)).toBe("12.34 MW");
  });
});
