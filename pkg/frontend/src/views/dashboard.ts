// Overall-consumption view: trend arrows, live time series, histogram, pie.

import type { Api } from "../api";
import { LiveWindow, Poller } from "../poll";
import { Series, TimeSeriesChart } from "../charts/timeseries";
import { drawHistogram, drawPie, renderTrendArrow } from "../charts/widgets";

const HOUR = 3600_000;
export const TREND_WINDOWS: [string, number][] = [
  ["1 h", HOUR],
  ["24 h", 24 * HOUR],
  ["7 d", 7 * 24 * HOUR],
];

export interface ViewHandle {
  destroy(): void;
  refresh(): Promise<void>;
}

export function mountDashboard(
  container: HTMLElement,
  api: Api,
  sensorId = "root",
  pollMs = 2000,
): ViewHandle {
  container.innerHTML = `
    <section class="widgets">
      <div class="trend-row" data-role="trends">
        ${TREND_WINDOWS.map(([label]) => `<span class="trend" data-trend="${label}">${label}</span>`).join("")}
      </div>
      <div class="banner hidden" data-role="banner">showing stale data, retrying</div>
      <canvas data-role="series" width="900" height="260"></canvas>
      <div class="row">
        <figure><canvas data-role="histogram" width="440" height="180"></canvas>
          <figcaption>value distribution</figcaption></figure>
        <figure><canvas data-role="pie" width="440" height="180"></canvas>
          <figcaption>contribution of sub-consumers</figcaption></figure>
      </div>
    </section>`;

  const banner = container.querySelector<HTMLElement>("[data-role=banner]")!;
  const window_ = new LiveWindow(15 * 60_000);
  const chart = new TimeSeriesChart(
    container.querySelector<HTMLCanvasElement>("[data-role=series]")!,
    window_,
  );
  const histogramCanvas = container.querySelector<HTMLCanvasElement>("[data-role=histogram]")!;
  const pieCanvas = container.querySelector<HTMLCanvasElement>("[data-role=pie]")!;

  async function tick(): Promise<void> {
    const { from, to } = window_.bounds();
    const [records, histogram, distribution, trends] = await Promise.all([
      api.getRange(sensorId, from, to),
      api.getHistogram(sensorId, from, to, 20),
      api.getDistribution(sensorId).catch(() => []),
      Promise.all(TREND_WINDOWS.map(([, ms]) => api.getTrend(sensorId, ms))),
    ]);
    const points = records.map((r) => ({
      t: r.timestamp,
      v: r.sumInW ?? r.valueInW ?? 0,
    }));
    const series: Series[] = [{ label: sensorId, points }];
    chart.setSeries(series);
    drawHistogram(histogramCanvas, histogram);
    drawPie(pieCanvas, distribution);
    TREND_WINDOWS.forEach(([label], i) => {
      const el = container.querySelector<HTMLElement>(`[data-trend="${label}"]`)!;
      renderTrendArrow(el, label, trends[i].ratio);
    });
    banner.classList.add("hidden");
  }

  const poller = new Poller(tick, { intervalMs: pollMs });
  poller.onError = () => banner.classList.remove("hidden");
  chart.onWindowChange = () => void tick().catch(() => banner.classList.remove("hidden"));
  poller.start();

  return {
    destroy: () => poller.stop(),
    refresh: tick,
  };
}
