// Comparison view: overlay several sensors in one chart, stack more charts.

import type { Api } from "../api";
import { allIds } from "../model";
import { LiveWindow, Poller } from "../poll";
import { Series, TimeSeriesChart } from "../charts/timeseries";
import type { ViewHandle } from "./dashboard";

interface Panel {
  chart: TimeSeriesChart;
  window: LiveWindow;
  picker: HTMLSelectElement;
  root: HTMLElement;
}

export function mountComparison(container: HTMLElement, api: Api, pollMs = 2000): ViewHandle {
  container.innerHTML = `
    <div class="toolbar">
      <button data-role="add-chart">add chart</button>
    </div>
    <div data-role="panels"></div>`;
  const panelsHost = container.querySelector<HTMLElement>("[data-role=panels]")!;
  const panels: Panel[] = [];
  let sensorIds: string[] = [];

  function addPanel(): void {
    const root = document.createElement("section");
    root.className = "panel";
    root.innerHTML = `
      <select multiple size="4" data-role="picker">
        ${sensorIds.map((id) => `<option value="${id}">${id}</option>`).join("")}
      </select>
      <canvas width="900" height="220"></canvas>
      <button data-role="remove">remove</button>`;
    panelsHost.appendChild(root);
    const window_ = new LiveWindow(15 * 60_000);
    const panel: Panel = {
      chart: new TimeSeriesChart(root.querySelector("canvas")!, window_),
      window: window_,
      picker: root.querySelector<HTMLSelectElement>("[data-role=picker]")!,
      root,
    };
    panel.picker.addEventListener("change", () => void refreshPanel(panel));
    root.querySelector<HTMLButtonElement>("[data-role=remove]")!.addEventListener("click", () => {
      panels.splice(panels.indexOf(panel), 1);
      root.remove();
    });
    panels.push(panel);
  }

  async function refreshPanel(panel: Panel): Promise<void> {
    const chosen = [...panel.picker.selectedOptions].map((o) => o.value);
    const { from, to } = panel.window.bounds();
    const series: Series[] = await Promise.all(
      chosen.map(async (id) => {
        const records = await api.getRange(id, from, to);
        return {
          label: id,
          points: records.map((r) => ({ t: r.timestamp, v: r.sumInW ?? r.valueInW ?? 0 })),
        };
      }),
    );
    panel.chart.setSeries(series);
  }

  async function tick(): Promise<void> {
    await Promise.all(panels.map(refreshPanel));
  }

  const ready = api.getHierarchy().then((doc) => {
    sensorIds = allIds(doc.root);
    addPanel();
  });
  container
    .querySelector<HTMLButtonElement>("[data-role=add-chart]")!
    .addEventListener("click", addPanel);

  const poller = new Poller(tick, { intervalMs: pollMs });
  poller.start();
  return {
    destroy: () => poller.stop(),
    refresh: async () => {
      await ready;
      await tick();
    },
  };
}
