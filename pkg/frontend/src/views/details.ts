// Sensor-details view: the dashboard widgets scoped to any node picked from
// the hierarchy tree.

import type { Api, SensorNode } from "../api";
import { mountDashboard, ViewHandle } from "./dashboard";

function renderTree(node: SensorNode, selected: string): string {
  const label = node.name ?? node.id;
  const cls = node.id === selected ? "node selected" : "node";
  const kids = (node.children ?? [])
    .map((c) => `<li>${renderTree(c, selected)}</li>`)
    .join("");
  return `<span class="${cls}" data-id="${node.id}">${label}</span>${
    kids ? `<ul>${kids}</ul>` : ""
  }`;
}

export function mountDetails(container: HTMLElement, api: Api, pollMs = 2000): ViewHandle {
  container.innerHTML = `
    <div class="split">
      <nav class="tree" data-role="tree">loading hierarchy...</nav>
      <div data-role="widgets"></div>
    </div>`;
  const tree = container.querySelector<HTMLElement>("[data-role=tree]")!;
  const widgets = container.querySelector<HTMLElement>("[data-role=widgets]")!;
  let selected = "root";
  let inner: ViewHandle | null = null;

  function select(id: string, root: SensorNode): void {
    selected = id;
    tree.innerHTML = renderTree(root, selected);
    inner?.destroy();
    inner = mountDashboard(widgets, api, selected, pollMs);
  }

  const load = api.getHierarchy().then((doc) => {
    select(doc.root.id, doc.root);
    tree.addEventListener("click", (e) => {
      const target = (e.target as HTMLElement).closest<HTMLElement>(".node");
      if (target?.dataset.id) select(target.dataset.id, doc.root);
    });
  });

  return {
    destroy: () => inner?.destroy(),
    refresh: async () => {
      await load;
      await inner?.refresh();
    },
  };
}
