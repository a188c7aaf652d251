// Configuration view: drag-and-drop hierarchy editor.
//
// Edits happen on a local copy; Save PUTs the whole tree and the registry
// assigns the next version. Violations come back as a 422 list and are shown
// inline next to the offending node where one can be matched.

import { Api, ApiError, SensorNode } from "../api";
import { addNode, cloneTree, findNode, isGroup, moveNode, removeNode } from "../model";
import type { ViewHandle } from "./dashboard";

export function mountConfig(container: HTMLElement, api: Api): ViewHandle {
  container.innerHTML = `
    <div class="toolbar">
      <button data-role="save">save</button>
      <button data-role="cancel">cancel</button>
      <span data-role="status" class="status"></span>
    </div>
    <div class="violations hidden" data-role="violations"></div>
    <div class="tree-editor" data-role="editor">loading...</div>`;
  const editor = container.querySelector<HTMLElement>("[data-role=editor]")!;
  const status = container.querySelector<HTMLElement>("[data-role=status]")!;
  const violationsBox = container.querySelector<HTMLElement>("[data-role=violations]")!;

  let serverVersion = 0;
  let draft: SensorNode | null = null;
  let violations: string[] = [];

  function nodeRow(node: SensorNode): string {
    const group = isGroup(node);
    const own = violations.filter((v) => v.includes(`'${node.id}'`));
    return `
      <div class="node-row ${group ? "group" : "machine"}" draggable="true" data-id="${node.id}">
        <span class="grip">::</span>
        <span class="label">${node.name ?? node.id} <code>${node.id}</code></span>
        ${group ? `<button data-act="add-machine" data-id="${node.id}">+sensor</button>
                   <button data-act="add-group" data-id="${node.id}">+group</button>` : ""}
        <button data-act="remove" data-id="${node.id}">remove</button>
        ${own.map((v) => `<span class="violation">${v}</span>`).join("")}
      </div>`;
  }

  function renderNode(node: SensorNode): string {
    const kids = (node.children ?? []).map((c) => `<li>${renderNode(c)}</li>`).join("");
    return `${nodeRow(node)}${isGroup(node) ? `<ul>${kids}</ul>` : ""}`;
  }

  function render(): void {
    if (!draft) return;
    editor.innerHTML = renderNode(draft);
    violationsBox.classList.toggle("hidden", violations.length === 0);
    violationsBox.innerHTML = violations.map((v) => `<div>${v}</div>`).join("");
  }

  function flash(message: string): void {
    status.textContent = message;
  }

  async function load(): Promise<void> {
    const doc = await api.getHierarchy();
    serverVersion = doc.version;
    draft = cloneTree(doc.root);
    violations = [];
    flash(`editing version ${serverVersion}`);
    render();
  }

  editor.addEventListener("click", (e) => {
    const button = (e.target as HTMLElement).closest<HTMLElement>("button[data-act]");
    if (!button || !draft) return;
    const id = button.dataset.id!;
    const act = button.dataset.act!;
    let result;
    if (act === "remove") {
      result = removeNode(draft, id);
    } else {
      const newId = window.prompt(`id for the new ${act === "add-group" ? "group" : "sensor"}?`);
      if (!newId) return;
      result = addNode(draft, id, newId, act === "add-group" ? "group" : "machine");
    }
    flash(result.ok ? "edited (unsaved)" : `blocked: ${result.error}`);
    if (result.ok) render();
  });

  editor.addEventListener("dragstart", (e) => {
    const row = (e.target as HTMLElement).closest<HTMLElement>(".node-row");
    if (row && e.dataTransfer) {
      e.dataTransfer.setData("text/plain", row.dataset.id!);
      e.dataTransfer.effectAllowed = "move";
    }
  });
  editor.addEventListener("dragover", (e) => {
    const row = (e.target as HTMLElement).closest<HTMLElement>(".node-row.group");
    if (row) e.preventDefault(); // groups are valid drop targets
  });
  editor.addEventListener("drop", (e) => {
    e.preventDefault();
    if (!draft) return;
    const row = (e.target as HTMLElement).closest<HTMLElement>(".node-row.group");
    const dragged = e.dataTransfer?.getData("text/plain");
    if (!row || !dragged) return;
    const result = moveNode(draft, dragged, row.dataset.id!);
    flash(result.ok ? `moved ${dragged} under ${row.dataset.id} (unsaved)` : `blocked: ${result.error}`);
    if (result.ok) render();
  });

  container.querySelector<HTMLButtonElement>("[data-role=save]")!.addEventListener("click", () => {
    if (!draft) return;
    api
      .putHierarchy(draft)
      .then(async ({ version }) => {
        flash(`saved version ${version}`);
        await load();
        flash(`saved and reloaded version ${serverVersion}`);
      })
      .catch((err) => {
        if (err instanceof ApiError && err.violations.length) {
          violations = err.violations;
          flash("rejected by the registry");
          render();
        } else {
          flash(`save failed: ${err}`);
        }
      });
  });
  container
    .querySelector<HTMLButtonElement>("[data-role=cancel]")!
    .addEventListener("click", () => void load().then(() => flash("edits discarded")));

  const ready = load();
  return {
    destroy: () => undefined,
    refresh: () => ready,
  };
}

export { findNode };
