// Pure tree-editing operations behind the configuration view. The editor
// works on a local copy and only PUTs when the user saves; every mutation
// here mirrors a server-side validation rule so obviously-broken edits are
// blocked before the network round trip.

import type { SensorNode } from "./api";

export function cloneTree(node: SensorNode): SensorNode {
  return JSON.parse(JSON.stringify(node));
}

export function isGroup(node: SensorNode): boolean {
  return Array.isArray(node.children);
}

export function findNode(root: SensorNode, id: string): SensorNode | null {
  if (root.id === id) return root;
  for (const child of root.children ?? []) {
    const hit = findNode(child, id);
    if (hit) return hit;
  }
  return null;
}

export function findParent(root: SensorNode, id: string): SensorNode | null {
  for (const child of root.children ?? []) {
    if (child.id === id) return root;
    const hit = findParent(child, id);
    if (hit) return hit;
  }
  return null;
}

export function allIds(root: SensorNode): string[] {
  const out: string[] = [];
  const stack = [root];
  while (stack.length) {
    const node = stack.pop()!;
    out.push(node.id);
    for (const child of node.children ?? []) stack.push(child);
  }
  return out;
}

export function leafIds(root: SensorNode): string[] {
  return allIds(root).filter((id) => !isGroup(findNode(root, id)!));
}

export function groupIds(root: SensorNode): string[] {
  return allIds(root).filter((id) => isGroup(findNode(root, id)!));
}

export function isDescendant(root: SensorNode, ancestorId: string, id: string): boolean {
  const ancestor = findNode(root, ancestorId);
  if (!ancestor) return false;
  return ancestor.id !== id && findNode(ancestor, id) !== null;
}

export interface EditResult {
  ok: boolean;
  error?: string;
}

// Reparent `id` under `targetGroupId`. Refuses moves that would detach the
// root, target a non-group, or create a cycle (dropping a group into its own
// subtree) — the same invariants the registry enforces server-side.
export function moveNode(root: SensorNode, id: string, targetGroupId: string): EditResult {
  if (id === root.id) return { ok: false, error: "cannot move the root" };
  if (id === targetGroupId) return { ok: false, error: "cannot drop a node onto itself" };
  const target = findNode(root, targetGroupId);
  if (!target) return { ok: false, error: `unknown target ${targetGroupId}` };
  if (!isGroup(target)) return { ok: false, error: `${targetGroupId} is not a group` };
  if (isDescendant(root, id, targetGroupId)) {
    return { ok: false, error: "cannot move a group into its own subtree" };
  }
  const parent = findParent(root, id);
  const node = findNode(root, id);
  if (!parent || !node) return { ok: false, error: `unknown node ${id}` };
  if (parent.id === targetGroupId) return { ok: true };
  parent.children = parent.children!.filter((c) => c.id !== id);
  target.children!.push(node);
  return { ok: true };
}

export function addNode(
  root: SensorNode,
  parentGroupId: string,
  id: string,
  kind: "group" | "machine",
  name?: string,
): EditResult {
  if (!id || /\s/.test(id) || id.length > 128) {
    return { ok: false, error: "id must be non-empty, without whitespace, at most 128 chars" };
  }
  if (allIds(root).includes(id)) return { ok: false, error: `duplicate id ${id}` };
  const parent = findNode(root, parentGroupId);
  if (!parent || !isGroup(parent)) {
    return { ok: false, error: `${parentGroupId} is not a group` };
  }
  const node: SensorNode = { id, name: name ?? id };
  if (kind === "group") node.children = [];
  parent.children!.push(node);
  return { ok: true };
}

export function removeNode(root: SensorNode, id: string): EditResult {
  if (id === root.id) return { ok: false, error: "cannot remove the root" };
  const parent = findParent(root, id);
  if (!parent) return { ok: false, error: `unknown node ${id}` };
  parent.children = parent.children!.filter((c) => c.id !== id);
  return { ok: true };
}

export function renameNode(root: SensorNode, id: string, name: string): EditResult {
  const node = findNode(root, id);
  if (!node) return { ok: false, error: `unknown node ${id}` };
  node.name = name;
  return { ok: true };
}
