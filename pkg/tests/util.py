"""Shared test helpers: tree generators and independent oracles.

The oracles here deliberately re-derive structure from raw documents
(parent-pointer walks, DFS collection, brute-force folds) so they stay
independent of the package's indexed implementations.
"""

from __future__ import annotations

import random


def pilot_tree() -> dict:
    """Three PDU groups feeding 16 servers, as in the pilot deployment."""
    split = (6, 5, 5)
    children = []
    n = 0
    for i, k in enumerate(split, start=1):
        servers = [{"id": f"server-{n + j}", "name": f"Server {n + j}"} for j in range(k)]
        n += k
        children.append({"id": f"pdu-{i}", "name": f"PDU {i}", "children": servers})
    return {"root": {"id": "root", "name": "Data Center", "children": children}}


def random_tree(rng: random.Random, max_depth: int = 5, max_leaves: int = 50) -> dict:
    """Random hierarchy doc: 1..max_leaves leaves spread over <= max_depth levels."""
    root = {"id": "root", "name": "Root", "children": []}
    groups = [(root, 1)]
    gid = 0
    for i in range(rng.randint(1, max_leaves)):
        node, depth = groups[rng.randrange(len(groups))]
        while depth < max_depth - 1 and rng.random() < 0.3:
            gid += 1
            sub = {"id": f"g{gid}", "name": f"Group {gid}", "children": []}
            node["children"].append(sub)
            groups.append((sub, depth + 1))
            node, depth = sub, depth + 1
        node["children"].append({"id": f"l{i + 1}", "name": f"Leaf {i + 1}"})
    if rng.random() < 0.15:  # cover the empty-group edge case
        gid += 1
        root["children"].append({"id": f"g{gid}", "name": f"Group {gid}", "children": []})
    return {"root": root}


def walk_nodes(doc: dict):
    """Yield (node, parent_id) for every node in the document."""
    stack = [(doc["root"], None)]
    while stack:
        node, parent = stack.pop()
        yield node, parent
        for child in node.get("children") or []:
            stack.append((child, node["id"]))


def parent_map(doc: dict) -> dict[str, str | None]:
    return {node["id"]: parent for node, parent in walk_nodes(doc)}


def oracle_ancestors(doc: dict, sensor_id: str) -> list[str]:
    """Independent parent-pointer walk from the raw document."""
    parents = parent_map(doc)
    chain = []
    cur = parents[sensor_id]
    while cur is not None:
        chain.append(cur)
        cur = parents[cur]
    return chain


def oracle_leaf_set(doc: dict, group_id: str) -> set[str]:
    """Independent DFS collecting machine sensors under ``group_id``."""
    target = None
    for node, _ in walk_nodes(doc):
        if node["id"] == group_id:
            target = node
            break
    assert target is not None
    leaves = set()
    stack = [target]
    while stack:
        node = stack.pop()
        kids = node.get("children")
        if kids is None:
            if node is not target:
                leaves.add(node["id"])
        else:
            stack.extend(kids)
    return leaves


def leaf_ids(doc: dict) -> list[str]:
    return sorted(n["id"] for n, _ in walk_nodes(doc) if n.get("children") is None)


def group_ids(doc: dict) -> list[str]:
    return sorted(n["id"] for n, _ in walk_nodes(doc) if n.get("children") is not None)


def oracle_latest_per_leaf(published) -> dict[str, tuple[int, float]]:
    """Brute-force latest-value fold over records in their publish order.

    Keyed routing guarantees per-sensor processing order equals publish
    order, so replaying the list with "newer-or-equal timestamp replaces"
    reproduces exactly what the pipeline's histories must converge to.
    """
    latest: dict[str, tuple[int, float]] = {}
    for rec in published:
        stored = latest.get(rec.identifier)
        if stored is None or rec.timestamp >= stored[0]:
            latest[rec.identifier] = (rec.timestamp, rec.valueInW)
    return latest


def oracle_group_aggregates(doc: dict, published) -> dict[str, dict]:
    """Expected final statistics per group: sum over leaf descendants' latest values."""
    latest = oracle_latest_per_leaf(published)
    out = {}
    for g in group_ids(doc):
        values = [latest[leaf][1] for leaf in oracle_leaf_set(doc, g) if leaf in latest]
        if not values:
            continue
        out[g] = {
            "count": len(values),
            "sum": sum(values),
            "avg": sum(values) / len(values),
            "min": min(values),
            "max": max(values),
        }
    return out


def assert_close(a: float, b: float, rel: float = 1e-9):
    assert abs(a - b) <= rel * max(1.0, abs(a), abs(b)), f"{a} != {b} (rel {rel})"
