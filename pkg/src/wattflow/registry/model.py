"""Versioned sensor hierarchy: aggregated sensors as inner nodes, machines as leaves.

The document form is a nested tree. A node with a ``children`` list (possibly
empty) is an aggregated sensor; a node without one is a machine sensor. The
parsed form precomputes parent links, ancestor chains, and leaf-descendant
sets, since the aggregation fan-out looks those up for every record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..records import RecordError, validate_sensor_id


class HierarchyValidationError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class UnknownSensorError(KeyError):
    pass


DEFAULT_DOC = {"id": "root", "name": "Root", "children": []}


@dataclass(frozen=True)
class SensorHierarchy:
    """Immutable, validated snapshot of one hierarchy version."""

    version: int
    root_doc: dict
    parent: dict[str, str | None] = field(repr=False)
    groups: frozenset[str] = field(repr=False)
    leaves: frozenset[str] = field(repr=False)
    _ancestors: dict[str, tuple[str, ...]] = field(repr=False)
    _leaf_descendants: dict[str, frozenset[str]] = field(repr=False)
    _children: dict[str, tuple[str, ...]] = field(repr=False)

    @property
    def root_id(self) -> str:
        return self.root_doc["id"]

    def __contains__(self, sensor_id: str) -> bool:
        return sensor_id in self.parent

    def is_group(self, sensor_id: str) -> bool:
        return sensor_id in self.groups

    def children(self, sensor_id: str) -> tuple[str, ...]:
        if sensor_id not in self.parent:
            raise UnknownSensorError(sensor_id)
        return self._children.get(sensor_id, ())

    def ancestors(self, sensor_id: str) -> tuple[str, ...]:
        """Chain from the immediate parent up to and including the root."""
        chain = self._ancestors.get(sensor_id)
        if chain is None:
            raise UnknownSensorError(sensor_id)
        return chain

    def leaf_descendants(self, sensor_id: str) -> frozenset[str]:
        """All machine sensors in the subtree below an aggregated sensor."""
        if sensor_id not in self.parent:
            raise UnknownSensorError(sensor_id)
        found = self._leaf_descendants.get(sensor_id)
        if found is None:
            raise UnknownSensorError(f"{sensor_id} is a machine sensor, not a group")
        return found

    def to_doc(self) -> dict:
        # deep copy: callers must not be able to mutate the live snapshot
        return {"version": self.version, "root": json.loads(json.dumps(self.root_doc))}


def _on_path(path, node_id: str) -> bool:
    while path is not None:
        if path[0] == node_id:
            return True
        path = path[1]
    return False


def _node_violations(root, out: list[str]):
    # iterative DFS; paths are cons cells (id, parent_path) to keep cycle
    # classification cheap without recursion limits
    stack = [(root, None)]
    seen: set[str] = set()
    while stack:
        node, path = stack.pop()
        if not isinstance(node, dict):
            out.append(f"node: expected object, got {type(node).__name__}")
            continue
        node_id = node.get("id")
        try:
            validate_sensor_id(node_id)
        except RecordError as e:
            out.append(str(e))
            continue
        if node_id in seen:
            if _on_path(path, node_id):
                out.append(f"cycle: {node_id!r} is its own ancestor")
            else:
                out.append(f"duplicate id: {node_id!r}")
            continue
        seen.add(node_id)
        name = node.get("name", node_id)
        if not isinstance(name, str):
            out.append(f"name of {node_id!r}: expected string")
        children = node.get("children")
        if children is None:
            continue
        if not isinstance(children, list):
            out.append(f"children of {node_id!r}: expected list")
            continue
        child_path = (node_id, path)
        for child in children:
            stack.append((child, child_path))


def parse_hierarchy(doc: dict, version: int) -> SensorHierarchy:
    """Validate a hierarchy document and build the indexed snapshot.

    Raises :class:`HierarchyValidationError` listing every violation found;
    nothing is accepted partially.
    """
    violations: list[str] = []
    if not isinstance(doc, dict):
        raise HierarchyValidationError(["hierarchy: expected object"])
    root = doc.get("root")
    if root is None:
        violations.append("missing field 'root'")
    elif isinstance(root, dict) and root.get("children") is None and "id" in root:
        violations.append("root must be an aggregated sensor (needs a children list)")
    if not violations:
        _node_violations(root, violations)
    if violations:
        raise HierarchyValidationError(violations)

    parent: dict[str, str | None] = {}
    groups: set[str] = set()
    leaves: set[str] = set()
    children_map: dict[str, tuple[str, ...]] = {}
    stack = [(root, None)]
    order: list[str] = []
    while stack:
        node, par = stack.pop()
        node_id = node["id"]
        parent[node_id] = par
        order.append(node_id)
        kids = node.get("children")
        if kids is None:
            leaves.add(node_id)
        else:
            groups.add(node_id)
            children_map[node_id] = tuple(k["id"] for k in kids)
            for k in kids:
                stack.append((k, node_id))

    ancestors: dict[str, tuple[str, ...]] = {}
    for node_id in order:  # parents precede children, so chains build in one pass
        par = parent[node_id]
        ancestors[node_id] = () if par is None else (par,) + ancestors[par]

    leaf_desc: dict[str, set[str]] = {g: set() for g in groups}
    for leaf in leaves:
        for anc in ancestors[leaf]:
            leaf_desc[anc].add(leaf)

    return SensorHierarchy(
        version=version,
        root_doc=root,
        parent=parent,
        groups=frozenset(groups),
        leaves=frozenset(leaves),
        _ancestors=ancestors,
        _leaf_descendants={g: frozenset(s) for g, s in leaf_desc.items()},
        _children=children_map,
    )


def default_hierarchy() -> SensorHierarchy:
    return parse_hierarchy({"root": dict(DEFAULT_DOC)}, version=1)
