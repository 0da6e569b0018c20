"""Derive the execution tree from parent-GUID links.

Each interval's context is its parent's context extended by its own
primitive name, so a node aggregates every interval that was reached
through the same chain of primitives. Intervals without a parent, with an
unresolvable parent GUID, or sitting on a parent cycle become roots of
their primitive's root context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from tracescope.errors import UnknownGuidError, UnknownNodeError
from tracescope.ingest import RawTrace
from tracescope.model import Guid, Interval

UNRESOLVED_PARENT = "UNRESOLVED_PARENT"
PARENT_CYCLE = "PARENT_CYCLE"

_ROOT = -1


@dataclass
class ContextNode:
    """One primitive context: a root-first path of primitive name ids."""

    node_id: int
    context: tuple[int, ...]
    parent_node: int | None
    children: list[int] = field(default_factory=list)
    interval_count: int = 0
    inclusive_duration: int = 0
    subtree_duration: int = 0

    @property
    def primitive(self) -> int:
        return self.context[-1]


@dataclass
class ExecutionTree:
    """Forest of context nodes plus the interval-to-node attribution.

    `instances[node_id]` lists the GUIDs of that node's intervals in enter
    order; node ids are dense and parents always precede children.
    """

    roots: list[int]
    nodes: list[ContextNode]
    interval_to_node: dict[Guid, int]
    instances: list[list[Guid]]
    unresolved_parent_count: int
    warnings: list[tuple[str, str]] = field(default_factory=list)

    def node(self, node_id: int) -> ContextNode:
        if not 0 <= node_id < len(self.nodes):
            raise UnknownNodeError(node_id)
        return self.nodes[node_id]

    def subtree_node_ids(self, node_id: int) -> list[int]:
        """The node and all its descendants, preorder."""
        self.node(node_id)
        out: list[int] = []
        stack = [node_id]
        while stack:
            nid = stack.pop()
            out.append(nid)
            stack.extend(reversed(self.nodes[nid].children))
        return out


def build_execution_tree(trace: RawTrace) -> ExecutionTree:
    """Aggregate intervals into context nodes using parent-GUID links.

    Anomalies never abort the build: unresolved parents are counted and
    rooted (warning UNRESOLVED_PARENT), parent cycles are broken by
    rooting every member (warning PARENT_CYCLE).
    """
    by_guid: dict[Guid, Interval] = {iv.guid: iv for iv in trace.intervals}
    nodes: list[ContextNode] = []
    node_key: dict[tuple[int, int], int] = {}
    memo: dict[Guid, int] = {}
    warnings: list[tuple[str, str]] = []
    unresolved = 0

    def get_node(parent_node: int, primitive: int) -> int:
        key = (parent_node, primitive)
        found = node_key.get(key)
        if found is not None:
            return found
        if parent_node == _ROOT:
            context = (primitive,)
            parent: int | None = None
        else:
            context = nodes[parent_node].context + (primitive,)
            parent = parent_node
        node_id = len(nodes)
        nodes.append(ContextNode(node_id, context, parent))
        node_key[key] = node_id
        if parent is not None:
            nodes[parent].children.append(node_id)
        return node_id

    def assign(guid: Guid) -> int:
        nonlocal unresolved
        if guid in memo:
            return memo[guid]
        path = [guid]
        position = {guid: 0}
        base_node = _ROOT
        while True:
            parent = by_guid[path[-1]].parent
            if parent is None:
                break
            if parent not in by_guid:
                unresolved += 1
                break
            if parent in memo:
                base_node = memo[parent]
                break
            if parent in position:
                cycle = path[position[parent] :]
                for member in cycle:
                    memo[member] = get_node(_ROOT, by_guid[member].primitive)
                warnings.append(
                    (PARENT_CYCLE, f"parent cycle broken; members rooted: {sorted(cycle)}")
                )
                path = path[: position[parent]]
                if not path:
                    return memo[guid]
                base_node = memo[parent]
                break
            position[parent] = len(path)
            path.append(parent)
        for member in reversed(path):
            base_node = get_node(base_node, by_guid[member].primitive)
            memo[member] = base_node
        return memo[guid]

    for iv in trace.intervals:
        assign(iv.guid)

    instances: list[list[Guid]] = [[] for _ in nodes]
    for iv in trace.intervals:  # already sorted by enter, so instance lists are too
        node_id = memo[iv.guid]
        node = nodes[node_id]
        node.interval_count += 1
        node.inclusive_duration += iv.leave - iv.enter
        instances[node_id].append(iv.guid)

    for node in nodes:
        node.subtree_duration = node.inclusive_duration
    for node in reversed(nodes):  # parents precede children, so this is bottom-up
        if node.parent_node is not None:
            nodes[node.parent_node].subtree_duration += node.subtree_duration

    if unresolved:
        warnings.append(
            (UNRESOLVED_PARENT, f"{unresolved} interval(s) reference parent GUIDs not in the trace")
        )

    roots = [n.node_id for n in nodes if n.parent_node is None]
    return ExecutionTree(
        roots=roots,
        nodes=nodes,
        interval_to_node=memo,
        instances=instances,
        unresolved_parent_count=unresolved,
        warnings=warnings,
    )


def node_instances(tree: ExecutionTree, node_id: int) -> list[Guid]:
    """GUIDs of the node's intervals, sorted by enter time."""
    tree.node(node_id)
    return list(tree.instances[node_id])


def descendants_of(
    children: Mapping[Guid, Sequence[Guid]],
    guid: Guid,
    known: Mapping[Guid, object] | set | None = None,
    cap: int | None = None,
) -> tuple[list[Guid], bool]:
    """Transitive closure over child links, excluding `guid` itself.

    Raw parent links may contain cycles; the visited set guarantees
    termination. Returns (guids, truncated); truncated is True when `cap`
    stopped the walk early.
    """
    if known is not None and guid not in known:
        raise UnknownGuidError(guid)
    seen = {guid}
    out: list[Guid] = []
    stack = list(reversed(children.get(guid, ())))
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        out.append(g)
        if cap is not None and len(out) >= cap:
            return out, bool(stack) or any(c not in seen for c in children.get(g, ()))
        stack.extend(reversed(children.get(g, ())))
    return out, False


def ancestors_of(by_guid: Mapping[Guid, Interval], guid: Guid) -> list[Guid]:
    """Parent chain of `guid`, root first.

    Stops at a missing (unresolved) parent; a parent cycle terminates the
    walk at the first repeat.
    """
    if guid not in by_guid:
        raise UnknownGuidError(guid)
    chain: list[Guid] = []
    seen = {guid}
    cur = by_guid[guid].parent
    while cur is not None and cur in by_guid and cur not in seen:
        chain.append(cur)
        seen.add(cur)
        cur = by_guid[cur].parent
    chain.reverse()
    return chain
