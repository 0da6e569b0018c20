import random

import pytest

from tracescope.errors import UnknownGuidError, UnknownNodeError
from tracescope.ingest import RawTrace
from tracescope.model import Interval, StringTable
from tracescope.tree import (
    PARENT_CYCLE,
    UNRESOLVED_PARENT,
    ancestors_of,
    build_execution_tree,
    descendants_of,
    node_instances,
)


def raw_from(intervals):
    primitives = StringTable()
    # Re-intern in first-appearance order to mirror ingest behavior.
    for iv in intervals:
        primitives.intern(f"p{iv.primitive}")
    return RawTrace(intervals=sorted(intervals, key=lambda i: (i.enter, i.guid)), primitives=primitives)


RUN, LOOP = 0, 1


def three_fixture():
    return [
        Interval(1, None, 0, RUN, 0, 100),
        Interval(2, 1, 0, LOOP, 10, 40),
        Interval(3, 1, 1, LOOP, 20, 60),
    ]


class TestBuild:
    def test_three_interval_fixture(self):
        tree = build_execution_tree(raw_from(three_fixture()))
        assert len(tree.nodes) == 2
        run = tree.nodes[tree.roots[0]]
        assert run.context == (RUN,)
        assert run.interval_count == 1
        assert run.inclusive_duration == 100
        assert run.subtree_duration == 170
        loop = tree.nodes[run.children[0]]
        assert loop.context == (RUN, LOOP)
        assert loop.interval_count == 2
        assert loop.inclusive_duration == 70
        assert loop.subtree_duration == 70

    def test_singleton(self):
        tree = build_execution_tree(raw_from([Interval(1, None, 0, RUN, 0, 50)]))
        assert len(tree.nodes) == 1
        node = tree.nodes[0]
        assert node.interval_count == 1
        assert node.inclusive_duration == node.subtree_duration == 50

    def test_two_node_cycle_gives_two_roots(self):
        intervals = [
            Interval(1, 2, 0, RUN, 0, 10),
            Interval(2, 1, 0, LOOP, 20, 30),
        ]
        tree = build_execution_tree(raw_from(intervals))
        assert len(tree.roots) == 2
        contexts = {tree.nodes[r].context for r in tree.roots}
        assert contexts == {(RUN,), (LOOP,)}
        assert PARENT_CYCLE in [c for c, _ in tree.warnings]

    def test_unresolved_parent_rooted_with_warning(self):
        intervals = [Interval(1, 99, 0, RUN, 0, 10)]
        tree = build_execution_tree(raw_from(intervals))
        assert tree.unresolved_parent_count == 1
        assert tree.nodes[tree.interval_to_node[1]].context == (RUN,)
        codes = [c for c, _ in tree.warnings]
        assert codes.count(UNRESOLVED_PARENT) == 1

    def test_unresolved_parents_warn_once_aggregated(self):
        intervals = [
            Interval(1, 90, 0, RUN, 0, 10),
            Interval(2, 91, 0, RUN, 20, 30),
            Interval(3, 92, 0, LOOP, 40, 50),
        ]
        tree = build_execution_tree(raw_from(intervals))
        assert tree.unresolved_parent_count == 3
        codes = [c for c, _ in tree.warnings]
        assert codes.count(UNRESOLVED_PARENT) == 1

    def test_chain_into_cycle_rooted_at_cycle_member(self):
        # 4 -> 3 -> 2 -> 1 -> 3: members {1,2,3} form the cycle.
        intervals = [
            Interval(1, 3, 0, 2, 0, 10),
            Interval(2, 1, 0, 1, 10, 20),
            Interval(3, 2, 0, 0, 20, 30),
            Interval(4, 3, 0, 3, 30, 40),
        ]
        tree = build_execution_tree(raw_from(intervals))
        for guid in (1, 2, 3):
            node = tree.nodes[tree.interval_to_node[guid]]
            assert len(node.context) == 1
        child = tree.nodes[tree.interval_to_node[4]]
        assert len(child.context) == 2
        assert child.context[0] == tree.nodes[tree.interval_to_node[3]].context[0]

    def test_duration_conservation_random(self):
        rng = random.Random(5)
        intervals = []
        for guid in range(1, 300):
            parent = rng.choice([None] + list(range(1, guid)) + [999])
            enter = rng.randrange(0, 10_000)
            intervals.append(
                Interval(guid, parent, 0, rng.randrange(4), enter, enter + rng.randrange(1, 50))
            )
        tree = build_execution_tree(raw_from(intervals))
        assert sum(n.inclusive_duration for n in tree.nodes) == sum(
            iv.duration for iv in intervals
        )

    def test_subtree_recurrence_every_node(self):
        rng = random.Random(6)
        intervals = []
        for guid in range(1, 200):
            parent = rng.choice([None] + list(range(1, guid)))
            enter = rng.randrange(0, 1000)
            intervals.append(
                Interval(guid, parent, 0, rng.randrange(3), enter, enter + rng.randrange(1, 9))
            )
        tree = build_execution_tree(raw_from(intervals))
        for node in tree.nodes:
            assert node.subtree_duration == node.inclusive_duration + sum(
                tree.nodes[c].subtree_duration for c in node.children
            )
        assert all(n.interval_count >= 1 for n in tree.nodes)

    def test_context_extends_parent_context(self):
        tree = build_execution_tree(raw_from(three_fixture()))
        for guid, iv in ((2, None), (3, None)):
            node = tree.nodes[tree.interval_to_node[guid]]
            parent = tree.nodes[tree.interval_to_node[1]]
            assert node.context == parent.context + (node.context[-1],)

    def test_deterministic(self):
        a = build_execution_tree(raw_from(three_fixture()))
        b = build_execution_tree(raw_from(three_fixture()))
        assert [n.context for n in a.nodes] == [n.context for n in b.nodes]
        assert a.interval_to_node == b.interval_to_node

    def test_parent_ids_precede_children(self):
        rng = random.Random(7)
        intervals = []
        for guid in range(1, 150):
            parent = rng.choice([None] + list(range(1, guid)))
            enter = rng.randrange(0, 500)
            intervals.append(
                Interval(guid, parent, 0, rng.randrange(3), enter, enter + 5)
            )
        tree = build_execution_tree(raw_from(intervals))
        for node in tree.nodes:
            if node.parent_node is not None:
                assert node.parent_node < node.node_id


class TestLookups:
    def test_node_instances_sorted_by_enter(self):
        tree = build_execution_tree(raw_from(three_fixture()))
        loop_node = next(
            n.node_id for n in tree.nodes if n.context == (RUN, LOOP)
        )
        assert node_instances(tree, loop_node) == [2, 3]
        run_node = next(n.node_id for n in tree.nodes if n.context == (RUN,))
        assert node_instances(tree, run_node) == [1]

    def test_node_instances_unknown_node(self):
        tree = build_execution_tree(raw_from(three_fixture()))
        with pytest.raises(UnknownNodeError):
            node_instances(tree, 99)

    def test_descendants(self):
        children = {1: [2, 3], 2: [4]}
        assert descendants_of(children, 1) == ([2, 4, 3], False)
        assert descendants_of(children, 4) == ([], False)

    def test_descendants_cycle_terminates(self):
        children = {1: [2], 2: [1]}
        found, truncated = descendants_of(children, 1)
        assert found == [2]
        assert truncated is False

    def test_descendants_cap(self):
        children = {0: list(range(1, 100))}
        found, truncated = descendants_of(children, 0, cap=10)
        assert len(found) == 10
        assert truncated is True

    def test_descendants_unknown_guid(self):
        with pytest.raises(UnknownGuidError):
            descendants_of({}, 5, known={1: 0})

    def test_ancestors_root_first(self):
        by_guid = {iv.guid: iv for iv in three_fixture()}
        assert ancestors_of(by_guid, 3) == [1]
        assert ancestors_of(by_guid, 1) == []

    def test_ancestors_deep_chain(self):
        by_guid = {}
        for g in range(1, 51):
            by_guid[g] = Interval(g, g - 1 if g > 1 else None, 0, 0, g, g + 1)
        chain = ancestors_of(by_guid, 50)
        assert len(chain) == 49
        assert chain == list(range(1, 50))

    def test_ancestors_stop_at_unresolved(self):
        by_guid = {
            1: Interval(1, 99, 0, 0, 0, 10),
            2: Interval(2, 1, 0, 0, 10, 20),
        }
        assert ancestors_of(by_guid, 2) == [1]

    def test_ancestors_unknown_guid(self):
        with pytest.raises(UnknownGuidError):
            ancestors_of({}, 7)
