import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualflow.scenarios import (PolicyScenario, ScenarioError,
                                count_connected_subsets,
                                enumerate_connected_subsets, sample_scenarios,
                                scenario_id, split_scenarios,
                                load_scenarios, save_scenarios)

PATH3 = {"a": {"b"}, "b": {"a", "c"}, "c": {"b"}}
TRIANGLE = {"a": {"b", "c"}, "b": {"a", "c"}, "c": {"a", "b"}}


def brute_force_connected_subsets(adjacency):
    verts = sorted(adjacency)
    found = set()
    for r in range(1, len(verts) + 1):
        for combo in itertools.combinations(verts, r):
            sub = set(combo)
            stack, seen = [combo[0]], {combo[0]}
            while stack:
                for nb in adjacency[stack.pop()]:
                    if nb in sub and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            if seen == sub:
                found.add(frozenset(sub))
    return found


def bfs_connected(districts, adjacency):
    districts = set(districts)
    start = next(iter(districts))
    stack, seen = [start], {start}
    while stack:
        for nb in adjacency[stack.pop()]:
            if nb in districts and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen == districts


def random_adjacency(rng, n, p=0.4):
    adj = {str(i): set() for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                adj[str(i)].add(str(j))
                adj[str(j)].add(str(i))
    return adj


def test_path_graph_subsets():
    subs = {frozenset(s) for s in enumerate_connected_subsets(PATH3)}
    assert subs == {frozenset(x) for x in
                    ({"a"}, {"b"}, {"c"}, {"a", "b"}, {"b", "c"},
                     {"a", "b", "c"})}


def test_triangle_subsets():
    assert count_connected_subsets(TRIANGLE) == 7


def test_singleton():
    assert count_connected_subsets({"only": set()}) == 1


def test_enumeration_no_duplicates_vs_brute_force():
    rng = np.random.default_rng(42)
    for _ in range(50):
        adj = random_adjacency(rng, int(rng.integers(1, 13)))
        subs = list(enumerate_connected_subsets(adj))
        assert len(subs) == len(set(subs))
        assert set(subs) == brute_force_connected_subsets(adj)


def test_guard_on_district_count():
    adj = {str(i): set() for i in range(30)}
    with pytest.raises(ScenarioError, match="guard"):
        list(enumerate_connected_subsets(adj))


def test_asymmetric_adjacency_rejected():
    with pytest.raises(ScenarioError, match="symmetric"):
        list(enumerate_connected_subsets({"a": {"b"}, "b": set()}))


def test_sample_exhaustive():
    scens = sample_scenarios(PATH3, 6, seed=0)
    assert sorted(s.id for s in scens) == ["a", "a+b", "a+b+c", "b", "b+c", "c"]


def test_sample_singletons_only():
    scens = sample_scenarios(PATH3, 0, include_singletons=True)
    assert sorted(s.id for s in scens) == ["a", "b", "c"]


def test_sample_deterministic():
    adj = random_adjacency(np.random.default_rng(5), 8)
    a = sample_scenarios(adj, 10, seed=3)
    b = sample_scenarios(adj, 10, seed=3)
    assert [s.id for s in a] == [s.id for s in b]


def test_sample_too_large():
    with pytest.raises(ScenarioError):
        sample_scenarios(PATH3, 7)


def test_sampled_scenarios_connected():
    rng = np.random.default_rng(11)
    adj = random_adjacency(rng, 9)
    n = min(25, count_connected_subsets(adj))
    for s in sample_scenarios(adj, n, seed=1):
        assert bfs_connected(s.districts, adj)


def test_split_100():
    scens = [PolicyScenario(str(i), frozenset([str(i % 3)])) for i in range(100)]
    split = split_scenarios(scens, seed=0)
    assert (len(split.train), len(split.validation), len(split.test)) == (80, 15, 5)
    ids = set(split.train) | set(split.validation) | set(split.test)
    assert len(ids) == 100


def test_split_20_rounding():
    scens = [PolicyScenario(str(i), frozenset(["x"])) for i in range(20)]
    split = split_scenarios(scens, seed=1)
    assert (len(split.train), len(split.validation), len(split.test)) == (16, 3, 1)


def test_split_degenerate_ratios():
    scens = [PolicyScenario(str(i), frozenset(["x"])) for i in range(10)]
    split = split_scenarios(scens, ratios=(1.0, 0.0, 0.0), seed=0)
    assert len(split.train) == 10
    assert not split.validation and not split.test


def test_split_records_stats():
    scens = sample_scenarios(PATH3, 6, seed=0)
    split = split_scenarios(scens, seed=0)
    assert split.stats["count"] == 6
    assert "mean_subset_size" in split.stats


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        PolicyScenario("x", frozenset(["a"]), reduction=1.5)
    with pytest.raises(ScenarioError):
        PolicyScenario("x", frozenset())


def test_scenario_roundtrip(tmp_path):
    scens = sample_scenarios(TRIANGLE, 5, seed=2, reduction=0.25)
    save_scenarios(scens, tmp_path / "s.json")
    loaded = load_scenarios(tmp_path / "s.json")
    assert [(s.id, s.districts, s.reduction) for s in loaded] == \
        [(s.id, s.districts, s.reduction) for s in scens]


@given(st.integers(min_value=1, max_value=9), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=25, deadline=None)
def test_enumeration_matches_brute_force_property(n, seed):
    adj = random_adjacency(np.random.default_rng(seed), n)
    assert set(enumerate_connected_subsets(adj)) == \
        brute_force_connected_subsets(adj)
