"""Policy scenario generation: connected district subsets and train splits."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

MAX_DISTRICTS = 25


class ScenarioError(ValueError):
    pass


def scenario_id(districts) -> str:
    return "+".join(sorted(districts))


@dataclass
class PolicyScenario:
    id: str
    districts: frozenset[str]
    reduction: float = 0.5
    labels: dict[str, float] | None = None  # per-edge change in car volume

    def __post_init__(self):
        if not 0.0 <= self.reduction <= 1.0:
            raise ScenarioError(f"reduction {self.reduction} outside [0, 1]")
        if not self.districts:
            raise ScenarioError("scenario needs at least one district")


@dataclass
class ScenarioSplit:
    train: list[str]
    validation: list[str]
    test: list[str]
    seed: int = 0
    stats: dict = field(default_factory=dict)

    def all_ids(self) -> list[str]:
        return self.train + self.validation + self.test


def enumerate_connected_subsets(adjacency: dict[str, set[str]]) -> Iterator[frozenset[str]]:
    """Yield every nonempty connected vertex subset exactly once.

    Canonical order: grouped by smallest member (ascending), then by the
    recursive extension order. Each subset is generated once by growing from
    its smallest vertex while forbidding already-considered extensions.
    """
    verts = sorted(adjacency)
    if len(verts) > MAX_DISTRICTS:
        raise ScenarioError(
            f"{len(verts)} districts exceeds enumeration guard ({MAX_DISTRICTS})")
    for a, nbrs in adjacency.items():
        for b in nbrs:
            if a not in adjacency.get(b, ()):
                raise ScenarioError("district adjacency is not symmetric")

    for start_pos, start in enumerate(verts):
        allowed = set(verts[start_pos:])

        def grow(subset: set[str], frontier: list[str], forbidden: set[str]):
            yield frozenset(subset)
            local_forbidden = set(forbidden)
            for i, cand in enumerate(frontier):
                new_frontier = [c for c in frontier[i + 1:] if c not in local_forbidden]
                for nbr in sorted(adjacency[cand]):
                    if (nbr in allowed and nbr not in subset
                            and nbr not in local_forbidden and nbr != cand
                            and nbr not in new_frontier):
                        new_frontier.append(nbr)
                subset.add(cand)
                yield from grow(subset, new_frontier, local_forbidden)
                subset.remove(cand)
                local_forbidden.add(cand)

        first_frontier = sorted(n for n in adjacency[start] if n in allowed and n != start)
        yield from grow({start}, first_frontier, set())


def count_connected_subsets(adjacency: dict[str, set[str]]) -> int:
    return sum(1 for _ in enumerate_connected_subsets(adjacency))


def sample_scenarios(adjacency: dict[str, set[str]], n: int, seed: int = 0,
                     include_singletons: bool = False,
                     reduction: float = 0.5) -> list[PolicyScenario]:
    """Draw ``n`` distinct connected subsets uniformly without replacement."""
    universe = list(enumerate_connected_subsets(adjacency))
    if n > len(universe):
        raise ScenarioError(f"requested {n} scenarios but only "
                            f"{len(universe)} connected subsets exist")
    rng = np.random.default_rng(seed)
    picked_idx = rng.choice(len(universe), size=n, replace=False)
    chosen = {universe[i] for i in picked_idx}
    if include_singletons:
        chosen.update(frozenset([d]) for d in adjacency)
    subsets = sorted(chosen, key=lambda s: scenario_id(s))
    return [PolicyScenario(scenario_id(s), s, reduction) for s in subsets]


def split_scenarios(scenarios: list[PolicyScenario],
                    ratios: tuple[float, float, float] = (0.80, 0.15, 0.05),
                    seed: int = 0) -> ScenarioSplit:
    """Random permutation, then contiguous cut; floor sizes for validation and
    test, remainder to train."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ScenarioError("split ratios must sum to 1")
    n = len(scenarios)
    if n < 3:
        raise ScenarioError("need at least 3 scenarios to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    ids = [scenarios[i].id for i in order]
    n_val = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_val - n_test
    mean_size = float(np.mean([len(s.districts) for s in scenarios]))
    return ScenarioSplit(
        train=ids[:n_train],
        validation=ids[n_train:n_train + n_val],
        test=ids[n_train + n_val:],
        seed=seed,
        stats={"count": n, "mean_subset_size": mean_size},
    )


def save_scenarios(scenarios: list[PolicyScenario], path) -> None:
    payload = [{"id": s.id, "districts": sorted(s.districts),
                "reduction": s.reduction} for s in scenarios]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)


def load_scenarios(path) -> list[PolicyScenario]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return [PolicyScenario(r["id"], frozenset(r["districts"]),
                           float(r.get("reduction", 0.5))) for r in raw]


def save_split(split: ScenarioSplit, path) -> None:
    payload = {"train": split.train, "validation": split.validation,
               "test": split.test, "seed": split.seed, "stats": split.stats}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)


def load_split(path) -> ScenarioSplit:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return ScenarioSplit(raw["train"], raw["validation"], raw["test"],
                         raw.get("seed", 0), raw.get("stats", {}))
