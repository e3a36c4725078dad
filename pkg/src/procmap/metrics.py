"""Classical partition metrics for comparison with the makespan objective.

Blocks are the nonempty bins of a mapping. Edge weights are all 1 and the
per-vertex cost in the communication volume is the vertex weight.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .objective import Mapping
from .workload import WorkloadGraph


@dataclass(frozen=True)
class BaselineMetrics:
    total_cut: int
    max_cut: int
    cvol_per_block: dict[int, int]
    cvol_total: int
    cvol_max: int


def external_degrees(graph: WorkloadGraph, mapping: Mapping) -> list[int]:
    """Number of other blocks in which each vertex has a neighbor."""
    return [len({mapping[u] for u in nbrs} - {mapping[v]})
            for v, nbrs in enumerate(graph.adjacency)]


def baseline_metrics(graph: WorkloadGraph, mapping: Mapping) -> BaselineMetrics:
    pair_cut: Counter = Counter()
    for u, v in graph.edges():
        a, b = mapping[u], mapping[v]
        if a != b:
            pair_cut[(min(a, b), max(a, b))] += 1
    cvol = {b: 0 for b in sorted(set(mapping))}
    for v, d in enumerate(external_degrees(graph, mapping)):
        cvol[mapping[v]] += graph.weights[v] * d
    return BaselineMetrics(
        total_cut=sum(pair_cut.values()),
        max_cut=max(pair_cut.values(), default=0),
        cvol_per_block=cvol,
        cvol_total=sum(cvol.values()),
        cvol_max=max(cvol.values(), default=0),
    )
