"""Exact makespan evaluation and incremental move evaluation.

All loads are kept as integers in a common unit so that comparisons are
exact: one unit is ``1 / (L * D)`` where ``L`` is the lcm of the oracle's path
counts and ``D`` the lcm of the link-factor denominators. Compute loads and
scaled link loads live in one array (bins first, then links), so the
makespan is just its maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .errors import InfeasibleMapping, InfeasibleTarget
from .topology import RoutingOracle, Topology, make_oracle
from .workload import WorkloadGraph

Mapping = Sequence[int]


@dataclass(frozen=True)
class MakespanReport:
    comp: tuple[int, ...]
    comm: tuple[Fraction, ...]
    scaled_comm: tuple[Fraction, ...]
    makespan: Fraction
    bottleneck: tuple[str, int]

    @property
    def compute_bound(self) -> bool:
        return self.bottleneck[0] == "compute"


def check_mapping(graph: WorkloadGraph, topology: Topology, mapping: Mapping):
    """Raise InfeasibleMapping unless ``mapping`` is total and avoids routers."""
    if len(mapping) != graph.n:
        raise InfeasibleMapping(f"mapping has {len(mapping)} entries for {graph.n} vertices")
    for v, b in enumerate(mapping):
        if not (isinstance(b, int) and 0 <= b < topology.n_bins):
            raise InfeasibleMapping(f"vertex {v} mapped to nonexistent bin {b!r}")
        if b in topology.routers:
            raise InfeasibleMapping(f"vertex {v} mapped to router bin {b}")


def comp_load(graph: WorkloadGraph, mapping: Mapping, b: int) -> int:
    return sum(w for w, p in zip(graph.weights, mapping) if p == b)


def cut_edges(graph: WorkloadGraph, mapping: Mapping) -> list[tuple[int, int]]:
    return [(u, v) for u, v in graph.edges() if mapping[u] != mapping[v]]


def comm_load(graph: WorkloadGraph, mapping: Mapping, oracle: RoutingOracle, link: int) -> Fraction:
    total = Fraction(0)
    for u, v in cut_edges(graph, mapping):
        rs = oracle.route(mapping[u], mapping[v])
        hits = sum(p.count(link) for p in rs.paths)
        if hits:
            total += hits * rs.weight
    return total


class _Units:
    """Integer load units shared by every state built on one (topology, oracle)."""

    def __init__(self, topology: Topology, oracle: RoutingOracle):
        self.topology = topology
        self.oracle = oracle
        self.L = oracle.denominator
        factors = [topology.link_factor(l) for l in range(topology.n_links)]
        self.D = math.lcm(*(f.denominator for f in factors)) if factors else 1
        self.comp_scale = self.L * self.D
        self.mult = [int(f * self.D) for f in factors]
        self.n_bins = topology.n_bins
        self._table: list[list] = [[None] * topology.n_bins for _ in range(topology.n_bins)]

    def contrib(self, a: int, b: int) -> tuple[tuple[int, int], ...]:
        """(slot, scaled units) added to the load array by one edge routed a->b."""
        c = self._table[a][b]
        if c is None:
            rs = self.oracle.route(a, b)
            if self.L % rs.k:
                raise ValueError(f"oracle returned {rs.k} paths; denominator {self.L} is not a multiple")
            share = self.L // rs.k
            acc: dict[int, int] = {}
            for p in rs.paths:
                for lid in p:
                    acc[lid] = acc.get(lid, 0) + share
            B = self.n_bins
            c = tuple((B + lid, u * self.mult[lid]) for lid, u in sorted(acc.items()))
            self._table[a][b] = c
            self._table[b][a] = c
        return c

    def to_value(self, units: int) -> Fraction:
        return Fraction(units, self.comp_scale)


class MoveDelta(NamedTuple):
    makespan: Fraction
    comp_changes: dict
    comm_changes: dict


class LoadState:
    """Per-bin and per-link loads of a (possibly partial) mapping.

    Unassigned vertices (``None``) contribute nothing. Single owner: clone
    with :meth:`copy` for independent workers.
    """

    def __init__(self, graph: WorkloadGraph, topology: Topology, oracle: RoutingOracle | None = None,
                 mapping: Mapping | None = None, _units: _Units | None = None):
        self.graph = graph
        self.topology = topology
        self.oracle = oracle if oracle is not None else make_oracle(topology)
        self.units = _units if _units is not None else _Units(topology, self.oracle)
        self._routers = topology.routers
        B = topology.n_bins
        self.loads = [0] * (B + topology.n_links)
        self.sq_comp = 0
        self.sq_comm = 0
        if mapping is None:
            self.assignment: list[int | None] = [None] * graph.n
            return
        check_mapping(graph, topology, mapping)
        self.assignment = list(mapping)
        loads = self.loads
        scale = self.units.comp_scale
        for v, b in enumerate(mapping):
            loads[b] += graph.weights[v] * scale
        contrib = self.units.contrib
        for u, v in graph.edges():
            a, b = mapping[u], mapping[v]
            if a != b:
                for slot, x in contrib(a, b):
                    loads[slot] += x
        self.sq_comp = sum(x * x for x in loads[:B])
        self.sq_comm = sum(x * x for x in loads[B:])

    def copy(self) -> "LoadState":
        new = LoadState.__new__(LoadState)
        new.__dict__.update(self.__dict__)
        new.loads = list(self.loads)
        new.assignment = list(self.assignment)
        return new

    def bin_of(self, v: int) -> int | None:
        return self.assignment[v]

    @property
    def mapping(self) -> tuple[int, ...]:
        if any(b is None for b in self.assignment):
            raise InfeasibleMapping("mapping is partial")
        return tuple(self.assignment)

    @property
    def makespan_units(self) -> int:
        return max(self.loads)

    @property
    def makespan(self) -> Fraction:
        return self.units.to_value(max(self.loads))

    @property
    def key(self) -> tuple[int, int, int]:
        """Lexicographic objective: makespan, then sum of squared link loads, then of bin loads."""
        return max(self.loads), self.sq_comm, self.sq_comp

    def neighbor_bins(self, v: int) -> dict[int, int]:
        """Number of v's assigned neighbors in each bin."""
        cnt: dict[int, int] = {}
        assign = self.assignment
        for u in self.graph.adjacency[v]:
            pu = assign[u]
            if pu is not None:
                cnt[pu] = cnt.get(pu, 0) + 1
        return cnt

    def _side(self, b: int, cnt: dict[int, int], sign: int, ch: dict[int, int]):
        # edges from a vertex on bin b to its neighbors, added with the given sign
        table = self.units._table
        contrib = self.units.contrib
        row = table[b]
        for q, c in cnt.items():
            if q != b:
                route = row[q]
                if route is None:
                    route = contrib(b, q)
                for slot, x in route:
                    ch[slot] = ch.get(slot, 0) + sign * c * x

    def _changes(self, v: int, target: int | None, cnt: dict[int, int] | None = None) -> dict[int, int]:
        """Slot -> unit delta for moving v to target (None = unassign)."""
        src = self.assignment[v]
        ch: dict[int, int] = {}
        if src == target:
            return ch
        if cnt is None:
            cnt = self.neighbor_bins(v)
        w = self.graph.weights[v] * self.units.comp_scale
        if src is not None:
            ch[src] = -w
            self._side(src, cnt, -1, ch)
        if target is not None:
            ch[target] = ch.get(target, 0) + w
            self._side(target, cnt, 1, ch)
        return ch

    def best_move(self, v: int, targets) -> tuple[tuple[int, int, int], int | None]:
        """Lowest key over moving v to each of ``targets`` and the bin achieving it.

        Returns (current key, None) when no target strictly improves.
        """
        src = self.assignment[v]
        cnt = self.neighbor_bins(v)
        w = self.graph.weights[v] * self.units.comp_scale
        removal: dict[int, int] = {}
        if src is not None:
            removal[src] = -w
            self._side(src, cnt, -1, removal)
        best_key, best_bin = self.key, None
        for b in targets:
            if b == src:
                continue
            ch = dict(removal)
            ch[b] = ch.get(b, 0) + w
            self._side(b, cnt, 1, ch)
            k = self.delta_key(v, b, ch)
            if k < best_key:
                best_key, best_bin = k, b
        return best_key, best_bin

    def _check_target(self, target):
        if not (isinstance(target, int) and 0 <= target < self.topology.n_bins):
            raise InfeasibleTarget(f"bin {target!r} does not exist")
        if target in self._routers:
            raise InfeasibleTarget(f"bin {target} is a router")

    def delta_key(self, v: int, target: int | None, ch: dict[int, int] | None = None):
        """Objective key after moving v, computed without changing the state."""
        if ch is None:
            ch = self._changes(v, target)
        if not ch:
            return self.key
        loads = self.loads
        B = self.units.n_bins
        sq_comp, sq_comm = self.sq_comp, self.sq_comm
        saved = []
        for slot, d in ch.items():
            if d:
                old = loads[slot]
                new = old + d
                if slot < B:
                    sq_comp += new * new - old * old
                else:
                    sq_comm += new * new - old * old
                saved.append((slot, old))
                loads[slot] = new
        top = max(loads)
        for slot, old in saved:
            loads[slot] = old
        return top, sq_comm, sq_comp

    def move_delta(self, v: int, target: int) -> MoveDelta:
        """Makespan after moving v to target, plus the loads that would change."""
        self._check_target(target)
        ch = self._changes(v, target)
        key = self.delta_key(v, target, ch)
        B = self.units.n_bins
        to_value = self.units.to_value
        comp = {s: to_value(self.loads[s] + d) for s, d in ch.items() if s < B}
        comm = {s - B: to_value(self.loads[s] + d) for s, d in ch.items() if s >= B and d}
        return MoveDelta(to_value(key[0]), comp, comm)

    def move(self, v: int, target: int):
        self._check_target(target)
        self._apply(v, target)

    def unassign(self, v: int):
        self._apply(v, None)

    def _apply(self, v, target, ch=None):
        if ch is None:
            ch = self._changes(v, target)
        loads = self.loads
        B = self.units.n_bins
        for slot, d in ch.items():
            if d:
                old = loads[slot]
                new = old + d
                if slot < B:
                    self.sq_comp += new * new - old * old
                else:
                    self.sq_comm += new * new - old * old
                loads[slot] = new
        self.assignment[v] = target

    def report(self) -> MakespanReport:
        return _report(self.units, self.loads)


def move_delta(state: LoadState, vertex: int, target: int) -> MoveDelta:
    return state.move_delta(vertex, target)


def _report(units: _Units, loads: list[int]) -> MakespanReport:
    B = units.n_bins
    comp = tuple(x // units.comp_scale for x in loads[:B])
    scaled = tuple(Fraction(x, units.comp_scale) for x in loads[B:])
    comm = tuple(s / units.topology.link_factor(l) for l, s in enumerate(scaled))
    top = max(loads)
    idx = loads.index(top)
    bottleneck = ("compute", idx) if idx < B else ("communication", idx - B)
    return MakespanReport(comp, comm, scaled, Fraction(top, units.comp_scale), bottleneck)


def evaluate(graph: WorkloadGraph, mapping: Mapping, topology: Topology,
             oracle: RoutingOracle | None = None) -> MakespanReport:
    """Full makespan report of a feasible mapping.

    Raises InfeasibleMapping for partial mappings or vertices on routers and
    MissingRoute when the oracle lacks a needed bin pair.
    """
    return LoadState(graph, topology, oracle, mapping).report()


def lower_bound(graph: WorkloadGraph, topology: Topology) -> int:
    """ceil(total weight / number of compute bins): no mapping does better."""
    nc = len(topology.compute_bins)
    return -(-sum(graph.weights) // nc) if nc else 0
