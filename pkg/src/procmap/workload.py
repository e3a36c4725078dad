"""Workload graph G = (V, E) with integer vertex weights.

Files use the METIS adjacency format with 1-based vertex ids; internally
vertices are 0-based (file vertex ``i`` is vertex ``i - 1``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import AsymmetricEdge, BadWeight, ParseError, SelfLoop


@dataclass(frozen=True)
class WorkloadGraph:
    adjacency: tuple[tuple[int, ...], ...]
    weights: tuple[int, ...]
    n_edges: int = field(init=False)

    def __post_init__(self):
        if len(self.adjacency) != len(self.weights):
            raise ValueError("one weight per vertex is required")
        n = len(self.adjacency)
        deg = 0
        for v, nbrs in enumerate(self.adjacency):
            if any(not 0 <= u < n for u in nbrs):
                raise ValueError(f"vertex {v} has a neighbor out of range")
            if v in nbrs:
                raise SelfLoop(f"vertex {v} has a self-loop")
            if any(nbrs[i] >= nbrs[i + 1] for i in range(len(nbrs) - 1)):
                raise ValueError(f"neighbors of vertex {v} must be sorted and distinct")
            deg += len(nbrs)
        for v, nbrs in enumerate(self.adjacency):
            for u in nbrs:
                if not _has(self.adjacency[u], v):
                    raise AsymmetricEdge(f"edge {v}-{u} is not listed at vertex {u}")
        for v, w in enumerate(self.weights):
            if not isinstance(w, int) or w < 1:
                raise BadWeight(f"vertex {v} has weight {w!r}; weights must be integers >= 1")
        object.__setattr__(self, "n_edges", deg // 2)

    @property
    def n(self) -> int:
        return len(self.adjacency)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def edges(self):
        """Each undirected edge once, as (u, v) with u < v, in vertex order."""
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if v > u:
                    yield u, v

    @property
    def is_weighted(self) -> bool:
        return any(w != 1 for w in self.weights)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], weights: Sequence[int] | None = None):
        """Build from an edge list (0-based). Duplicate edges are rejected."""
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise SelfLoop(f"self-loop on vertex {u}")
            if v in adj[u]:
                raise ParseError(f"duplicate edge {u}-{v}")
            adj[u].add(v)
            adj[v].add(u)
        weights = tuple(weights) if weights is not None else (1,) * n
        return cls(tuple(tuple(sorted(a)) for a in adj), weights)


def _has(sorted_seq, x) -> bool:
    # neighbor lists are short; a linear scan beats bisect's call overhead
    return x in sorted_seq


def total_weight(graph: WorkloadGraph) -> int:
    return sum(graph.weights)


def parse_graph(text: str) -> WorkloadGraph:
    """Parse a METIS adjacency document.

    The header is ``n m [fmt]``. A ``fmt`` whose tens digit is 1 means every
    vertex line starts with that vertex's weight. Edge weights and vertex
    sizes are not supported. Lines starting with ``%`` are comments; an empty
    line is a vertex without neighbors.
    """
    lines = [(no, raw) for no, raw in enumerate(text.splitlines(), 1)
             if not raw.lstrip().startswith("%")]
    while lines and not lines[0][1].strip():
        lines.pop(0)
    if not lines:
        raise ParseError("empty graph document")
    hno, header = lines[0]
    head = header.split()
    if len(head) not in (2, 3, 4):
        raise ParseError("header must be 'n m [fmt [ncon]]'", hno)
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError("header counts must be integers", hno) from None
    if n < 0 or m < 0:
        raise ParseError("header counts must be non-negative", hno)
    fmt = head[2] if len(head) >= 3 else "0"
    if not fmt.isdigit() or len(fmt) > 3:
        raise ParseError(f"bad fmt field {fmt!r}", hno)
    fmt = fmt.zfill(3)
    if fmt[0] != "0":
        raise ParseError("vertex sizes are not supported", hno)
    if fmt[2] != "0":
        raise ParseError("edge weights are not supported", hno)
    weighted = fmt[1] == "1"
    if len(head) == 4 and head[3] != "1":
        raise ParseError("only a single vertex weight (ncon=1) is supported", hno)

    body = lines[1:]
    if len(body) > n:
        extra = [(no, raw) for no, raw in body[n:] if raw.strip()]
        if extra:
            raise ParseError(f"more than {n} vertex lines", extra[0][0])
        body = body[:n]

    adjacency: list[tuple[int, ...]] = []
    weights: list[int] = []
    line_of: list[int] = []
    last_no = body[-1][0] if body else hno
    for v in range(n):
        # trailing isolated vertices may have lost their (empty) lines
        no, raw = body[v] if v < len(body) else (last_no, "")
        line_of.append(no)
        try:
            toks = [int(t) for t in raw.split()]
        except ValueError:
            raise ParseError("non-integer token in vertex line", no) from None
        if weighted:
            if not toks:
                raise ParseError(f"vertex {v + 1} is missing its weight", no)
            w, toks = toks[0], toks[1:]
            if w < 1:
                raise BadWeight(f"vertex {v + 1} has weight {w}; weights must be >= 1", no)
        else:
            w = 1
        nbrs = []
        for u in toks:
            if not 1 <= u <= n:
                raise ParseError(f"neighbor {u} out of range 1..{n}", no)
            if u == v + 1:
                raise SelfLoop(f"vertex {u} lists itself", no)
            nbrs.append(u - 1)
        nbrs.sort()
        for i in range(len(nbrs) - 1):
            if nbrs[i] == nbrs[i + 1]:
                raise ParseError(f"vertex {v + 1} lists neighbor {nbrs[i] + 1} twice", no)
        adjacency.append(tuple(nbrs))
        weights.append(w)

    deg = 0
    for v, nbrs in enumerate(adjacency):
        deg += len(nbrs)
        for u in nbrs:
            if not _has(adjacency[u], v):
                raise AsymmetricEdge(
                    f"vertex {v + 1} lists {u + 1} but vertex {u + 1} does not list {v + 1}", line_of[u])
    if deg // 2 != m:
        raise ParseError(f"header declares {m} edges, adjacency has {deg // 2}", hno)
    return WorkloadGraph(tuple(adjacency), tuple(weights))


def format_graph(graph: WorkloadGraph, weighted: bool | None = None) -> str:
    """Serialize to METIS text. Weights are written when any weight is not 1."""
    if weighted is None:
        weighted = graph.is_weighted
    out = [f"{graph.n} {graph.n_edges}" + (" 10" if weighted else "")]
    for v, nbrs in enumerate(graph.adjacency):
        toks = [str(graph.weights[v])] if weighted else []
        toks.extend(str(u + 1) for u in nbrs)
        out.append(" ".join(toks))
    return "\n".join(out) + "\n"


def read_graph(path) -> WorkloadGraph:
    with open(path) as fh:
        text = fh.read()
    try:
        return parse_graph(text)
    except ParseError as e:
        raise e.with_source(path) from None
