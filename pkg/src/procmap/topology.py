"""Machine topology model: bins, links, routers, link factors and routing.

A topology is either a ``tree`` (routes are the unique tree paths) or
``routed`` (routes come from an explicit route table, possibly multipath).
Bins and links are identified by zero-based integers.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    AllRouters,
    BadFactor,
    BadLink,
    InconsistentRoute,
    InvalidPath,
    MissingRoute,
    NotATree,
    ParseError,
    TopologyError,
)

TREE = "tree"
ROUTED = "routed"


def parse_factor(value) -> Fraction:
    """Parse a factor exactly. Accepts ints, Fractions and decimal/ratio strings."""
    if isinstance(value, float):
        # floats are only accepted when they are exact decimals as written
        value = repr(value)
    try:
        f = Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError):
        raise BadFactor(f"not a rational factor: {value!r}") from None
    if f <= 0:
        raise BadFactor(f"factor must be positive, got {value!r}")
    return f


class Topology:
    """Immutable machine model C = (B, L).

    ``factors[l]`` is the explicit factor of link ``l`` or None, in which case
    the link uses ``global_factor``.
    """

    __slots__ = (
        "n_bins", "links", "routers", "factors", "global_factor", "kind",
        "_link_index", "_adj", "_parent", "_parent_link", "_depth",
    )

    def __init__(self, n_bins: int, links: Sequence[tuple[int, int]], routers: Iterable[int] = (),
                 factors: Sequence[Fraction | None] | None = None, global_factor=1, kind: str = TREE):
        if kind not in (TREE, ROUTED):
            raise ValueError(f"unknown topology kind {kind!r}")
        if n_bins < 1:
            raise BadLink("a topology needs at least one bin")
        routers = frozenset(routers)
        for r in routers:
            if not 0 <= r < n_bins:
                raise BadLink(f"router id {r} out of range")
        norm = []
        index = {}
        for lid, (a, b) in enumerate(links):
            if not (0 <= a < n_bins and 0 <= b < n_bins):
                raise BadLink(f"link {lid} ({a},{b}) references a bin out of range")
            if a == b:
                raise BadLink(f"link {lid} is a self-link on bin {a}")
            key = (min(a, b), max(a, b))
            if key in index:
                raise BadLink(f"link {lid} duplicates link {index[key]} between bins {key}")
            index[key] = lid
            norm.append(key)
        if factors is None:
            factors = [None] * len(norm)
        if len(factors) != len(norm):
            raise BadFactor("one factor entry per link is required")
        factors = tuple(None if f is None else parse_factor(f) for f in factors)

        set_ = object.__setattr__
        set_(self, "n_bins", n_bins)
        set_(self, "links", tuple(norm))
        set_(self, "routers", routers)
        set_(self, "factors", factors)
        set_(self, "global_factor", parse_factor(global_factor))
        set_(self, "kind", kind)
        set_(self, "_link_index", index)
        adj = [[] for _ in range(n_bins)]
        for lid, (a, b) in enumerate(norm):
            adj[a].append((b, lid))
            adj[b].append((a, lid))
        set_(self, "_adj", tuple(tuple(x) for x in adj))
        if kind == TREE:
            self._root_tree()

    def __setattr__(self, name, value):
        raise AttributeError("Topology is immutable")

    def __reduce__(self):
        return (Topology, (self.n_bins, self.links, self.routers, self.factors, self.global_factor, self.kind))

    def _root_tree(self):
        n = self.n_bins
        if len(self.links) != n - 1:
            raise NotATree(f"a tree on {n} bins has {n - 1} links, got {len(self.links)}")
        parent = [-1] * n
        parent_link = [-1] * n
        depth = [-1] * n
        depth[0] = 0
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for y, lid in self._adj[x]:
                if depth[y] < 0:
                    depth[y] = depth[x] + 1
                    parent[y] = x
                    parent_link[y] = lid
                    queue.append(y)
        if min(depth) < 0:
            raise NotATree("link set is disconnected")
        object.__setattr__(self, "_parent", tuple(parent))
        object.__setattr__(self, "_parent_link", tuple(parent_link))
        object.__setattr__(self, "_depth", tuple(depth))

    @property
    def n_links(self) -> int:
        return len(self.links)

    def is_router(self, b: int) -> bool:
        return b in self.routers

    @property
    def compute_bins(self) -> tuple[int, ...]:
        return tuple(b for b in range(self.n_bins) if b not in self.routers)

    def link_factor(self, lid: int) -> Fraction:
        f = self.factors[lid]
        return self.global_factor if f is None else f

    def link_between(self, a: int, b: int) -> int | None:
        return self._link_index.get((min(a, b), max(a, b)))

    def neighbors(self, b: int) -> tuple[tuple[int, int], ...]:
        """(neighbor bin, link id) pairs of bin ``b``."""
        return self._adj[b]

    def with_global_factor(self, factor) -> "Topology":
        """Copy with a different global F. Explicit per-link factors are kept."""
        return Topology(self.n_bins, self.links, self.routers, self.factors, factor, self.kind)

    def check_bin(self, b: int):
        if not (isinstance(b, int) and 0 <= b < self.n_bins):
            raise BadLink(f"bin id {b!r} out of range 0..{self.n_bins - 1}")

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (self.n_bins, self.links, self.routers, self.factors, self.global_factor, self.kind) == (
            other.n_bins, other.links, other.routers, other.factors, other.global_factor, other.kind)

    def __hash__(self):
        return hash((self.n_bins, self.links, self.routers, self.factors, self.global_factor, self.kind))

    def __repr__(self):
        return (f"Topology(kind={self.kind!r}, n_bins={self.n_bins}, n_links={self.n_links}, "
                f"routers={sorted(self.routers)}, global_factor={self.global_factor})")


def _build(kind, n_bins, links, routers, link_factors, global_factor):
    top = Topology(n_bins, links, routers, link_factors, global_factor, kind)
    if not top.compute_bins:
        raise AllRouters("every bin is a router; no vertex can be mapped")
    return top


def build_tree_topology(n_bins: int, links, routers=(), link_factors=None, global_factor=1) -> Topology:
    """Build and validate a tree topology.

    Raises NotATree, AllRouters or BadLink on invalid input.
    """
    return _build(TREE, n_bins, links, routers, link_factors, global_factor)


def build_routed_topology(n_bins: int, links, routers=(), link_factors=None, global_factor=1) -> Topology:
    """Build a topology whose routes come from a route table. Cycles are allowed."""
    return _build(ROUTED, n_bins, links, routers, link_factors, global_factor)


def compute_bins(topology: Topology) -> frozenset[int]:
    """Bins that may carry work, i.e. all non-router bins."""
    return frozenset(topology.compute_bins)


@dataclass(frozen=True)
class RouteSet:
    """Paths between a bin pair; each path carries 1/k of the traffic."""

    paths: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.paths:
            raise InvalidPath("a route set needs at least one path")

    @property
    def k(self) -> int:
        return len(self.paths)

    @property
    def weight(self) -> Fraction:
        return Fraction(1, len(self.paths))

    def reversed(self) -> "RouteSet":
        return RouteSet(tuple(tuple(reversed(p)) for p in self.paths))

    def link_loads(self) -> dict[int, Fraction]:
        """Fraction of one unit of traffic placed on each link."""
        out: dict[int, Fraction] = {}
        w = self.weight
        for p in self.paths:
            for lid in p:
                out[lid] = out.get(lid, 0) + w
        return out


EMPTY_ROUTE = RouteSet(((),))


def tree_path(topology: Topology, a: int, b: int) -> RouteSet:
    """The unique tree path from ``a`` to ``b`` as a one-path RouteSet."""
    if topology.kind != TREE:
        raise ValueError("tree_path requires a tree topology")
    topology.check_bin(a)
    topology.check_bin(b)
    if a == b:
        return EMPTY_ROUTE
    parent, plink, depth = topology._parent, topology._parent_link, topology._depth
    up_a, up_b = [], []
    x, y = a, b
    while depth[x] > depth[y]:
        up_a.append(plink[x])
        x = parent[x]
    while depth[y] > depth[x]:
        up_b.append(plink[y])
        y = parent[y]
    while x != y:
        up_a.append(plink[x])
        up_b.append(plink[y])
        x, y = parent[x], parent[y]
    up_b.reverse()
    return RouteSet((tuple(up_a + up_b),))


class RoutingOracle:
    """Answers (bin, bin) -> RouteSet queries.

    ``denominator`` is the lcm of all path counts the oracle can return, so
    every per-link load is an integer multiple of ``1/denominator``.
    """

    topology: Topology
    denominator: int = 1

    def route(self, a: int, b: int) -> RouteSet:
        raise NotImplementedError

    def __call__(self, a: int, b: int) -> RouteSet:
        return self.route(a, b)


class TreeOracle(RoutingOracle):
    def __init__(self, topology: Topology):
        if topology.kind != TREE:
            raise ValueError("TreeOracle requires a tree topology")
        self.topology = topology
        self.denominator = 1
        self._cache: dict[tuple[int, int], RouteSet] = {}

    def route(self, a, b):
        key = (a, b)
        rs = self._cache.get(key)
        if rs is None:
            rs = tree_path(self.topology, a, b)
            self._cache[key] = rs
        return rs


def _walk(topology: Topology, a: int, b: int, path: Sequence[int]) -> tuple[int, ...]:
    """Validate that ``path`` is a simple link path from a to b; return it as a tuple."""
    cur = a
    seen = {a}
    for lid in path:
        if not (isinstance(lid, int) and 0 <= lid < topology.n_links):
            raise InvalidPath(f"route {a}->{b}: link {lid!r} does not exist")
        x, y = topology.links[lid]
        if cur == x:
            cur = y
        elif cur == y:
            cur = x
        else:
            raise InvalidPath(f"route {a}->{b}: link {lid} does not touch bin {cur}")
        if cur in seen:
            raise InvalidPath(f"route {a}->{b}: path revisits bin {cur}")
        seen.add(cur)
    if cur != b:
        raise InvalidPath(f"route {a}->{b}: path ends at bin {cur}")
    return tuple(path)


class TableOracle(RoutingOracle):
    """Routes looked up in an explicit table keyed by unordered bin pairs.

    Paths are stored oriented from the smaller to the larger bin id; queries
    in the other direction get the reversed paths.
    """

    def __init__(self, topology: Topology, routes: Mapping[tuple[int, int], Sequence[Sequence[int]]]):
        self.topology = topology
        table: dict[tuple[int, int], RouteSet] = {}
        for (a, b), paths in routes.items():
            topology.check_bin(a)
            topology.check_bin(b)
            if a == b:
                raise InvalidPath(f"route entry for ({a},{b}) is a self pair")
            if isinstance(paths, RouteSet):
                paths = paths.paths
            if not paths:
                raise InvalidPath(f"route entry ({a},{b}) has no paths")
            checked = [_walk(topology, a, b, p) for p in paths]
            if a > b:
                a, b = b, a
                checked = [tuple(reversed(p)) for p in checked]
            rs = RouteSet(tuple(checked))
            prev = table.get((a, b))
            if prev is not None and prev != rs:
                raise InconsistentRoute(f"conflicting route entries for bins ({a},{b})")
            table[(a, b)] = rs
        self._table = table
        self._reverse: dict[tuple[int, int], RouteSet] = {}
        self.denominator = math.lcm(*(rs.k for rs in table.values())) if table else 1

    @property
    def table(self) -> dict[tuple[int, int], RouteSet]:
        return dict(self._table)

    def route(self, a, b):
        if a == b:
            self.topology.check_bin(a)
            return EMPTY_ROUTE
        if a < b:
            rs = self._table.get((a, b))
            if rs is None:
                raise MissingRoute(f"no route between bins {a} and {b}")
            return rs
        rs = self._reverse.get((a, b))
        if rs is None:
            fwd = self._table.get((b, a))
            if fwd is None:
                raise MissingRoute(f"no route between bins {a} and {b}")
            rs = fwd.reversed()
            self._reverse[(a, b)] = rs
        return rs

    def missing_pairs(self, bins: Iterable[int] | None = None) -> list[tuple[int, int]]:
        """Unordered pairs among ``bins`` (default: compute bins) that lack a route."""
        bins = sorted(self.topology.compute_bins if bins is None else bins)
        return [(a, b) for i, a in enumerate(bins) for b in bins[i + 1:] if (a, b) not in self._table]


def table_oracle(topology: Topology, routes) -> TableOracle:
    return TableOracle(topology, routes)


def make_oracle(topology: Topology, routes=None) -> RoutingOracle:
    """Tree oracle for tree topologies, table oracle when routes are supplied."""
    if routes is not None:
        if isinstance(routes, RoutingOracle):
            return routes
        return TableOracle(topology, routes)
    if topology.kind == TREE:
        return TreeOracle(topology)
    raise ValueError("a routed topology needs a route table")


# ---------------------------------------------------------------- file formats

def _content_lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if line:
            yield no, line.split()


def _int(tok: str, no: int, what: str) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {tok!r}", no) from None
    if v < 0:
        raise ParseError(f"{what} must be non-negative, got {v}", no)
    return v


def parse_topology(text: str) -> Topology:
    """Parse the line-oriented topology format.

    ::

        topology <tree|routed> <numBins> <numLinks> <globalF>
        bin <id> [router]
        link <id> <binA> <binB> [factor]

    Bins without a ``bin`` line are compute bins. ``%`` starts a comment.
    """
    lines = _content_lines(text)
    try:
        no, head = next(lines)
    except StopIteration:
        raise ParseError("empty topology document") from None
    if len(head) != 5 or head[0] != "topology":
        raise ParseError("header must be 'topology <tree|routed> <numBins> <numLinks> <globalF>'", no)
    kind = head[1]
    if kind not in (TREE, ROUTED):
        raise ParseError(f"unknown topology kind {kind!r}", no)
    n_bins = _int(head[2], no, "bin count")
    n_links = _int(head[3], no, "link count")
    try:
        global_f = parse_factor(head[4])
    except BadFactor as e:
        raise ParseError(str(e), no) from None

    routers = set()
    seen_bins = set()
    links: list = [None] * n_links
    factors: list = [None] * n_links
    for no, tok in lines:
        if tok[0] == "bin":
            if len(tok) not in (2, 3) or (len(tok) == 3 and tok[2] != "router"):
                raise ParseError("expected 'bin <id> [router]'", no)
            b = _int(tok[1], no, "bin id")
            if b >= n_bins:
                raise ParseError(f"bin id {b} out of range", no)
            if b in seen_bins:
                raise ParseError(f"bin {b} declared twice", no)
            seen_bins.add(b)
            if len(tok) == 3:
                routers.add(b)
        elif tok[0] == "link":
            if len(tok) not in (4, 5):
                raise ParseError("expected 'link <id> <binA> <binB> [factor]'", no)
            lid = _int(tok[1], no, "link id")
            if lid >= n_links:
                raise ParseError(f"link id {lid} out of range", no)
            if links[lid] is not None:
                raise ParseError(f"link {lid} declared twice", no)
            links[lid] = (_int(tok[2], no, "bin id"), _int(tok[3], no, "bin id"))
            if len(tok) == 5:
                try:
                    factors[lid] = parse_factor(tok[4])
                except BadFactor as e:
                    raise ParseError(str(e), no) from None
        else:
            raise ParseError(f"unknown record {tok[0]!r}", no)
    missing = [i for i, l in enumerate(links) if l is None]
    if missing:
        raise ParseError(f"{len(missing)} declared links are missing (first: link {missing[0]})")
    return _build(kind, n_bins, links, routers, factors, global_f)


def _fmt_fraction(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def format_topology(topology: Topology) -> str:
    out = [f"topology {topology.kind} {topology.n_bins} {topology.n_links} "
           f"{_fmt_fraction(topology.global_factor)}"]
    for b in range(topology.n_bins):
        out.append(f"bin {b} router" if b in topology.routers else f"bin {b}")
    for lid, (a, b) in enumerate(topology.links):
        f = topology.factors[lid]
        out.append(f"link {lid} {a} {b}" + ("" if f is None else f" {_fmt_fraction(f)}"))
    return "\n".join(out) + "\n"


def read_topology(path) -> Topology:
    with open(path) as fh:
        text = fh.read()
    try:
        return parse_topology(text)
    except ParseError as e:
        raise e.with_source(path) from None
    except TopologyError as e:
        raise type(e)(f"{path}: {e}") from None


def parse_route_table(text: str, topology: Topology) -> TableOracle:
    """Parse ``route <binA> <binB> <k>`` records, each followed by k link-id lines."""
    routes: dict[tuple[int, int], list] = {}
    lines = _content_lines(text)
    for no, tok in lines:
        if tok[0] != "route" or len(tok) != 4:
            raise ParseError("expected 'route <binA> <binB> <k>'", no)
        a, b, k = (_int(t, no, "route field") for t in tok[1:])
        if k < 1:
            raise ParseError("a route needs k >= 1 paths", no)
        paths = []
        for _ in range(k):
            try:
                pno, ptok = next(lines)
            except StopIteration:
                raise ParseError(f"route ({a},{b}) declares {k} paths but the file ended", no) from None
            if ptok[0] == "route":
                raise ParseError(f"route ({a},{b}) declares {k} paths, found fewer", pno)
            paths.append([_int(t, pno, "link id") for t in ptok])
        key = (a, b)
        rkey = (b, a)
        if key in routes:
            raise ParseError(f"route ({a},{b}) listed twice", no)
        if rkey in routes:
            # both directions given; they must agree once oriented the same way
            flipped = sorted(tuple(reversed(p)) for p in paths)
            if sorted(tuple(p) for p in routes[rkey]) != flipped:
                raise InconsistentRoute(f"line {no}: route ({a},{b}) disagrees with route ({b},{a})")
            continue
        routes[key] = paths
    try:
        return TableOracle(topology, routes)
    except ParseError:
        raise
    except (InvalidPath, BadLink) as e:
        raise ParseError(str(e)) from None


def format_route_table(oracle: TableOracle) -> str:
    out = []
    for (a, b), rs in sorted(oracle._table.items()):
        out.append(f"route {a} {b} {rs.k}")
        out.extend(" ".join(map(str, p)) for p in rs.paths)
    return "\n".join(out) + ("\n" if out else "")


def read_route_table(path, topology: Topology) -> TableOracle:
    with open(path) as fh:
        text = fh.read()
    try:
        return parse_route_table(text, topology)
    except ParseError as e:
        raise e.with_source(path) from None
