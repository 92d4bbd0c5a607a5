"""Graphs, adoption thresholds, structural metrics and instance generators.

Nodes are the integers ``0..node_count-1``.  Thresholds are kept as exact
rationals so that the cardinality threshold ``ceil(deg * alpha)`` never depends
on floating point rounding.
"""
from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

# Any alpha above 1 makes a node intransigent: ceil(deg * alpha) > deg.
INTRANSIGENT_ALPHA = Fraction(1_000_001, 1_000_000)


class GraphFormatError(ValueError):
    """Raised for malformed graph files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)


def to_fraction(value) -> Fraction:
    """Parse ``p/q``, decimal strings, ints or Fractions exactly.

    Floats are converted through their shortest ``repr`` so that ``0.1`` means
    one tenth rather than its binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value).strip())


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on ``node_count`` nodes."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Sequence[int]]) -> "Graph":
        if node_count < 1:
            raise ValueError("a graph needs at least one node")
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise ValueError(f"edge ({u}, {v}) out of range for {node_count} nodes")
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        nbrs: list[list[int]] = [[] for _ in range(node_count)]
        for u, v in seen:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return cls(
            node_count=node_count,
            edges=tuple(sorted(seen)),
            adjacency=tuple(tuple(sorted(row)) for row in nbrs),
        )

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(row) for row in self.adjacency)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        """Neighbourhoods as integer bitmasks (bit j set iff j is a neighbour)."""
        masks = []
        for row in self.adjacency:
            m = 0
            for j in row:
                m |= 1 << j
            masks.append(m)
        return tuple(masks)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]


@dataclass(frozen=True)
class ThresholdProfile:
    """Per-node susceptibility fractions ``alpha`` and cardinality thresholds ``b``.

    ``alpha`` is ``None`` when the profile was specified directly by counts.
    """

    b: tuple[int, ...]
    alpha: tuple[Fraction, ...] | None = None

    @classmethod
    def from_counts(cls, b: Iterable[int]) -> "ThresholdProfile":
        b = tuple(int(x) for x in b)
        if any(x < 0 for x in b):
            raise ValueError("cardinality thresholds must be non-negative")
        return cls(b=b, alpha=None)

    def __len__(self) -> int:
        return len(self.b)

    def intransigent(self, graph: Graph) -> frozenset[int]:
        """Nodes whose threshold exceeds their degree."""
        return frozenset(i for i, bi in enumerate(self.b) if bi > graph.degree(i))


def derive_thresholds(graph: Graph, alpha) -> ThresholdProfile:
    """Cardinality thresholds ``b_i = ceil(deg(i) * alpha_i)``.

    ``alpha`` may be a single value (applied uniformly) or one value per node.
    """
    if isinstance(alpha, (str, int, float, Fraction)):
        alpha = [alpha] * graph.node_count
    alpha = tuple(to_fraction(a) for a in alpha)
    if len(alpha) != graph.node_count:
        raise ValueError(f"expected {graph.node_count} alpha values, got {len(alpha)}")
    if any(a < 0 for a in alpha):
        raise ValueError("alpha must be non-negative")
    b = tuple(math.ceil(graph.degree(i) * a) for i, a in enumerate(alpha))
    return ThresholdProfile(b=b, alpha=alpha)


def isolated_unconditional(graph: Graph, thresholds: ThresholdProfile) -> list[int]:
    """Degree-0 nodes with ``b = 0``: they adopt with no social input at all."""
    return [i for i in range(graph.node_count) if graph.degree(i) == 0 and thresholds.b[i] == 0]


# -- utility model -----------------------------------------------------------


@dataclass(frozen=True)
class UtilityProfile:
    """Moral benefit ``f`` as sorted ``(breakpoint, value)`` pairs, plus beta, c, s.

    ``f(p)`` equals the value of the largest breakpoint ``<= p``.
    """

    moral_benefit: tuple[tuple[Fraction, Fraction], ...]
    env_benefit: Fraction
    cost: Fraction
    subsidy_value: Fraction = Fraction(0)

    def __post_init__(self):
        pts = tuple((to_fraction(p), to_fraction(v)) for p, v in self.moral_benefit)
        object.__setattr__(self, "moral_benefit", pts)
        for name in ("env_benefit", "cost", "subsidy_value"):
            val = to_fraction(getattr(self, name))
            if val < 0:
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, val)
        if not pts:
            raise ValueError("moral benefit function needs at least one breakpoint")
        for (p0, v0), (p1, v1) in zip(pts, pts[1:]):
            if p1 <= p0:
                raise ValueError("breakpoints must be strictly increasing")
            if v1 < v0:
                raise ValueError("moral benefit function must be non-decreasing")
        if pts[0][1] < 0:
            raise ValueError("moral benefit must be non-negative")

    def f(self, p) -> Fraction:
        p = to_fraction(p)
        value = Fraction(0)
        for bp, v in self.moral_benefit:
            if bp > p:
                break
            value = v
        return value

    def subsidy_forces_adoption(self) -> bool:
        return self.f(0) + self.env_benefit + self.subsidy_value > self.cost


def alpha_from_utility(u: UtilityProfile) -> Fraction:
    """Smallest adoption fraction at which ``f(p) + beta > c``.

    ``f`` is piecewise constant so the minimum is attained at a breakpoint.
    Returns :data:`INTRANSIGENT_ALPHA` when no fraction satisfies the condition.
    """
    for p, v in u.moral_benefit:
        if v + u.env_benefit > u.cost:
            return p
    return INTRANSIGENT_ALPHA


# -- metrics -----------------------------------------------------------------


@dataclass(frozen=True)
class GraphMetrics:
    clustering_coefficient: float
    avg_path_length: float | None  # None when no pair of distinct nodes is connected
    avg_degree: float
    connected: bool


def _bfs_distances(graph: Graph, source: int) -> list[int]:
    dist = [-1] * graph.node_count
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in graph.adjacency[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def local_clustering(graph: Graph, v: int) -> float:
    nbrs = graph.adjacency[v]
    k = len(nbrs)
    if k <= 1:
        return 0.0
    links = sum(1 for a, b in itertools.combinations(nbrs, 2) if graph.has_edge(a, b))
    return links / (k * (k - 1) / 2)


def metrics(graph: Graph) -> GraphMetrics:
    """Clustering coefficient, mean shortest path over reachable pairs, connectivity."""
    n = graph.node_count
    clustering = sum(local_clustering(graph, v) for v in range(n)) / n
    total = pairs = 0
    connected = True
    for s in range(n):
        dist = _bfs_distances(graph, s)
        for t, d in enumerate(dist):
            if t == s:
                continue
            if d < 0:
                connected = False
            else:
                total += d
                pairs += 1
    return GraphMetrics(
        clustering_coefficient=clustering,
        avg_path_length=total / pairs if pairs else None,
        avg_degree=2 * graph.edge_count / n,
        connected=connected,
    )


# -- generators --------------------------------------------------------------


def complete_graph(m: int) -> Graph:
    return Graph.from_edges(m, itertools.combinations(range(m), 2))


def path_graph(m: int) -> Graph:
    return Graph.from_edges(m, ((i, i + 1) for i in range(m - 1)))


def gen_class1(n: int) -> tuple[Graph, ThresholdProfile]:
    """Triangle ``{0, 1, 2}`` with two legs of ``n`` nodes sharing node 0.

    Each leg starts at node 0 and adds ``n - 1`` path nodes, so the graph has
    ``2n + 1`` nodes; alpha is 1/2 everywhere.
    """
    if n < 2:
        raise ValueError("class 1 needs n >= 2")
    edges = [(0, 1), (0, 2), (1, 2)]
    nxt = 3
    for _ in range(2):
        prev = 0
        for _ in range(n - 1):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
    g = Graph.from_edges(nxt, edges)
    return g, derive_thresholds(g, Fraction(1, 2))


def gen_class2(n: int) -> tuple[Graph, ThresholdProfile]:
    """Triangle ``{0, 1, 2}`` with ``n`` legs ``0 - a_j - b_j`` on the hub 0.

    Leg ``j`` uses nodes ``a_j = 3 + 2j`` and ``b_j = 4 + 2j``.  The hub gets
    alpha ``2/(n+2)`` (threshold 2), every other node alpha 1/2.
    """
    if n < 1:
        raise ValueError("class 2 needs n >= 1")
    edges = [(0, 1), (0, 2), (1, 2)]
    for j in range(n):
        a, b = 3 + 2 * j, 4 + 2 * j
        edges += [(0, a), (a, b)]
    g = Graph.from_edges(2 * n + 3, edges)
    alpha = [Fraction(1, 2)] * g.node_count
    alpha[0] = Fraction(2, n + 2)
    return g, derive_thresholds(g, alpha)


def class2_leg(n: int, j: int) -> frozenset[int]:
    """The two outer nodes of leg ``j`` in :func:`gen_class2`."""
    if not 0 <= j < n:
        raise ValueError("leg index out of range")
    return frozenset({3 + 2 * j, 4 + 2 * j})


def gen_star(leaves: int, alpha=Fraction(1, 2)) -> tuple[Graph, ThresholdProfile]:
    """Hub 0 joined to leaves ``1..leaves``."""
    if leaves < 2:
        raise ValueError("a star needs at least two leaves")
    g = Graph.from_edges(leaves + 1, ((0, i) for i in range(1, leaves + 1)))
    return g, derive_thresholds(g, alpha)


def gen_rewired_clusters(
    clusters: int,
    cluster_size: int,
    p: float | Fraction,
    seed: int,
    on_duplicate: str = "resample",
) -> Graph:
    """Disjoint cliques whose edges are independently rewired with probability ``p``.

    Each original edge (in sorted order) is, with probability ``p``, removed and
    replaced by an edge from one of its endpoints (chosen uniformly) to a
    uniformly random node.  Self-loops and duplicates are redrawn when
    ``on_duplicate="resample"`` (edge count preserved); with ``"drop"`` the
    proposal is discarded, leaving the edge deleted.

    Randomness: ``random.Random(seed)`` (MT19937).  Per edge, one ``random()``
    draw decides rewiring, then ``randrange(2)`` picks the endpoint and
    ``randrange(N)`` the new partner.
    """
    if clusters < 1 or cluster_size < 2:
        raise ValueError("need clusters >= 1 and cluster_size >= 2")
    if clusters * cluster_size < 3:
        raise ValueError("degenerate instance: fewer than 3 nodes")
    p = to_fraction(p)
    if not 0 <= p <= 1:
        raise ValueError("rewiring probability must lie in [0, 1]")
    if on_duplicate not in ("resample", "drop"):
        raise ValueError("on_duplicate must be 'resample' or 'drop'")
    n = clusters * cluster_size
    original = [
        (c * cluster_size + i, c * cluster_size + j)
        for c in range(clusters)
        for i, j in itertools.combinations(range(cluster_size), 2)
    ]
    rng = random.Random(seed)
    current = set(original)
    pf = float(p)
    for u, v in original:
        if rng.random() >= pf:
            continue
        current.discard((u, v))
        for _attempt in range(10_000):
            a = (u, v)[rng.randrange(2)]
            w = rng.randrange(n)
            key = (a, w) if a < w else (w, a)
            if a != w and key not in current:
                current.add(key)
                break
            if on_duplicate == "drop":
                break
        else:  # pragma: no cover - only reachable on near-complete graphs
            raise RuntimeError("rewiring failed to find a free edge")
    return Graph.from_edges(n, current)


def random_graph(n: int, edge_prob: float, rng: random.Random, min_degree: int = 0) -> Graph:
    """Erdos-Renyi style graph; nodes below ``min_degree`` get random extra edges."""
    edges = {(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < edge_prob}
    if min_degree:
        deg = [0] * n
        for i, j in edges:
            deg[i] += 1
            deg[j] += 1
        for i in range(n):
            while deg[i] < min(min_degree, n - 1):
                j = rng.randrange(n)
                key = (min(i, j), max(i, j))
                if j != i and key not in edges:
                    edges.add(key)
                    deg[i] += 1
                    deg[j] += 1
    return Graph.from_edges(n, edges)


# -- set cover reduction -----------------------------------------------------


@dataclass(frozen=True)
class SetCoverInstance:
    element_count: int
    subsets: tuple[frozenset[int], ...]
    budget: int | None = None

    def __post_init__(self):
        subsets = tuple(frozenset(int(e) for e in s) for s in self.subsets)
        object.__setattr__(self, "subsets", subsets)
        if not subsets:
            raise ValueError("empty subset family")
        for s in subsets:
            for e in s:
                if not 0 <= e < self.element_count:
                    raise ValueError(f"element {e} out of range")
        covered = frozenset().union(*subsets)
        if len(covered) != self.element_count:
            raise ValueError("some element is in no subset; the cover problem is infeasible")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be non-negative")


@dataclass(frozen=True)
class NodeRole:
    kind: str  # "subset", "element" or "dummy"
    index: int


def from_set_cover(inst: SetCoverInstance) -> tuple[Graph, ThresholdProfile, tuple[NodeRole, ...]]:
    """Subset / element / dummy-copy graph used for the hardness constructions.

    Node layout: subset nodes ``0..|F|-1``, element nodes ``|F|..|F|+n-1``,
    dummy nodes ``|F|+n..|F|+2n-1``.
    """
    f, n = len(inst.subsets), inst.element_count
    edges = []
    for si, subset in enumerate(inst.subsets):
        for q in subset:
            edges.append((si, f + q))
    for q in range(n):
        edges.append((f + q, f + n + q))
    g = Graph.from_edges(f + 2 * n, edges)
    alpha = [INTRANSIGENT_ALPHA] * f + [Fraction(1, f + 1)] * n + [Fraction(1)] * n
    roles = tuple(
        [NodeRole("subset", i) for i in range(f)]
        + [NodeRole("element", q) for q in range(n)]
        + [NodeRole("dummy", q) for q in range(n)]
    )
    return g, derive_thresholds(g, alpha), roles


# -- file I/O ----------------------------------------------------------------


def format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def graph_text(graph: Graph, profile: ThresholdProfile) -> str:
    if profile.alpha is None:
        raise ValueError("profile has no alpha values; the file format stores alpha only")
    lines = [f"nodes {graph.node_count}"]
    lines += [f"edge {u} {v}" for u, v in graph.edges]
    values = set(profile.alpha)
    default = None
    if len(values) == 1:
        default = profile.alpha[0]
    else:
        # most common alpha becomes the default, ties broken by value
        counts: dict[Fraction, int] = {}
        for a in profile.alpha:
            counts[a] = counts.get(a, 0) + 1
        default = max(sorted(counts), key=lambda a: counts[a])
    lines.append(f"default_alpha {format_fraction(default)}")
    lines += [f"alpha {i} {format_fraction(a)}" for i, a in enumerate(profile.alpha) if a != default]
    return "\n".join(lines) + "\n"


def write_graph(graph: Graph, profile: ThresholdProfile, path) -> None:
    Path(path).write_text(graph_text(graph, profile), encoding="utf-8")


def parse_graph(text: str) -> tuple[Graph, ThresholdProfile]:
    node_count = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    default = None
    overrides: dict[int, Fraction] = {}

    def as_int(tok: str, lineno: int) -> int:
        try:
            return int(tok)
        except ValueError:
            raise GraphFormatError(f"expected an integer, got {tok!r}", lineno) from None

    def as_frac(tok: str, lineno: int) -> Fraction:
        try:
            val = Fraction(tok)
        except (ValueError, ZeroDivisionError):
            raise GraphFormatError(f"bad rational {tok!r}", lineno) from None
        if val < 0:
            raise GraphFormatError("alpha must be non-negative", lineno)
        return val

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        if key == "nodes":
            if len(args) != 1:
                raise GraphFormatError("'nodes' takes one argument", lineno)
            if node_count is not None:
                raise GraphFormatError("repeated 'nodes' directive", lineno)
            node_count = as_int(args[0], lineno)
            if node_count < 1:
                raise GraphFormatError("node count must be positive", lineno)
        elif key == "edge":
            if len(args) != 2:
                raise GraphFormatError("'edge' takes two node indices", lineno)
            if node_count is None:
                raise GraphFormatError("'edge' before 'nodes'", lineno)
            u, v = as_int(args[0], lineno), as_int(args[1], lineno)
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise GraphFormatError(f"node index out of range in edge {u} {v}", lineno)
            if u == v:
                raise GraphFormatError("self-loop", lineno)
            k = (min(u, v), max(u, v))
            if k in seen:
                raise GraphFormatError(f"duplicate edge {u} {v}", lineno)
            seen.add(k)
            edges.append(k)
        elif key == "default_alpha":
            if len(args) != 1:
                raise GraphFormatError("'default_alpha' takes one value", lineno)
            default = as_frac(args[0], lineno)
        elif key == "alpha":
            if len(args) != 2:
                raise GraphFormatError("'alpha' takes a node index and a value", lineno)
            if node_count is None:
                raise GraphFormatError("'alpha' before 'nodes'", lineno)
            i = as_int(args[0], lineno)
            if not 0 <= i < node_count:
                raise GraphFormatError(f"node index {i} out of range", lineno)
            overrides[i] = as_frac(args[1], lineno)
        else:
            raise GraphFormatError(f"unknown directive {key!r}", lineno)

    if node_count is None:
        raise GraphFormatError("missing 'nodes' directive")
    alpha = []
    for i in range(node_count):
        if i in overrides:
            alpha.append(overrides[i])
        elif default is not None:
            alpha.append(default)
        else:
            raise GraphFormatError(f"node {i} has no alpha and there is no default_alpha")
    g = Graph.from_edges(node_count, edges)
    return g, derive_thresholds(g, alpha)


def read_graph(path) -> tuple[Graph, ThresholdProfile]:
    return parse_graph(Path(path).read_text(encoding="utf-8"))
