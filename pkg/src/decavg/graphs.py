"""Collaboration topologies: Erdos-Renyi, Barabasi-Albert and stochastic block model.

Graphs are undirected, unweighted by default (every edge weight 1.0) and
immutable once generated. Self-influence is carried by a per-node
``self_weight``, never by a self-loop edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, LoadError, UsageError
from .rng import as_generator


@dataclass
class Graph:
    """Undirected weighted graph on nodes 0..n-1 with optional community labels."""

    n: int
    edges: np.ndarray           # (E, 2) int64, each row (u, v) with u < v, lexicographically sorted
    weights: np.ndarray = None  # (E,) float64, defaults to all ones
    self_weight: np.ndarray = None  # (n,) float64, defaults to all ones
    blocks: np.ndarray = None   # (n,) int64 community labels, or None

    def __post_init__(self):
        if self.edges is None:
            self.edges = np.empty((0, 2), dtype=np.int64)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.weights is None:
            self.weights = np.ones(len(self.edges))
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.self_weight is None:
            self.self_weight = np.ones(self.n)
        self.self_weight = np.asarray(self.self_weight, dtype=np.float64)
        if self.blocks is not None:
            self.blocks = np.asarray(self.blocks, dtype=np.int64)
        self._validate()
        for arr in (self.edges, self.weights, self.self_weight, self.blocks):
            if arr is not None:
                arr.setflags(write=False)

    def _validate(self):
        if self.n < 0:
            raise ConfigurationError("node count must be non-negative")
        if len(self.weights) != len(self.edges):
            raise ConfigurationError("weights and edges must have equal length")
        if len(self.self_weight) != self.n:
            raise ConfigurationError("self_weight must have one entry per node")
        if np.any(self.weights < 0) or np.any(self.self_weight < 0):
            raise ConfigurationError("all weights must be non-negative")
        if len(self.edges):
            u, v = self.edges[:, 0], self.edges[:, 1]
            if u.min() < 0 or v.max() >= self.n:
                raise ConfigurationError("edge endpoints must lie in [0, n)")
            if np.any(u == v):
                raise ConfigurationError("self-loop edges are not allowed")
            if np.any(u > v):
                raise ConfigurationError("edge rows must be stored as (u, v) with u < v")
            keys = u * self.n + v
            if len(np.unique(keys)) != len(keys):
                raise ConfigurationError("duplicate edges are not allowed")
        if self.blocks is not None:
            if len(self.blocks) != self.n:
                raise ConfigurationError("blocks must assign exactly one label per node")
            if self.n and self.blocks.min() < 0:
                raise ConfigurationError("block labels must be non-negative")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if len(self.edges):
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        deg.setflags(write=False)
        return deg

    @cached_property
    def neighbor_map(self) -> list[dict[int, float]]:
        """Per-node map neighbor -> edge weight (excluding the node itself)."""
        nbrs = [dict() for _ in range(self.n)]
        for (u, v), w in zip(self.edges, self.weights):
            nbrs[u][int(v)] = float(w)
            nbrs[v][int(u)] = float(w)
        return nbrs

    def neighborhood(self, i: int) -> list[int]:
        """Sorted closed neighborhood of node i (neighbors plus i itself)."""
        return sorted(self.neighbor_map[i].keys() | {i})


def _canonical_edges(pairs: np.ndarray) -> np.ndarray:
    """Sort edge rows lexicographically so generation order never leaks out."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        return pairs
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def gen_erdos_renyi(n: int, p: float, seed=None) -> Graph:
    """G(n, p): each of the n(n-1)/2 pairs becomes an edge independently with probability p."""
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError("p must be in [0,1]")
    rng = as_generator(seed)
    iu, iv = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p
    edges = np.column_stack([iu[mask], iv[mask]])
    return Graph(n=n, edges=edges)


def gen_barabasi_albert(n: int, m: int, seed=None) -> Graph:
    """Preferential attachment starting from a complete graph on the first m nodes.

    Each arriving node attaches m edges to distinct targets sampled
    degree-proportionally (repeated-endpoint urn), so every node ends with
    degree >= m and the total edge count is m(n-m) + C(m,2).
    """
    if m < 1:
        raise ConfigurationError("m must be at least 1")
    if m >= n:
        raise ConfigurationError(f"m must be smaller than n (got m={m}, n={n})")
    rng = as_generator(seed)
    edges = [(u, v) for u in range(m) for v in range(u + 1, m)]
    # Urn holds one entry per edge endpoint; sampling it is degree-proportional.
    urn = [node for node in range(m) for _ in range(m - 1)]
    for source in range(m, n):
        targets = set()
        while len(targets) < m:
            if urn:
                targets.add(urn[rng.integers(len(urn))])
            else:
                targets.add(int(rng.integers(source)))  # only reachable when m == 1
        for t in sorted(targets):
            edges.append((t, source))
            urn.append(t)
        urn.extend([source] * m)
    return Graph(n=n, edges=_canonical_edges(np.array(edges)))


def gen_sbm(block_sizes, p_matrix, seed=None) -> Graph:
    """Stochastic block model: pair (u, v) in blocks (a, b) joined with probability p_ab."""
    sizes = [int(s) for s in block_sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ConfigurationError("block_sizes must be positive")
    p = np.asarray(p_matrix, dtype=np.float64)
    b = len(sizes)
    if p.shape != (b, b):
        raise ConfigurationError(f"p_matrix must be {b}x{b} to match block_sizes")
    if not np.array_equal(p, p.T):
        raise ConfigurationError("p_matrix must be symmetric")
    if p.min() < 0.0 or p.max() > 1.0:
        raise ConfigurationError("p_matrix entries must be in [0,1]")
    rng = as_generator(seed)
    n = sum(sizes)
    blocks = np.repeat(np.arange(b, dtype=np.int64), sizes)
    iu, iv = np.triu_indices(n, k=1)
    pair_p = p[blocks[iu], blocks[iv]]
    mask = rng.random(len(iu)) < pair_p
    edges = np.column_stack([iu[mask], iv[mask]])
    return Graph(n=n, edges=edges, blocks=blocks)


def critical_threshold(n: int) -> float:
    """Connectivity phase-transition probability p* = ln(n)/n for G(n, p)."""
    if n < 2:
        raise ConfigurationError("n must be at least 2")
    return math.log(n) / n


def select_by_degree(g: Graph, fraction: float, mode: str, seed=None) -> set[int]:
    """Pick ceil(fraction*n) nodes by extreme degree.

    Nodes are taken greedily from the top (mode="highest") or bottom
    (mode="lowest") of the degree ordering; when the boundary degree class
    overflows the quota, its members are sampled uniformly with the seed.
    """
    if g.n == 0:
        raise ConfigurationError("cannot select nodes from an empty graph")
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError("fraction must be in (0,1]")
    if mode not in ("highest", "lowest"):
        raise ConfigurationError(f"mode must be 'highest' or 'lowest', got {mode!r}")
    rng = as_generator(seed)
    quota = math.ceil(fraction * g.n)
    deg = g.degrees
    levels = sorted(set(deg.tolist()), reverse=(mode == "highest"))
    chosen: set[int] = set()
    for level in levels:
        members = sorted(np.flatnonzero(deg == level).tolist())
        room = quota - len(chosen)
        if room <= 0:
            break
        if len(members) <= room:
            chosen.update(members)
        else:
            picked = rng.choice(len(members), size=room, replace=False)
            chosen.update(members[i] for i in sorted(picked.tolist()))
    return chosen


def intercommunity_edge_counts(g: Graph) -> np.ndarray:
    """B x B symmetric matrix of edge counts between blocks (diagonal = intra-block)."""
    if g.blocks is None:
        raise UsageError("intercommunity_edge_counts requires a graph with block labels")
    b = int(g.blocks.max()) + 1 if g.n else 0
    counts = np.zeros((b, b), dtype=np.int64)
    for u, v in g.edges:
        a, c = int(g.blocks[u]), int(g.blocks[v])
        counts[a, c] += 1
        if a != c:
            counts[c, a] += 1
    return counts


@dataclass(frozen=True)
class ComponentSummary:
    component_count: int
    largest_size: int
    connected: bool


def connectivity_report(g: Graph) -> ComponentSummary:
    """Connected-component summary via union-find."""
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.edges:
        ru, rv = find(int(u)), find(int(v))
        if ru != rv:
            parent[ru] = rv
    roots = [find(i) for i in range(g.n)]
    sizes = {}
    for r in roots:
        sizes[r] = sizes.get(r, 0) + 1
    count = len(sizes)
    largest = max(sizes.values()) if sizes else 0
    return ComponentSummary(component_count=count, largest_size=largest, connected=count == 1)


def save_edges(g: Graph, path) -> None:
    """Write the text edge-list format: header line, then one `u v w` line per edge."""
    blocks = ",".join(str(int(b)) for b in g.blocks) if g.blocks is not None else "none"
    lines = [f"# n={g.n} blocks={blocks}"]
    for (u, v), w in zip(g.edges, g.weights):
        lines.append(f"{u} {v} {float(w)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_edges(path) -> Graph:
    """Read a graph written by save_edges."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise LoadError(f"{path}: missing `# n=... blocks=...` header line")
    header = lines[0].lstrip("#").split()
    fields = dict(part.split("=", 1) for part in header)
    n = int(fields["n"])
    blocks = None
    if fields.get("blocks", "none") != "none":
        blocks = np.array([int(x) for x in fields["blocks"].split(",")], dtype=np.int64)
    pairs, weights = [], []
    for ln in lines[1:]:
        u, v, w = ln.split()
        pairs.append((int(u), int(v)))
        weights.append(float(w))
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    weights_arr = np.array(weights, dtype=np.float64) if weights else None
    return Graph(n=n, edges=edges, weights=weights_arr, blocks=blocks)


@dataclass
class TopologyConfig:
    """Validated parameters for one of the three generator families."""

    kind: str                       # "er" | "ba" | "sbm"
    n: int = None
    p: float = None                 # er only
    m: int = None                   # ba only
    block_sizes: list = None        # sbm only
    p_matrix: list = None           # sbm only
    seed: int = None                # used when generating outside an experiment run

    _REQUIRED = {"er": ("n", "p"), "ba": ("n", "m"), "sbm": ("block_sizes", "p_matrix")}

    def __post_init__(self):
        self.kind = str(self.kind).lower()
        if self.kind not in self._REQUIRED:
            raise ConfigurationError(f"topology.kind must be one of er/ba/sbm, got {self.kind!r}")
        required = self._REQUIRED[self.kind]
        for name in required:
            if getattr(self, name) is None:
                raise ConfigurationError(f"topology.{name} is required for kind={self.kind}")
        for name in ("p", "m", "block_sizes", "p_matrix", "n"):
            if name not in required and name != "n" and getattr(self, name) is not None:
                raise ConfigurationError(f"topology.{name} is not a parameter of kind={self.kind}")
        if self.kind == "sbm":
            if self.n is not None and self.n != sum(self.block_sizes):
                raise ConfigurationError("topology.n must equal the sum of block_sizes")
            self.n = sum(self.block_sizes)
        if self.n is None or self.n < 1:
            raise ConfigurationError("topology.n must be at least 1")
        if self.kind == "er" and not 0.0 <= self.p <= 1.0:
            raise ConfigurationError("p must be in [0,1]")
        if self.kind == "ba" and not 1 <= self.m < self.n:
            raise ConfigurationError("topology.m must satisfy 1 <= m < n")


def build_graph(cfg: TopologyConfig, seed=None) -> Graph:
    """Generate the graph described by cfg; seed overrides cfg.seed when given."""
    rng = as_generator(seed if seed is not None else cfg.seed)
    if cfg.kind == "er":
        return gen_erdos_renyi(cfg.n, cfg.p, rng)
    if cfg.kind == "ba":
        return gen_barabasi_albert(cfg.n, cfg.m, rng)
    return gen_sbm(cfg.block_sizes, cfg.p_matrix, rng)
