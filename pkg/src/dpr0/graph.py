"""Weighted graphs, per-entry weight bounds, random generation and file I/O."""

from __future__ import annotations

import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ArgumentError, ParseError, ValidationError


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Node count plus an n x n nonnegative weight matrix.

    Directed graphs use ``symmetric=False``. Arrays are copied and made
    read-only on construction.
    """

    weights: np.ndarray
    symmetric: bool = True

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise ValidationError("weights must be a nonempty square matrix")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        if np.any(w < 0):
            raise ValidationError("weights must be nonnegative")
        if self.symmetric and not np.array_equal(w, w.T):
            i, j = np.argwhere(w != w.T)[0]
            raise ValidationError(f"asymmetric entry ({i},{j}) in a symmetric graph")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def pattern(self) -> np.ndarray:
        """Boolean mask of strictly positive entries."""
        return self.weights > 0

    @property
    def n_w(self) -> int:
        return int(np.count_nonzero(self.weights > 0))

    def is_connected(self) -> bool:
        adj = self.pattern | self.pattern.T
        np.fill_diagonal(adj, False)
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(adj[u]):
                if v not in seen:
                    seen.add(int(v))
                    queue.append(int(v))
        return len(seen) == self.n

    def with_weights(self, weights) -> "WeightedGraph":
        return WeightedGraph(weights, self.symmetric)


@dataclass(frozen=True, eq=False)
class WeightBounds:
    """Per-entry intervals (lower, upper] known to contain each positive weight."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, up = _frozen(self.lower), _frozen(self.upper)
        if lo.shape != up.shape or lo.ndim != 2:
            raise ValidationError("bound matrices must share one square shape")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up))):
            raise ValidationError("bounds must be finite")
        if np.any(lo < 0):
            raise ValidationError("lower bounds must be nonnegative")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @classmethod
    def uniform(cls, n: int, lower: float, upper: float) -> "WeightBounds":
        return cls(np.full((n, n), float(lower)), np.full((n, n), float(upper)))

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def check(self, graph: WeightedGraph) -> None:
        """Raise ``ValidationError`` unless every positive weight lies in its interval."""
        if self.lower.shape != graph.weights.shape:
            raise ValidationError("bounds shape does not match graph")
        pos = graph.pattern
        w = graph.weights
        if np.any(pos & ~(self.lower < self.upper)):
            raise ValidationError("empty bound interval on a positive weight")
        bad = pos & ~((self.lower < w) & (w <= self.upper))
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise ValidationError(
                f"weight {w[i, j]!r} at ({i},{j}) outside ({self.lower[i, j]!r}, {self.upper[i, j]!r}]"
            )
        if graph.symmetric:
            if not (np.array_equal(self.lower[pos], self.lower.T[pos]) and np.array_equal(self.upper[pos], self.upper.T[pos])):
                raise ValidationError("bounds must be symmetric for a symmetric graph")


def weight_distance(g: WeightedGraph, h: WeightedGraph) -> float:
    """Frobenius distance between two graphs sharing an edge set."""
    if g.n != h.n:
        raise ArgumentError("graphs have different node counts")
    if not np.array_equal(g.pattern, h.pattern):
        raise ArgumentError("graphs have different edge sets")
    return float(np.linalg.norm(g.weights - h.weights))


def is_adjacent(g: WeightedGraph, h: WeightedGraph, k: float) -> bool:
    return weight_distance(g, h) <= k


# -- random generation -------------------------------------------------------


def _wilson_tree(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform spanning tree of the complete graph on n nodes (loop-erased walks)."""
    in_tree = [False] * n
    nxt = [-1] * n
    root = int(rng.integers(n))
    in_tree[root] = True
    for start in range(n):
        u = start
        while not in_tree[u]:
            v = int(rng.integers(n - 1))
            nxt[u] = v if v < u else v + 1  # uniform neighbour != u
            u = nxt[u]
        # overwriting nxt during the walk erases loops implicitly
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    return [(min(u, nxt[u]), max(u, nxt[u])) for u in range(n) if u != root]


def random_connected_graph(n: int, n_e: int, w_max: float, seed_or_rng) -> WeightedGraph:
    """Connected symmetric graph: uniform spanning tree, extra uniform edges, self loops.

    ``n_e`` counts off-diagonal undirected edges. All positive weights are drawn
    uniformly from (0, w_max].
    """
    if n < 2:
        raise ArgumentError("n must be at least 2")
    if not n - 1 <= n_e <= n * (n - 1) // 2:
        raise ArgumentError(f"n_e must lie in [{n - 1}, {n * (n - 1) // 2}]")
    if not w_max > 0:
        raise ArgumentError("w_max must be positive")
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else np.random.default_rng(seed_or_rng)
    edges = set(_wilson_tree(n, rng))
    extra = n_e - len(edges)
    if extra:
        pool = [e for e in combinations(range(n), 2) if e not in edges]
        pick = rng.choice(len(pool), size=extra, replace=False)
        edges.update(pool[i] for i in sorted(pick))
    ordered = sorted(edges) + [(i, i) for i in range(n)]
    w = np.zeros((n, n))
    vals = w_max * (1.0 - rng.random(len(ordered)))
    for (i, j), val in zip(ordered, vals):
        w[i, j] = w[j, i] = val
    return WeightedGraph(w, symmetric=True)


def complete_graph(n: int, weight: float) -> WeightedGraph:
    return WeightedGraph(np.full((n, n), float(weight)), symmetric=True)


def symmetrize_flows(flows) -> np.ndarray:
    """Symmetric transmission matrix from an asymmetric n x n flow matrix.

    Off-diagonals become (f_ij + f_ji)/n; each diagonal entry is the node's
    net-flow imbalance |row sum - column sum| / n.
    """
    f = np.asarray(flows, dtype=float)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValidationError("flow matrix must be square")
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise ValidationError("flows must be finite and nonnegative")
    n = f.shape[0]
    b = (f + f.T) / n
    np.fill_diagonal(b, np.abs(f.sum(axis=1) - f.sum(axis=0)) / n)
    return b


# -- file formats ------------------------------------------------------------


@dataclass
class GraphFile:
    graph: WeightedGraph
    bounds: WeightBounds
    global_bounds: tuple[float, float] | None = field(default=None)


def _num(tok: str, line: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", line) from None
    if not math.isfinite(val):
        raise ParseError(f"non-finite value {tok!r}", line)
    return val


def _index(tok: str, n: int, line: int) -> int:
    try:
        i = int(tok)
    except ValueError:
        raise ParseError(f"bad node index {tok!r}", line) from None
    if not 0 <= i < n:
        raise ParseError(f"node index {i} out of range for n={n}", line)
    return i


def _parse_csv(text: str) -> GraphFile:
    n = None
    symmetric = True
    glob = None
    rows = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = [t.strip() for t in line.split(",")]
        head = tok[0].lower()
        if head == "n":
            if len(tok) != 2:
                raise ParseError("expected 'n,<count>'", lineno)
            n = int(_num(tok[1], lineno))
            if n < 1:
                raise ParseError("n must be positive", lineno)
        elif head == "bounds":
            if len(tok) != 3:
                raise ParseError("expected 'bounds,<lower>,<upper>'", lineno)
            glob = (_num(tok[1], lineno), _num(tok[2], lineno))
        elif head == "symmetric":
            if len(tok) != 2 or tok[1].lower() not in ("true", "false"):
                raise ParseError("expected 'symmetric,true|false'", lineno)
            symmetric = tok[1].lower() == "true"
        else:
            if n is None:
                raise ParseError("edge row before 'n' header", lineno)
            if len(tok) not in (3, 5):
                raise ParseError("expected 'i,j,w' or 'i,j,w,lower,upper'", lineno)
            i, j = _index(tok[0], n, lineno), _index(tok[1], n, lineno)
            vals = [_num(t, lineno) for t in tok[2:]]
            rows.append((lineno, i, j, vals))
    if n is None:
        raise ParseError("missing 'n' header")
    w = np.zeros((n, n))
    lo = np.zeros((n, n))
    up = np.zeros((n, n))
    if glob is not None:
        lo[:] = glob[0]
        up[:] = glob[1]
    seen = set()
    for lineno, i, j, vals in rows:
        if symmetric and i > j:
            raise ParseError("symmetric files list each edge once with i <= j", lineno)
        if (i, j) in seen:
            raise ParseError(f"duplicate entry ({i},{j})", lineno)
        seen.add((i, j))
        if len(vals) == 3:
            l_ij, u_ij = vals[1], vals[2]
        elif glob is not None:
            l_ij, u_ij = glob
        else:
            raise ParseError("no bounds for entry and no global 'bounds' header", lineno)
        cells = [(i, j), (j, i)] if symmetric else [(i, j)]
        for a, b in cells:
            w[a, b], lo[a, b], up[a, b] = vals[0], l_ij, u_ij
    return GraphFile(WeightedGraph(w, symmetric), WeightBounds(lo, up), glob)


def _parse_json(text: str) -> GraphFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    try:
        n = int(doc["n"])
        w = np.array(doc["weights"], dtype=float)
        lo = np.array(doc["lower"], dtype=float)
        up = np.array(doc["upper"], dtype=float)
        symmetric = bool(doc.get("symmetric", True))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed dense JSON graph: {exc}") from None
    if w.shape != (n, n):
        raise ParseError(f"weights must be {n}x{n}")
    return GraphFile(WeightedGraph(w, symmetric), WeightBounds(lo, up))


def parse_graph(text: str, fmt: str = "csv", require_edges: bool = True) -> GraphFile:
    """Parse an edge-list CSV or dense JSON document and validate its bounds."""
    if fmt == "csv":
        gf = _parse_csv(text)
    elif fmt == "json":
        gf = _parse_json(text)
    else:
        raise ArgumentError(f"unknown graph format {fmt!r}")
    gf.bounds.check(gf.graph)
    if require_edges and gf.graph.n_w == 0:
        raise ValidationError("graph has no positive weights to privatize")
    return gf


def serialize_graph(graph: WeightedGraph, bounds: WeightBounds, fmt: str = "csv", global_bounds=None) -> str:
    """Inverse of :func:`parse_graph`; floats use shortest round-trip repr."""
    n = graph.n
    if fmt == "json":
        doc = {
            "n": n,
            "symmetric": graph.symmetric,
            "weights": graph.weights.tolist(),
            "lower": bounds.lower.tolist(),
            "upper": bounds.upper.tolist(),
        }
        return json.dumps(doc) + "\n"
    if fmt != "csv":
        raise ArgumentError(f"unknown graph format {fmt!r}")
    out = [f"n,{n}"]
    if not graph.symmetric:
        out.append("symmetric,false")
    if global_bounds is not None:
        out.append(f"bounds,{float(global_bounds[0])!r},{float(global_bounds[1])!r}")
    for i, j in np.argwhere(graph.pattern):
        if graph.symmetric and i > j:
            continue
        row = f"{i},{j},{float(graph.weights[i, j])!r}"
        lo, up = float(bounds.lower[i, j]), float(bounds.upper[i, j])
        if global_bounds is None or (lo, up) != tuple(map(float, global_bounds)):
            row += f",{lo!r},{up!r}"
        out.append(row)
    return "\n".join(out) + "\n"


def read_graph(path, require_edges: bool = True) -> GraphFile:
    path = str(path)
    fmt = "json" if path.endswith(".json") else "csv"
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ArgumentError(f"cannot read graph file {path}: {exc.strerror}") from None
    return parse_graph(text, fmt, require_edges)
