"""Directed weighted graphs: ingestion, dense adjacency, flow pre-processing and
connectivity-preserving edge splits."""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np


class GraphError(ValueError):
    """Invalid graph data (malformed rows, self-loops, duplicates, zero weights)."""


class InfeasibleSplitError(ValueError):
    """The requested split cannot be built under the connectivity constraint."""


@dataclass(frozen=True)
class DirectedGraph:
    """Simple weighted digraph on nodes ``0..n-1``.

    ``src``, ``dst`` and ``weight`` are parallel arrays, one entry per edge.
    ``node_ids`` optionally keeps the original identifiers of an ingested file.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    node_ids: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64).reshape(-1)
        dst = np.asarray(self.dst, dtype=np.int64).reshape(-1)
        weight = np.asarray(self.weight, dtype=np.float64).reshape(-1)
        if not (len(src) == len(dst) == len(weight)):
            raise GraphError("src, dst and weight must have equal length")
        if self.n <= 0:
            raise GraphError("node count must be positive")
        if len(src) and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= self.n):
            raise GraphError("node id out of range")
        if np.any(src == dst):
            raise GraphError(f"self-loop on node {int(src[src == dst][0])}")
        if np.any(weight == 0) or not np.all(np.isfinite(weight)):
            raise GraphError("edge weights must be finite and nonzero")
        keys = src * self.n + dst
        if len(np.unique(keys)) != len(keys):
            raise GraphError("duplicate edge")
        for name, arr in (("src", src), ("dst", dst), ("weight", weight)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, n: int, edges) -> "DirectedGraph":
        edges = list(edges)
        if not edges:
            return cls(n, np.zeros(0), np.zeros(0), np.zeros(0))
        s, d, w = zip(*edges)
        return cls(n, np.array(s), np.array(d), np.array(w, dtype=float))

    @property
    def num_edges(self) -> int:
        return len(self.src)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(s), int(d), float(w)) for s, d, w in zip(self.src, self.dst, self.weight)]

    def subgraph(self, edge_index) -> "DirectedGraph":
        """Same node set, keeping only the edges at ``edge_index``."""
        idx = np.asarray(edge_index, dtype=np.int64)
        return DirectedGraph(self.n, self.src[idx], self.dst[idx], self.weight[idx], self.node_ids)

    def with_weights(self, weight) -> "DirectedGraph":
        return DirectedGraph(self.n, self.src, self.dst, weight, self.node_ids)


class NodeLabels(NamedTuple):
    labels: np.ndarray
    num_classes: int


def make_labels(labels) -> NodeLabels:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or (len(labels) and labels.min() < 0):
        raise GraphError("labels must be a vector of nonnegative class indices")
    return NodeLabels(labels, int(labels.max()) + 1 if len(labels) else 0)


def _is_header(row) -> bool:
    if len(row) != 3:
        return False
    try:
        float(row[2])
    except ValueError:
        return True
    return False


def from_edge_list(path, n_hint: int | None = None, merge_parallel: bool = False) -> DirectedGraph:
    """Read a ``src,dst,weight`` CSV file (optional header line).

    Node ids may be arbitrary strings; they are compacted to dense integers in
    order of first appearance, or in numeric order when every id is a
    nonnegative integer (kept in place when all lie in ``[0, n_hint)``). With ``merge_parallel`` repeated ordered pairs are
    summed instead of rejected, and pairs that sum to zero are dropped.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [c.strip() for c in row]
            if not row or not any(row) or row[0].startswith("#"):
                continue
            if lineno == 1 and _is_header(row):
                continue
            if len(row) != 3:
                raise GraphError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                w = float(row[2])
            except ValueError:
                raise GraphError(f"{path}:{lineno}: weight {row[2]!r} is not a number") from None
            rows.append((lineno, row[0], row[1], w))

    raw = [x for r in rows for x in r[1:3]]
    numeric = all(x.isdigit() for x in raw)
    if numeric and n_hint is not None and all(int(x) < n_hint for x in raw):
        ids = {str(i): i for i in range(n_hint)}
        n = n_hint
    else:
        ids = {}
        for x in (sorted(set(raw), key=int) if numeric else raw):
            ids.setdefault(x, len(ids))
        n = max(len(ids), n_hint or 0)
        for extra in range(len(ids), n):
            ids[f"__isolated_{extra}"] = extra

    merged: dict[tuple[int, int], float] = {}
    for lineno, a, b, w in rows:
        s, d = ids[a], ids[b]
        if s == d:
            raise GraphError(f"{path}:{lineno}: self-loop on node {a!r}")
        if (s, d) in merged:
            if not merge_parallel:
                raise GraphError(f"{path}:{lineno}: duplicate edge ({a!r}, {b!r})")
            merged[(s, d)] += w
            continue
        if w == 0 and not merge_parallel:
            raise GraphError(f"{path}:{lineno}: zero weight")
        merged[(s, d)] = w
    edges = [(s, d, w) for (s, d), w in merged.items() if w != 0]
    node_ids = tuple(sorted(ids, key=ids.get))
    g = DirectedGraph.from_edges(n, edges)
    return DirectedGraph(g.n, g.src, g.dst, g.weight, node_ids)


def write_edge_list(g: DirectedGraph, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "weight"])
        for s, d, x in g.edges():
            w.writerow([s, d, repr(x)])


def write_id_map(g: DirectedGraph, path) -> None:
    ids = g.node_ids or tuple(str(i) for i in range(g.n))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["original_id", "dense_id"])
        for i, name in enumerate(ids):
            w.writerow([name, i])


def read_labels(path, g: DirectedGraph | None = None) -> NodeLabels:
    """Read a ``node_id,class_index`` CSV; ids are mapped through ``g.node_ids`` when present."""
    lookup = {name: i for i, name in enumerate(g.node_ids)} if g is not None and g.node_ids else None
    pairs = []
    with Path(path).open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and not row[1].strip().lstrip("-").isdigit()):
                continue
            node = row[0].strip()
            pairs.append((lookup[node] if lookup else int(node), int(row[1])))
    n = g.n if g is not None else len(pairs)
    labels = np.full(n, -1, dtype=np.int64)
    for i, c in pairs:
        labels[i] = c
    if np.any(labels < 0):
        raise GraphError(f"{path}: labels missing for {int(np.sum(labels < 0))} nodes")
    return make_labels(labels)


def write_labels(labels: NodeLabels, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "class_index"])
        for i, c in enumerate(labels.labels):
            w.writerow([i, int(c)])


def adjacency(g: DirectedGraph) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    A[g.src, g.dst] = g.weight
    return A


def _require_square(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def symmetrize(A: np.ndarray) -> np.ndarray:
    A = _require_square(A)
    # (A + A.T) / 2 computed this way is bit-exactly symmetric.
    return 0.5 * (A + A.T)


def abs_degree(A_s: np.ndarray) -> np.ndarray:
    """Diagonal matrix of absolute row sums of a symmetric matrix."""
    A_s = _require_square(A_s)
    if not np.array_equal(A_s, A_s.T):
        raise ValueError("abs_degree expects a symmetric matrix")
    return np.diag(np.abs(A_s).sum(axis=1))


def flow_preprocess(g: DirectedGraph) -> DirectedGraph:
    """Collapse every digon into one edge carrying the net flow.

    The surviving edge points along the positive net flow; digons whose two
    weights cancel exactly are dropped.
    """
    weights = {(s, d): w for s, d, w in g.edges()}
    out = []
    for (s, d), w in weights.items():
        back = weights.get((d, s))
        if back is None:
            out.append((s, d, w))
            continue
        net = w - back
        if net > 0:
            out.append((s, d, net))
    s, d, w = (list(c) for c in zip(*out)) if out else ([], [], [])
    return DirectedGraph(g.n, s, d, w, g.node_ids)


def undirected_components(n: int, src, dst) -> int:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    m = coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    return connected_components(m, directed=False)[0]


def random_spanning_tree(g: DirectedGraph, rng: np.random.Generator) -> np.ndarray:
    """Edge indices of a spanning tree of the undirected support, grown by BFS
    from a random root with neighbours visited in random order."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.n)]
    for e, (s, d) in enumerate(zip(g.src.tolist(), g.dst.tolist())):
        adj[s].append((d, e))
        adj[d].append((s, e))
    root = int(rng.integers(g.n))
    seen = np.zeros(g.n, dtype=bool)
    seen[root] = True
    tree = []
    queue = deque([root])
    while queue:
        u = queue.popleft()
        nbrs = adj[u]
        for k in rng.permutation(len(nbrs)):
            v, e = nbrs[k]
            if not seen[v]:
                seen[v] = True
                tree.append(e)
                queue.append(v)
    if not seen.all():
        raise InfeasibleSplitError("graph is not connected (undirected support)")
    return np.array(sorted(tree), dtype=np.int64)


class EdgeSplit(NamedTuple):
    """Edge indices into the source graph's edge arrays."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def spanning_tree_split(g: DirectedGraph, test_frac: float, val_frac: float, rng_seed: int) -> EdgeSplit:
    if not (0 <= test_frac and 0 <= val_frac and 0 < test_frac + val_frac < 1):
        raise ValueError("need 0 < test_frac + val_frac < 1 with both fractions nonnegative")
    rng = np.random.default_rng(rng_seed)
    tree = random_spanning_tree(g, rng)
    free = np.setdiff1d(np.arange(g.num_edges), tree)
    n_test = int(round(test_frac * g.num_edges))
    n_val = int(round(val_frac * g.num_edges))
    if n_test + n_val > len(free):
        raise InfeasibleSplitError(
            f"{n_test + n_val} held-out edges requested but only {len(free)} edges lie off the spanning tree"
        )
    free = rng.permutation(free)
    test = np.sort(free[:n_test])
    val = np.sort(free[n_test:n_test + n_val])
    train = np.sort(np.concatenate([tree, free[n_test + n_val:]]))
    return EdgeSplit(train, val, test)
