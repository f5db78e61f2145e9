"""Reorder an unordered codebook into a short open path with TSP heuristics.

These give the "VQ + TSP" baseline: train a plain VQ codebook, then impose
an order afterwards. All heuristics are deterministic; distance ties are
broken by the lower index (pair).
"""

from collections import defaultdict

import numpy as np

from ._arrays import as_codebook
from .errors import ConfigError, PermutationError

HEURISTICS = ("nearest_neighbor", "greedy", "christofides_like", "identity")
ALIASES = {"nn": "nearest_neighbor", "christofides": "christofides_like"}


def distance_matrix(points) -> np.ndarray:
    p = np.asarray(points, dtype=np.float64)
    diff = p[:, None, :] - p[None, :, :]
    return np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))


def validate_order(order, n: int) -> np.ndarray:
    perm = np.asarray(order)
    if perm.ndim != 1 or len(perm) != n or not np.issubdtype(perm.dtype, np.integer):
        raise PermutationError(f"order must be {n} integer indices")
    if not np.array_equal(np.sort(perm), np.arange(n)):
        raise PermutationError("order is not a permutation of the codeword indices")
    return perm.astype(np.intp)


def path_length(codebook, order=None) -> float:
    """Sum of Euclidean distances between consecutive codewords in ``order``."""
    c = as_codebook(codebook, min_size=1)
    if order is not None:
        c = c[validate_order(order, len(c))]
    return float(np.linalg.norm(np.diff(c, axis=0), axis=1).sum())


def _nearest_neighbor(dist):
    # every start vertex at once: row s is the tour grown from vertex s
    n = len(dist)
    starts = np.arange(n)
    visited = np.zeros((n, n), dtype=bool)
    visited[starts, starts] = True
    paths = np.empty((n, n), dtype=np.intp)
    paths[:, 0] = starts
    lengths = np.zeros(n)
    cur = starts
    for step in range(1, n):
        d = np.where(visited, np.inf, dist[cur])
        nxt = np.argmin(d, axis=1)
        lengths += d[starts, nxt]
        visited[starts, nxt] = True
        paths[:, step] = nxt
        cur = nxt
    # np.argmin picks the lowest start among equal lengths
    return paths[int(np.argmin(lengths))]


def _sorted_edges(dist):
    i, j = np.triu_indices(len(dist), k=1)
    w = dist[i, j]
    order = np.lexsort((j, i, w))
    return i[order], j[order]


def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def _walk_path(adj, n):
    ends = [v for v in range(n) if len(adj[v]) < 2]
    prev, cur = -1, min(ends)
    out = [cur]
    while len(out) < n:
        nxt = next(u for u in adj[cur] if u != prev)
        prev, cur = cur, nxt
        out.append(cur)
    return np.array(out, dtype=np.intp)


def _greedy(dist):
    n = len(dist)
    deg = np.zeros(n, dtype=int)
    parent = list(range(n))
    adj = defaultdict(list)
    added = 0
    for a, b in zip(*_sorted_edges(dist)):
        a, b = int(a), int(b)
        if deg[a] >= 2 or deg[b] >= 2:
            continue
        ra, rb = _find(parent, a), _find(parent, b)
        if ra == rb:
            continue
        parent[ra] = rb
        deg[a] += 1
        deg[b] += 1
        adj[a].append(b)
        adj[b].append(a)
        added += 1
        if added == n - 1:
            break
    return _walk_path(adj, n)


def _prim(dist):
    n = len(dist)
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    link = np.full(n, -1)
    best[0] = 0.0
    edges = []
    for _ in range(n):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        in_tree[v] = True
        if link[v] >= 0:
            edges.append((int(link[v]), v))
        closer = (~in_tree) & (dist[v] < best)
        best[closer] = dist[v][closer]
        link[closer] = v
    return edges


def _greedy_matching(dist, odd):
    odd = np.asarray(sorted(odd))
    sub = dist[np.ix_(odd, odd)]
    matched = set()
    pairs = []
    for a, b in zip(*_sorted_edges(sub)):
        if a in matched or b in matched:
            continue
        matched.update((a, b))
        pairs.append((int(odd[a]), int(odd[b])))
    return pairs


def _euler_circuit(n, edges, start=0):
    # Hierholzer on a multigraph; neighbours visited in ascending order
    adj = defaultdict(list)
    for k, (a, b) in enumerate(edges):
        adj[a].append((b, k))
        adj[b].append((a, k))
    for v in adj:
        adj[v].sort(reverse=True)
    used = [False] * len(edges)
    stack, circuit = [start], []
    while stack:
        v = stack[-1]
        while adj[v] and used[adj[v][-1][1]]:
            adj[v].pop()
        if adj[v]:
            u, k = adj[v].pop()
            used[k] = True
            stack.append(u)
        else:
            circuit.append(stack.pop())
    return circuit[::-1]


def _christofides_like(dist):
    n = len(dist)
    mst = _prim(dist)
    deg = np.zeros(n, dtype=int)
    for a, b in mst:
        deg[a] += 1
        deg[b] += 1
    odd = [v for v in range(n) if deg[v] % 2]
    circuit = _euler_circuit(n, mst + _greedy_matching(dist, odd))
    seen = set()
    tour = [v for v in circuit if not (v in seen or seen.add(v))]
    # open the tour at its longest edge (closing edge included)
    nxt = np.roll(tour, -1)
    cut = int(np.argmax(dist[tour, nxt]))
    return np.array(tour[cut + 1:] + tour[:cut + 1], dtype=np.intp)


def order_path(codebook, heuristic: str = "nearest_neighbor") -> np.ndarray:
    """Permutation of codeword indices forming a short open path.

    ``nearest_neighbor`` grows a path from every start vertex and keeps the
    shortest. ``greedy`` adds edges shortest-first unless they would create a
    degree-3 vertex or a cycle. ``christofides_like`` shortcuts an Euler
    circuit of MST + greedy odd-vertex matching (not the exact minimum
    matching) and cuts the longest tour edge. ``identity`` keeps the order.
    """
    heuristic = ALIASES.get(heuristic, heuristic)
    if heuristic not in HEURISTICS:
        raise ConfigError(f"unknown heuristic {heuristic!r}; expected one of {HEURISTICS}")
    c = as_codebook(codebook)
    n = len(c)
    if heuristic == "identity" or n == 2:
        return np.arange(n, dtype=np.intp)
    dist = distance_matrix(c)
    if heuristic == "nearest_neighbor":
        return _nearest_neighbor(dist)
    if heuristic == "greedy":
        return _greedy(dist)
    return _christofides_like(dist)
