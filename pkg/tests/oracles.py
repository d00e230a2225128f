"""Independent brute-force oracles used to check the library's algorithms.

Everything here is deliberately naive and written against plain edge lists,
not against the library's own types, so a bug in the package cannot hide
inside its oracle.
"""

from __future__ import annotations

import random


def floyd_warshall_reachability(nodes: list[str], edges: set[tuple[str, str]]) -> set[tuple[str, str]]:
    """All-pairs reachability by cubic Floyd-Warshall over a boolean matrix.

    Returns the set of ordered (source, target) pairs with a directed path
    of length >= 1. Irreflexive unless the graph has a cycle through a node.
    """
    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    reach = [[False] * n for _ in range(n)]
    for a, b in edges:
        reach[index[a]][index[b]] = True
    for k in range(n):
        row_k = reach[k]
        for i in range(n):
            if reach[i][k]:
                row_i = reach[i]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return {(nodes[i], nodes[j]) for i in range(n) for j in range(n) if reach[i][j]}


def all_paths_by_joining(edges: set[tuple[str, str]], min_len: int, max_len: int = 64) -> set[tuple[str, ...]]:
    """Every directed path with min_len..max_len edges, built by repeated joins.

    Level k+1 paths are level k paths extended by one edge; on a DAG this
    terminates because path node counts are bounded by the node count.
    """
    by_tail: dict[str, list[tuple[str, str]]] = {}
    for a, b in edges:
        by_tail.setdefault(a, []).append((a, b))
    level: set[tuple[str, ...]] = {(a, b) for a, b in edges}
    found: set[tuple[str, ...]] = set(level) if min_len <= 1 else set()
    length = 1
    while level and length < max_len:
        nxt: set[tuple[str, ...]] = set()
        for path in level:
            for _, b in by_tail.get(path[-1], []):
                if b in path:
                    continue
                nxt.add(path + (b,))
        length += 1
        if length >= min_len:
            found |= nxt
        level = nxt
    return found


def ancestors_by_bfs(node: str, edges: set[tuple[str, str]]) -> set[str]:
    """Every node reachable from `node` by walking child->parent edges."""
    parents: dict[str, set[str]] = {}
    for a, b in edges:
        parents.setdefault(a, set()).add(b)
    seen: set[str] = set()
    frontier = [node]
    while frontier:
        nxt: list[str] = []
        for cur in frontier:
            for p in parents.get(cur, ()):
                if p not in seen:
                    seen.add(p)
                    nxt.append(p)
        frontier = nxt
    return seen


def undirected_distance(a: str, b: str, nodes: list[str], edges: set[tuple[str, str]]) -> float:
    """Shortest hop count between a and b ignoring direction; inf if disconnected."""
    adj: dict[str, set[str]] = {n: set() for n in nodes}
    for x, y in edges:
        adj[x].add(y)
        adj[y].add(x)
    if a == b:
        return 0
    dist = {a: 0}
    frontier = [a]
    while frontier:
        nxt = []
        for cur in frontier:
            for other in adj[cur]:
                if other not in dist:
                    dist[other] = dist[cur] + 1
                    if other == b:
                        return dist[other]
                    nxt.append(other)
        frontier = nxt
    return float("inf")


def unrelated_pairs_by_enumeration(
    nodes: list[str],
    edges: set[tuple[str, str]],
    same_as: set[frozenset[str]],
    min_distance: int,
) -> set[frozenset[str]]:
    """All unordered pairs with no reachability either way, no same-as link,
    and undirected distance >= min_distance."""
    reach = floyd_warshall_reachability(nodes, edges)
    out: set[frozenset[str]] = set()
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if (a, b) in reach or (b, a) in reach:
                continue
            if frozenset((a, b)) in same_as:
                continue
            if undirected_distance(a, b, nodes, edges) < min_distance:
                continue
            out.add(frozenset((a, b)))
    return out


def random_dag(rng: random.Random, max_nodes: int = 50, edge_prob: float = 0.15) -> tuple[list[str], set[tuple[str, str]]]:
    """Seeded random DAG; edges only point from lower to higher topological rank."""
    n = rng.randint(2, max_nodes)
    nodes = [f"n{i:02d}" for i in range(n)]
    order = nodes[:]
    rng.shuffle(order)
    edges: set[tuple[str, str]] = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.add((order[i], order[j]))
    return nodes, edges
