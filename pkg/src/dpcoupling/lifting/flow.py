"""Maximum flow on small dense bipartite networks (Edmonds-Karp).

Capacities are floats; residual capacities below ``tol`` count as saturated.
"""

from __future__ import annotations

from collections import deque
from typing import Dict, List, Sequence, Tuple

INF = float("inf")


def bipartite_max_flow(left: Sequence[float], right: Sequence[float],
                       edges: Sequence[Tuple[int, int]], tol: float = 1e-15
                       ) -> Tuple[float, Dict[Tuple[int, int], float]]:
    """Max flow source -> left[i] -> right[j] -> sink along ``edges``.

    Returns the flow value and the flow on each (i, j) edge.
    """
    nl, nr = len(left), len(right)
    src, snk = nl + nr, nl + nr + 1
    n = nl + nr + 2
    cap: List[Dict[int, float]] = [dict() for _ in range(n)]

    def add(u, v, c):
        cap[u][v] = cap[u].get(v, 0.0) + c
        cap[v].setdefault(u, 0.0)

    for i, w in enumerate(left):
        add(src, i, w)
    for j, w in enumerate(right):
        add(nl + j, snk, w)
    for i, j in edges:
        add(i, nl + j, INF)
    original = {(i, j): INF for i, j in edges}

    total = 0.0
    while True:
        parent = [-1] * n
        parent[src] = src
        queue = deque([src])
        while queue and parent[snk] < 0:
            u = queue.popleft()
            for v, c in cap[u].items():
                if c > tol and parent[v] < 0:
                    parent[v] = u
                    queue.append(v)
        if parent[snk] < 0:
            break
        push = INF
        v = snk
        while v != src:
            u = parent[v]
            push = min(push, cap[u][v])
            v = u
        v = snk
        while v != src:
            u = parent[v]
            cap[u][v] -= push
            cap[v][u] += push
            v = u
        total += push

    flows = {}
    for i, j in original:
        f = cap[nl + j].get(i, 0.0)  # reverse residual equals the flow pushed
        if f > 0:
            flows[(i, j)] = f
    return total, flows
