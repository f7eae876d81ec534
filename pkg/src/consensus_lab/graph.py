"""Weighted undirected communication graphs and their Laplacians.

Agents are indexed from 0 internally. External files (and the helpers that
take ``one_based=True``) use 1-based indices and are converted at the
boundary.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateEdge,
    GraphError,
    IndexOutOfRange,
    NonPositiveWeight,
    SelfLoop,
)

Edge = tuple[int, int, float]


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph; ``edges`` holds each pair once with i < j."""

    n: int
    edges: tuple[Edge, ...]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            a[i, j] = w
            a[j, i] = w
        return a

    def neighbors(self, i: int) -> list[int]:
        out = []
        for p, q, _ in self.edges:
            if p == i:
                out.append(q)
            elif q == i:
                out.append(p)
        return sorted(out)


def build_graph(n: int, edges: Iterable[Sequence], one_based: bool = False) -> Graph:
    """Validate an edge list and return a :class:`Graph`.

    Each edge is ``(i, j)`` or ``(i, j, weight)``; the weight defaults to 1.
    A single agent with no edges is accepted as the trivially connected graph.
    """
    if n < 1:
        raise GraphError(f"graph needs at least one agent, got n={n}")
    offset = 1 if one_based else 0
    seen: set[tuple[int, int]] = set()
    out: list[Edge] = []
    for edge in edges:
        if len(edge) == 2:
            i, j = edge
            w = 1.0
        elif len(edge) == 3:
            i, j, w = edge
        else:
            raise GraphError(f"edge must be (i, j) or (i, j, w), got {edge!r}")
        i, j, w = int(i) - offset, int(j) - offset, float(w)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRange(f"edge {edge!r} has an index outside 0..{n - 1 + offset}")
        if i == j:
            raise SelfLoop(f"self-loop on agent {i + offset}")
        if not w > 0 or not np.isfinite(w):
            raise NonPositiveWeight(f"edge {edge!r} has non-positive weight {w}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdge(f"edge {key[0] + offset}-{key[1] + offset} listed twice")
        seen.add(key)
        out.append((key[0], key[1], w))
    out.sort()
    return Graph(n=n, edges=tuple(out))


def laplacian(g: Graph) -> np.ndarray:
    """Return ``L = Diag(A 1) - A`` as a read-only dense array."""
    a = g.adjacency()
    lap = np.diag(a.sum(axis=1)) - a
    lap.setflags(write=False)
    return lap


def is_connected(g: Graph) -> bool:
    adj: list[list[int]] = [[] for _ in range(g.n)]
    for i, j, w in g.edges:
        if w > 0:
            adj[i].append(j)
            adj[j].append(i)
    seen = [False] * g.n
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return all(seen)


def graph_from_dict(data: dict) -> Graph:
    """Build a graph from the JSON schema ``{"n": int, "edges": [[i, j, w], ...]}`` (1-based)."""
    try:
        n = data["n"]
        edges = data["edges"]
    except (KeyError, TypeError, AttributeError) as exc:
        raise GraphError(f"graph JSON must have keys 'n' and 'edges': {exc}") from None
    if not isinstance(n, int) or isinstance(n, bool):
        raise GraphError(f"'n' must be an integer, got {n!r}")
    if not isinstance(edges, list):
        raise GraphError("'edges' must be a list")
    for e in edges:
        if not isinstance(e, (list, tuple)):
            raise GraphError(f"edge entries must be lists, got {e!r}")
        if len(e) >= 2 and not all(isinstance(v, int) and not isinstance(v, bool) for v in e[:2]):
            raise GraphError(f"edge endpoints must be integers, got {e!r}")
    return build_graph(n, edges, one_based=True)


def graph_to_dict(g: Graph) -> dict:
    return {"n": g.n, "edges": [[i + 1, j + 1, w] for i, j, w in g.edges]}


def load_graph(path: str | Path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: invalid JSON ({exc})") from None
    return graph_from_dict(data)


# Five-agent example network used throughout the experiments.
FIVE_AGENT_EDGES = ((1, 2), (1, 4), (1, 5), (2, 3), (2, 5), (3, 5), (4, 5))


def five_agent_graph() -> Graph:
    return build_graph(5, FIVE_AGENT_EDGES, one_based=True)


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError("a cycle needs at least three agents")
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])
