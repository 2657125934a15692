"""Simple undirected graphs on vertices 0..n-1.

Immutable, hashable, no self loops, no multi-edges.  Provides the two
operations the measurement calculus needs: local complementation and
vertex deletion (with index compaction), plus a plain text format used
by the command line tools.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


def _norm_edge(a: int, b: int) -> tuple[int, int]:
    if a == b:
        raise ValueError(f"self loop at vertex {a}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        for a, b in self.edges:
            if not (0 <= a < b < self.n):
                raise ValueError(f"edge ({a}, {b}) invalid for n={self.n}")

    @staticmethod
    def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        return Graph(n, frozenset(_norm_edge(a, b) for a, b in edges))

    @staticmethod
    def empty(n: int) -> "Graph":
        return Graph(n, frozenset())

    def has_edge(self, a: int, b: int) -> bool:
        return _norm_edge(a, b) in self.edges

    def neighbors(self, a: int) -> frozenset[int]:
        out = set()
        for u, v in self.edges:
            if u == a:
                out.add(v)
            elif v == a:
                out.add(u)
        return frozenset(out)

    def adjacency_mask(self, a: int) -> int:
        """Neighborhood of ``a`` as a bitmask."""
        m = 0
        for b in self.neighbors(a):
            m |= 1 << b
        return m

    def local_complement(self, a: int) -> "Graph":
        """Complement the subgraph induced on the neighborhood of ``a``."""
        nbrs = sorted(self.neighbors(a))
        toggled = set(self.edges)
        for i, u in enumerate(nbrs):
            for v in nbrs[i + 1:]:
                e = (u, v)
                if e in toggled:
                    toggled.remove(e)
                else:
                    toggled.add(e)
        return Graph(self.n, frozenset(toggled))

    def removed(self, a: int) -> "Graph":
        """Delete vertex ``a``; vertices above shift down by one."""
        if not 0 <= a < self.n:
            raise ValueError(f"vertex {a} out of range")

        def shift(v: int) -> int:
            return v - 1 if v > a else v

        kept = frozenset(
            (shift(u), shift(v)) for u, v in self.edges if a not in (u, v)
        )
        return Graph(self.n - 1, kept)

    def relabeled(self, perm: dict[int, int]) -> "Graph":
        """Apply a vertex permutation old -> new."""
        if sorted(perm) != list(range(self.n)) or sorted(perm.values()) != list(range(self.n)):
            raise ValueError("not a permutation of the vertex set")
        return Graph.from_edges(self.n, ((perm[u], perm[v]) for u, v in self.edges))

    def to_text(self) -> str:
        lines = [str(self.n)]
        lines.extend(f"{a} {b}" for a, b in sorted(self.edges))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "Graph":
        rows = [ln for ln in (s.strip() for s in text.splitlines()) if ln and not ln.startswith("#")]
        if not rows:
            raise ValueError("empty graph description")
        n = int(rows[0])
        edges = []
        for ln in rows[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"bad edge line {ln!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return Graph.from_edges(n, edges)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={sorted(self.edges)})"


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def star_graph(n: int, center: int = 0) -> Graph:
    return Graph.from_edges(n, ((center, v) for v in range(n) if v != center))


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))
