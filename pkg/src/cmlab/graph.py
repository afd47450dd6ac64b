"""Configuration-model multigraphs: half-edge pairing and degree percolation.

Vertices are 0-based; vertex v owns the contiguous block of half-edge ids
[indptr[v], indptr[v+1]).  Pairing stores a fixed-point-free involution
``mate`` over half-edge ids, so self-loops and parallel edges are first-class.
Serialized edge lists are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .degrees import DegreeSequence, Exponents, criticality

__all__ = [
    "HalfEdgeGraph",
    "PercolationOutcome",
    "SimpleSample",
    "RejectionFailureError",
    "pair_half_edges",
    "is_simple",
    "sample_simple",
    "critical_p",
    "percolate_degrees",
    "realize_percolated",
    "remove_hubs",
]


@dataclass
class HalfEdgeGraph:
    """Realized multigraph: per-vertex degrees plus a perfect matching on half-edges."""

    degrees: np.ndarray  # per-vertex, not necessarily sorted
    mate: np.ndarray     # involution on half-edge ids, mate[h] != h

    _indptr: np.ndarray | None = field(default=None, repr=False, compare=False)
    _owner: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.degrees = np.asarray(self.degrees, dtype=np.int64)
        self.mate = np.asarray(self.mate, dtype=np.int64)
        if self.mate.size != self.degrees.sum():
            raise ValueError("mate array must cover exactly sum(degrees) half-edges")

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    @property
    def ell(self) -> int:
        return int(self.mate.size)

    @property
    def edge_count(self) -> int:
        return self.ell // 2

    @property
    def indptr(self) -> np.ndarray:
        if self._indptr is None:
            ptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(self.degrees, out=ptr[1:])
            self._indptr = ptr
        return self._indptr

    @property
    def half_edge_owner(self) -> np.ndarray:
        if self._owner is None:
            self._owner = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        return self._owner

    def neighbors(self, v: int) -> np.ndarray:
        """Neighbor multiset of v (self-loops contribute v twice)."""
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.half_edge_owner[self.mate[lo:hi]]

    def adjacency(self) -> np.ndarray:
        """CSR-style neighbor array aligned with half-edge ids (use with indptr)."""
        return self.half_edge_owner[self.mate]

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (u, v) with u <= v, multiplicities kept."""
        owner = self.half_edge_owner
        out = []
        for h in range(self.ell):
            m = int(self.mate[h])
            if h < m:
                u, v = int(owner[h]), int(owner[m])
                out.append((u, v) if u <= v else (v, u))
        return out

    # -- serialization: "# n=<n> m=<edges>" then 1-based "u v" per line ------

    def to_text(self) -> str:
        lines = [f"# n={self.n} m={self.edge_count}"]
        lines.extend(f"{u + 1} {v + 1}" for u, v in self.edges())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "HalfEdgeGraph":
        n = None
        pairs: list[tuple[int, int]] = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("n="):
                        n = int(tok[2:])
                continue
            u, v = line.split()
            pairs.append((int(u) - 1, int(v) - 1))
        if n is None:
            n = 1 + max((max(u, v) for u, v in pairs), default=-1)
        return cls.from_edges(n, pairs)

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "HalfEdgeGraph":
        """Build the half-edge representation of an explicit edge multiset."""
        pairs = list(pairs)
        deg = np.zeros(n, dtype=np.int64)
        for u, v in pairs:
            deg[u] += 1
            deg[v] += 1
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=ptr[1:])
        nxt = ptr[:-1].copy()
        mate = np.empty(int(deg.sum()), dtype=np.int64)
        for u, v in pairs:
            hu = int(nxt[u]); nxt[u] += 1
            hv = int(nxt[v]); nxt[v] += 1
            mate[hu] = hv
            mate[hv] = hu
        return cls(degrees=deg, mate=mate)


def _pair_uniform(degrees: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sequential uniform pairing: lowest unpaired half-edge gets a uniform mate.

    Swap-removal keeps the alive set contiguous, so each draw is O(1); the
    resulting matching is uniform over all perfect matchings.
    """
    ell = int(degrees.sum())
    if ell % 2 == 1:
        raise ValueError(f"total degree must be even, got {ell}")
    mate = [-1] * ell
    arr = list(range(ell))
    pos = list(range(ell))
    alive = ell
    # one uniform double per pairing; floor(u * alive) is unbiased to ~2^-53
    us = rng.random(ell // 2)
    t = 0
    for h in range(ell):
        if mate[h] >= 0:
            continue
        ph = pos[h]
        last = arr[alive - 1]
        arr[ph] = last
        pos[last] = ph
        alive -= 1
        k = int(us[t] * alive)
        t += 1
        f = arr[k]
        last = arr[alive - 1]
        arr[k] = last
        pos[last] = k
        alive -= 1
        mate[h] = f
        mate[f] = h
    return np.array(mate, dtype=np.int64)


def pair_half_edges(d: DegreeSequence, seed: int) -> HalfEdgeGraph:
    """Realize the configuration model on d by uniform half-edge pairing."""
    rng = np.random.default_rng(seed)
    mate = _pair_uniform(d.degrees, rng)
    return HalfEdgeGraph(degrees=d.degrees.copy(), mate=mate)


def is_simple(g: HalfEdgeGraph) -> bool:
    """True iff the realization has no self-loop and no parallel edge."""
    owner = g.half_edge_owner
    mates = owner[g.mate]
    if (mates == owner).any():
        return False
    h = np.arange(g.ell)
    sel = h < g.mate
    u = owner[sel]
    v = mates[sel]
    eid = np.minimum(u, v) * g.n + np.maximum(u, v)
    return np.unique(eid).size == eid.size


class RejectionFailureError(RuntimeError):
    """sample_simple exhausted its attempt budget; carries the attempt count."""

    def __init__(self, attempts: int):
        super().__init__(f"no simple realization found in {attempts} attempts")
        self.attempts = attempts


@dataclass(frozen=True)
class SimpleSample:
    graph: HalfEdgeGraph
    attempts: int


def sample_simple(d: DegreeSequence, seed: int, max_attempts: int = 1000) -> SimpleSample:
    """Rejection-sample a uniform simple graph with degree sequence d."""
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        mate = _pair_uniform(d.degrees, rng)
        g = HalfEdgeGraph(degrees=d.degrees.copy(), mate=mate)
        if is_simple(g):
            return SimpleSample(graph=g, attempts=attempt)
    raise RejectionFailureError(max_attempts)


def critical_p(d: DegreeSequence, exp: Exponents) -> float:
    """Critical-window retention probability 1/nu_n + lam * n**(-eta), clamped to [0, 1]."""
    nu = criticality(d)
    if nu <= 1.0:
        raise ValueError(
            f"percolation window needs a supercritical base graph (nu_n > 1), got nu_n = {nu:.6g}"
        )
    p = 1.0 / nu + exp.lam * float(d.n) ** (-exp.eta)
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class PercolationOutcome:
    """Degree-level percolation: which half-edges survive and the thinned degrees.

    ``percolated_degrees`` stays aligned with the original vertex ids (so
    d_i^p <= d_i holds entrywise); use sorted_degrees() for consumers that
    want a plain degree sequence.
    """

    retained_count: int
    percolated_degrees: np.ndarray
    retention_indicator: np.ndarray
    p: float

    def sorted_degrees(self) -> DegreeSequence:
        return DegreeSequence.from_degrees(self.percolated_degrees)


def percolate_degrees(d: DegreeSequence, p: float, seed: int) -> PercolationOutcome:
    """Keep R ~ Bin(ell/2, p) edges' worth of half-edges, uniformly chosen.

    Samples R first, then a uniform subset of 2R half-edges; each vertex's
    percolated degree is the number of its half-edges retained, so the
    percolated total is exactly 2R.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError("retention probability must lie in [0, 1]")
    ell = d.ell
    if ell % 2 == 1:
        raise ValueError(f"total degree must be even, got {ell}")
    rng = np.random.default_rng(seed)
    r = int(rng.binomial(ell // 2, p))
    keep = np.zeros(ell, dtype=bool)
    if r > 0:
        chosen = rng.choice(ell, size=2 * r, replace=False)
        keep[chosen] = True
    owner = np.repeat(np.arange(d.n, dtype=np.int64), d.degrees)
    dp = np.bincount(owner[keep], minlength=d.n).astype(np.int64)
    return PercolationOutcome(retained_count=r, percolated_degrees=dp,
                              retention_indicator=keep, p=p)


def realize_percolated(outcome: PercolationOutcome, seed: int) -> HalfEdgeGraph:
    """Pair the percolated degrees uniformly; vertex ids are preserved."""
    rng = np.random.default_rng(seed)
    mate = _pair_uniform(outcome.percolated_degrees, rng)
    return HalfEdgeGraph(degrees=outcome.percolated_degrees.copy(), mate=mate)


def remove_hubs(g: HalfEdgeGraph, K: int) -> HalfEdgeGraph:
    """Drop every edge touching vertices 0..K-1; the vertex set is unchanged.

    Vertices are assumed pre-sorted by degree, so 0..K-1 are the K largest.
    """
    if not (0 <= K <= g.n):
        raise ValueError("need 0 <= K <= n")
    if K == 0:
        return HalfEdgeGraph(degrees=g.degrees.copy(), mate=g.mate.copy())
    owner = g.half_edge_owner
    kept_pairs = []
    for h in range(g.ell):
        m = int(g.mate[h])
        if h < m and owner[h] >= K and owner[m] >= K:
            kept_pairs.append((int(owner[h]), int(owner[m])))
    return HalfEdgeGraph.from_edges(g.n, kept_pairs)
