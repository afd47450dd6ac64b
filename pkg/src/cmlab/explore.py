"""Breadth-first exploration of realized graphs and component geometry.

The exploration replays the uniform-pairing process against a fixed mate map
(vertices FIFO, half-edges of a vertex in index order), which is
distributionally identical to pairing on the fly, and records the walk of
active half-edges together with its exact drift and conditional-variance
decomposition.  Geometry statistics (diameter, neighborhood masses) use plain
BFS with self-loops and multi-edges handled by multiplicity.
"""

from __future__ import annotations

import io
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .degrees import Exponents
from .graph import HalfEdgeGraph, remove_hubs

__all__ = [
    "ExplorationTrace",
    "ComponentSummary",
    "ComponentGeometry",
    "MassProfile",
    "DiscoveryDiagnostic",
    "component_geometry",
    "explore_component",
    "components",
    "component_diameter",
    "bfs_distances",
    "neighborhood_size",
    "mass_profile",
    "hub_mass_statistic",
    "hub_removed_diameter",
    "rescaled_walk",
    "hitting_time",
    "discovery_diagnostic",
    "trace_to_csv",
    "mass_profile_to_csv",
]


# ---------------------------------------------------------------------------
# Exploration walk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExplorationTrace:
    """Per-step record of the breadth-first exploration from one start vertex.

    walk[l] is the number of active half-edges after l steps (walk[0] equals
    the start degree); drift/martingale/quad_var are the exact decomposition
    walk = walk[0] + martingale + drift computed from the revealed
    information only.  hit_zero_at, when the walk is absorbed, equals the
    number of edges of the explored component.
    """

    start: int
    walk: np.ndarray
    discovered: tuple[tuple[int, int, int], ...]  # (step, vertex, degree)
    drift: np.ndarray
    martingale: np.ndarray
    quad_var: np.ndarray
    hit_zero_at: int | None

    @property
    def steps(self) -> int:
        return self.walk.size - 1


def explore_component(g: HalfEdgeGraph, start: int) -> ExplorationTrace:
    """Run the exploration from ``start`` against the graph's mate map.

    Deterministic given the graph: the pairing randomness is already baked
    into the mate involution, so no extra seed is consumed.
    """
    if not (0 <= start < g.n):
        raise ValueError("invalid start vertex")
    deg = g.degrees
    mate = g.mate
    owner = g.half_edge_owner
    indptr = g.indptr
    ell = g.ell

    # running sums over undiscovered vertices for the exact drift/variance
    deg_f = deg.astype(np.float64)
    sum2 = float((deg_f**2).sum())
    sum3 = float((deg_f**3).sum())

    discovered_mask = np.zeros(g.n, dtype=bool)
    killed = np.zeros(ell, dtype=bool)

    def discover(v: int):
        nonlocal sum2, sum3
        discovered_mask[v] = True
        dv = float(deg[v])
        sum2 -= dv * dv
        sum3 -= dv * dv * dv

    discover(start)
    s = int(deg[start])
    walk = [s]
    drift = [0.0]
    quad_var = [0.0]
    discovered: list[tuple[int, int, int]] = []
    queue: deque[int] = deque()
    if deg[start] > 0:
        queue.append(start)

    step = 0
    hit_zero_at = 0 if s == 0 else None
    a_run = 0.0
    qv_run = 0.0
    while queue:
        v = queue.popleft()
        for h in range(int(indptr[v]), int(indptr[v + 1])):
            if killed[h]:
                continue
            step += 1
            denom = ell - 2 * step + 1
            mean = sum2 / denom
            a_run += mean - 2.0
            qv_run += sum3 / denom - mean * mean

            f = int(mate[h])
            killed[h] = True
            killed[f] = True
            u = int(owner[f])
            if not discovered_mask[u]:
                discover(u)
                d_new = int(deg[u])
                discovered.append((step, u, d_new))
                s += d_new - 2
                if d_new > 1:
                    queue.append(u)
            else:
                s -= 2
            walk.append(s)
            drift.append(a_run)
            quad_var.append(qv_run)
            if s == 0 and hit_zero_at is None:
                hit_zero_at = step

    walk_arr = np.array(walk, dtype=np.int64)
    drift_arr = np.array(drift, dtype=np.float64)
    mart_arr = walk_arr.astype(np.float64) - walk_arr[0] - drift_arr
    return ExplorationTrace(
        start=start,
        walk=walk_arr,
        discovered=tuple(discovered),
        drift=drift_arr,
        martingale=mart_arr,
        quad_var=np.array(quad_var, dtype=np.float64),
        hit_zero_at=hit_zero_at,
    )


def rescaled_walk(trace: ExplorationTrace, exp: Exponents, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Time-space rescaling of the walk: values n**(-alpha) S(floor(t n**rho)).

    The returned grid has step n**(-rho), so entry k is just the k-th walk
    value rescaled.
    """
    t = np.arange(trace.walk.size, dtype=np.float64) * float(n) ** (-exp.rho)
    vals = trace.walk.astype(np.float64) * float(n) ** (-exp.alpha)
    return t, vals


def hitting_time(series: Sequence[float], u: float) -> int | None:
    """First index at which the series is <= u, or None if it never is."""
    arr = np.asarray(series, dtype=np.float64)
    idx = np.nonzero(arr <= u)[0]
    return int(idx[0]) if idx.size else None


@dataclass(frozen=True)
class DiscoveryDiagnostic:
    steps: np.ndarray
    gaps: np.ndarray  # discovered-vertex count minus step count, per step
    max_abs_gap: int


def discovery_diagnostic(trace: ExplorationTrace) -> DiscoveryDiagnostic:
    """Gap between the number of discovered vertices and the step count.

    Counts the start vertex as discovered at step 0; on trees the gap stays
    at 1 because every step reveals a new vertex.
    """
    t = trace.steps
    if t == 0:
        return DiscoveryDiagnostic(steps=np.empty(0, dtype=np.int64),
                                   gaps=np.empty(0, dtype=np.int64), max_abs_gap=0)
    found = np.zeros(t + 1, dtype=np.int64)
    for step, _v, _d in trace.discovered:
        found[step] += 1
    cum = 1 + np.cumsum(found[1:])  # includes the start vertex
    steps = np.arange(1, t + 1, dtype=np.int64)
    gaps = cum - steps
    return DiscoveryDiagnostic(steps=steps, gaps=gaps,
                               max_abs_gap=int(np.abs(gaps).max()))


def trace_to_csv(trace: ExplorationTrace) -> str:
    """CSV export with columns step,S,A,M,QV,discovered_vertex (1-based, blank if none)."""
    by_step = {step: v for step, v, _d in trace.discovered}
    buf = io.StringIO()
    buf.write("step,S,A,M,QV,discovered_vertex\n")
    for l in range(trace.walk.size):
        v = by_step.get(l)
        buf.write(f"{l},{trace.walk[l]},{trace.drift[l]:.12g},"
                  f"{trace.martingale[l]:.12g},{trace.quad_var[l]:.12g},"
                  f"{'' if v is None else v + 1}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Components
# ---------------------------------------------------------------------------

@dataclass
class ComponentSummary:
    """One connected component; rank is 1-based after sorting by size.

    ``edges`` counts multiplicity (a self-loop is one edge); ``diameter`` is
    filled in lazily by component_diameter because it costs an all-sources
    BFS.
    """

    rank: int
    vertices: int
    edges: int
    surplus: int
    members: tuple[int, ...]
    diameter: int | None = None


def _adjacency_lists(g: HalfEdgeGraph) -> list[list[int]]:
    nbr = g.adjacency()
    indptr = g.indptr
    return [nbr[indptr[v]:indptr[v + 1]].tolist() for v in range(g.n)]


def components(g: HalfEdgeGraph) -> list[ComponentSummary]:
    """All connected components, largest first; ties break on smallest member id."""
    adj = _adjacency_lists(g)
    seen = np.zeros(g.n, dtype=bool)
    comps: list[list[int]] = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        members = [s]
        q = deque([s])
        while q:
            v = q.popleft()
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    members.append(u)
                    q.append(u)
        comps.append(members)
    comps.sort(key=lambda m: (-len(m), min(m)))
    out = []
    for rank, members in enumerate(comps, start=1):
        members_sorted = tuple(sorted(members))
        edges = int(sum(g.degrees[v] for v in members_sorted)) // 2
        out.append(ComponentSummary(
            rank=rank,
            vertices=len(members_sorted),
            edges=edges,
            surplus=edges - len(members_sorted) + 1,
            members=members_sorted,
        ))
    return out


def _local_adjacency(g: HalfEdgeGraph, members: Sequence[int]) -> list[list[int]]:
    local = {v: i for i, v in enumerate(members)}
    nbr = g.adjacency()
    indptr = g.indptr
    return [[local[int(u)] for u in nbr[indptr[v]:indptr[v + 1]]] for v in members]


def _eccentricity_and_balls(adj: list[list[int]], source: int,
                            radii: Sequence[int]) -> tuple[int, list[int]]:
    """One BFS: eccentricity of source plus closed-ball sizes at given radii."""
    m = len(adj)
    dist = [-1] * m
    dist[source] = 0
    q = deque([source])
    level_counts = [1]
    while q:
        v = q.popleft()
        dv = dist[v]
        for u in adj[v]:
            if dist[u] < 0:
                du = dv + 1
                dist[u] = du
                if du == len(level_counts):
                    level_counts.append(0)
                level_counts[du] += 1
                q.append(u)
    ecc = len(level_counts) - 1
    cum = np.cumsum(level_counts)
    balls = [int(cum[min(r, ecc)]) if r >= 0 else 0 for r in radii]
    return ecc, balls


def component_diameter(g: HalfEdgeGraph, comp: ComponentSummary) -> int:
    """Exact diameter by all-sources BFS; caches the result on the summary."""
    if comp.diameter is not None:
        return comp.diameter
    adj = _local_adjacency(g, comp.members)
    diam = 0
    for s in range(len(adj)):
        ecc, _ = _eccentricity_and_balls(adj, s, ())
        if ecc > diam:
            diam = ecc
    comp.diameter = diam
    return diam


def bfs_distances(g: HalfEdgeGraph, v: int) -> dict[int, int]:
    """Hop distances from v to every reachable vertex (unreachable ones absent)."""
    if not (0 <= v < g.n):
        raise ValueError("invalid vertex")
    nbr = g.adjacency()
    indptr = g.indptr
    dist = {v: 0}
    q = deque([v])
    while q:
        x = q.popleft()
        dx = dist[x]
        for u in nbr[indptr[x]:indptr[x + 1]]:
            u = int(u)
            if u not in dist:
                dist[u] = dx + 1
                q.append(u)
    return dist


def _radius(delta: float, exp: Exponents, n: int) -> int:
    return int(np.floor(delta * float(n) ** exp.eta))


def neighborhood_size(g: HalfEdgeGraph, v: int, delta: float, exp: Exponents) -> int:
    """Number of vertices within graph distance floor(delta * n**eta) of v."""
    if delta < 0:
        raise ValueError("need delta >= 0")
    r = _radius(delta, exp, g.n)
    nbr = g.adjacency()
    indptr = g.indptr
    dist = {v: 0}
    q = deque([v])
    while q:
        x = q.popleft()
        dx = dist[x]
        if dx >= r:
            continue
        for u in nbr[indptr[x]:indptr[x + 1]]:
            u = int(u)
            if u not in dist:
                dist[u] = dx + 1
                q.append(u)
    return len(dist)


@dataclass(frozen=True)
class MassProfile:
    """Smallest rescaled neighborhood mass over a component, per radius delta."""

    rank: int
    delta_grid: tuple[float, ...]
    values: tuple[float, ...]          # n**(-rho) * min ball size
    argmin_vertices: tuple[int, ...]
    exact: bool = True


def mass_profile(g: HalfEdgeGraph, comp: ComponentSummary, delta_grid: Sequence[float],
                 exp: Exponents, sample_sources: int | None = None,
                 seed: int = 0) -> MassProfile:
    """inf over component members of n**(-rho) |N_v(delta)| for each delta.

    Exact by default (one truncated BFS per member).  When ``sample_sources``
    is given, only that many uniformly chosen members are scanned and the
    result is flagged as a sampled upper bound on the true infimum.
    """
    if comp.vertices == 0:
        raise ValueError("component is empty")
    deltas = [float(x) for x in delta_grid]
    radii = [_radius(x, exp, g.n) for x in deltas]
    adj = _local_adjacency(g, comp.members)
    sources = range(len(adj))
    exact = True
    if sample_sources is not None and sample_sources < len(adj):
        rng = np.random.default_rng(seed)
        sources = rng.choice(len(adj), size=sample_sources, replace=False).tolist()
        exact = False
    best = [None] * len(deltas)
    argmin = [comp.members[0]] * len(deltas)
    for s in sources:
        _, balls = _eccentricity_and_balls(adj, s, radii)
        for k, b in enumerate(balls):
            if best[k] is None or b < best[k]:
                best[k] = b
                argmin[k] = comp.members[s]
    scale = float(g.n) ** (-exp.rho)
    return MassProfile(
        rank=comp.rank,
        delta_grid=tuple(deltas),
        values=tuple(float(b) * scale for b in best),
        argmin_vertices=tuple(argmin),
        exact=exact,
    )


def mass_profile_to_csv(profile: MassProfile) -> str:
    buf = io.StringIO()
    buf.write("delta,value,argmin_vertex\n")
    for d, v, a in zip(profile.delta_grid, profile.values, profile.argmin_vertices):
        buf.write(f"{d:.12g},{v:.12g},{a + 1}\n")
    return buf.getvalue()


@dataclass(frozen=True)
class ComponentGeometry:
    diameter: int
    mass: MassProfile
    radius_vertex: int | None
    radius: int | None


def component_geometry(g: HalfEdgeGraph, comp: ComponentSummary,
                       delta_grid: Sequence[float], exp: Exponents,
                       radius_vertex: int | None = None,
                       mass_sources: int | None = None,
                       seed: int = 0) -> ComponentGeometry:
    """Diameter, mass profile, and one vertex's radius in a single BFS sweep.

    The diameter is always exact (every member is a BFS source); the mass
    infimum is restricted to ``mass_sources`` sampled members when given,
    matching mass_profile's sampled mode.  ``radius_vertex`` must belong to
    the component.
    """
    deltas = [float(x) for x in delta_grid]
    radii = [_radius(x, exp, g.n) for x in deltas]
    adj = _local_adjacency(g, comp.members)
    member_index = {v: i for i, v in enumerate(comp.members)}
    mass_set = None
    exact = True
    if mass_sources is not None and mass_sources < len(adj):
        rng = np.random.default_rng(seed)
        mass_set = set(rng.choice(len(adj), size=mass_sources, replace=False).tolist())
        exact = False
    rv_local = None
    if radius_vertex is not None:
        rv_local = member_index[radius_vertex]
    diam = 0
    radius = None
    best = [None] * len(deltas)
    argmin = [comp.members[0]] * len(deltas)
    for s in range(len(adj)):
        ecc, balls = _eccentricity_and_balls(adj, s, radii)
        if ecc > diam:
            diam = ecc
        if s == rv_local:
            radius = ecc
        if mass_set is None or s in mass_set:
            for k, b in enumerate(balls):
                if best[k] is None or b < best[k]:
                    best[k] = b
                    argmin[k] = comp.members[s]
    comp.diameter = diam
    scale = float(g.n) ** (-exp.rho)
    profile = MassProfile(
        rank=comp.rank,
        delta_grid=tuple(deltas),
        values=tuple(float(b) * scale for b in best),
        argmin_vertices=tuple(argmin),
        exact=exact,
    )
    return ComponentGeometry(diameter=diam, mass=profile,
                             radius_vertex=radius_vertex, radius=radius)


def hub_mass_statistic(g: HalfEdgeGraph, i: int, delta: float, exp: Exponents,
                       theta_i: float) -> dict:
    """Neighborhood mass of hub i (1-based) against the threshold theta_i * delta * n**rho."""
    if not (1 <= i <= g.n):
        raise ValueError("hub index out of range")
    mass = neighborhood_size(g, i - 1, delta, exp)
    threshold = theta_i * delta * float(g.n) ** exp.rho
    return {"hub": i, "mass": mass, "threshold": threshold, "below": mass <= threshold}


def hub_removed_diameter(g: HalfEdgeGraph, K: int) -> int:
    """Largest component diameter after deleting the K largest-degree vertices."""
    stripped = remove_hubs(g, K)
    best = 0
    for comp in components(stripped):
        if comp.vertices <= best:  # diameter < vertices, so skip hopeless ones
            continue
        diam = component_diameter(stripped, comp)
        if diam > best:
            best = diam
    return best
