"""Hyperbolic filling of a sampled metric space.

Vertices are pairs (net point, level); two same-level vertices are joined
when their lambda-scaled balls share a sample-point witness, and each vertex
at level n >= 1 has a unique parent at level n-1 (nearest coarser net point,
ties broken by ascending point index).  D1 adds the wider family of vertical
edges B(x, a^-n) meet B(y, a^-m) != empty; D2 keeps only parent edges
vertically.  Ball intersection is always decided by an explicit witness in
the sample, never by a distance shortcut, because the two differ in
non-geodesic spaces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import shortest_path

from ._errors import (
    IdenticalPoints,
    LevelOutOfRange,
    ParameterViolation,
)
from .spaces import MetricSpace, NetHierarchy

__all__ = [
    "Vertex",
    "Filling",
    "CenterSet",
    "FillingReport",
    "GromovRecord",
    "build_filling",
    "children",
    "descendants",
    "graph_distance",
    "verify_filling_lemma",
    "gromov_product_check",
    "center_set",
    "genealogy_ray",
    "export_dot_level",
    "export_dot_d2",
    "filling_to_json",
]


@dataclass(frozen=True, order=True)
class Vertex:
    net_index: int
    level: int

    def __repr__(self):
        return f"({self.net_index},{self.level})"


@dataclass(frozen=True)
class CenterSet:
    level: int
    members: frozenset[Vertex]


class Filling:
    """Leveled graph over a net hierarchy.  Immutable after construction."""

    def __init__(self, hierarchy: NetHierarchy, lam: float,
                 horiz: list[tuple[np.ndarray, np.ndarray]],
                 parent_slot: list[np.ndarray],
                 d1_vert: list[tuple[np.ndarray, np.ndarray]]):
        self.hierarchy = hierarchy
        self.space: MetricSpace = hierarchy.space
        self.a = hierarchy.a
        self.lam = float(lam)
        self.levels = hierarchy.levels
        self.horiz = horiz            # per level: CSR (indptr, indices) on slots
        self.parent_slot = parent_slot  # parent_slot[k] for k >= 1
        self.d1_vert = d1_vert        # per k: (up_slots at k, down_slots at k+1)
        self.depth = hierarchy.depth
        self.offsets = np.concatenate(
            [[0], np.cumsum([lev.size for lev in self.levels])])
        self.n_vertices = int(self.offsets[-1])
        self.root = Vertex(int(self.levels[0][0]), 0)
        self.max_horizontal_degree = tuple(
            int(np.diff(ind).max()) if ind.size > 1 and np.diff(ind).size else 0
            for ind, _ in horiz)
        self._children = None
        self._d1 = None
        self._d2 = None

    # -- vertex addressing ----------------------------------------------------

    def level_size(self, k: int) -> int:
        return self.levels[k].size

    def slot_of(self, v: Vertex) -> int:
        lev = self.levels[v.level]
        s = int(np.searchsorted(lev, v.net_index))
        if s >= lev.size or lev[s] != v.net_index:
            raise LevelOutOfRange(f"{v} is not a filling vertex")
        return s

    def vertex(self, level: int, slot: int) -> Vertex:
        return Vertex(int(self.levels[level][slot]), level)

    def gid(self, level: int, slot: int) -> int:
        return int(self.offsets[level]) + slot

    def vertex_of_gid(self, g: int) -> Vertex:
        level = int(np.searchsorted(self.offsets, g, side="right")) - 1
        return self.vertex(level, g - int(self.offsets[level]))

    def check_level(self, k: int) -> None:
        if not 0 <= k <= self.depth:
            raise LevelOutOfRange(f"level {k} outside 0..{self.depth}")

    def parent(self, v: Vertex) -> Vertex:
        if v.level == 0:
            raise LevelOutOfRange("root has no parent")
        s = self.slot_of(v)
        return self.vertex(v.level - 1, int(self.parent_slot[v.level][s]))

    # -- derived structure ------------------------------------------------------

    @property
    def children_index(self):
        """Per level k: (order, indptr) grouping level-(k+1) slots by parent."""
        if self._children is None:
            out = []
            for k in range(self.depth):
                ps = self.parent_slot[k + 1]
                order = np.argsort(ps, kind="stable")
                counts = np.bincount(ps, minlength=self.level_size(k))
                indptr = np.concatenate([[0], np.cumsum(counts)])
                out.append((order.astype(np.int64), indptr.astype(np.int64)))
            self._children = out
        return self._children

    def child_slots(self, k: int, slot: int) -> np.ndarray:
        order, indptr = self.children_index[k]
        return order[indptr[slot]:indptr[slot + 1]]

    def horiz_neighbors(self, k: int, slot: int) -> np.ndarray:
        indptr, indices = self.horiz[k]
        return indices[indptr[slot]:indptr[slot + 1]]

    def level_points(self, k: int) -> np.ndarray:
        return self.levels[k]

    def level_csr(self, k: int) -> sparse.csr_matrix:
        indptr, indices = self.horiz[k]
        n = self.level_size(k)
        return sparse.csr_matrix(
            (np.ones(indices.size), indices, indptr), shape=(n, n))

    def _vertical_pairs_d2(self):
        rows, cols = [], []
        for k in range(1, self.depth + 1):
            ps = self.parent_slot[k]
            rows.append(self.offsets[k] + np.arange(ps.size))
            cols.append(self.offsets[k - 1] + ps)
        if not rows:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        return np.concatenate(rows), np.concatenate(cols)

    def _horizontal_pairs(self):
        rows, cols = [], []
        for k in range(self.depth + 1):
            indptr, indices = self.horiz[k]
            deg = np.diff(indptr)
            src = np.repeat(np.arange(self.level_size(k)), deg)
            rows.append(self.offsets[k] + src)
            cols.append(self.offsets[k] + indices)
        return np.concatenate(rows), np.concatenate(cols)

    def _graph(self, which: str) -> sparse.csr_matrix:
        hr, hc = self._horizontal_pairs()
        if which == "D2":
            vr, vc = self._vertical_pairs_d2()
        else:
            vr, vc = [], []
            for k in range(self.depth):
                up, down = self.d1_vert[k]
                vr.append(self.offsets[k] + up)
                vc.append(self.offsets[k + 1] + down)
            vr = np.concatenate(vr) if vr else np.empty(0, np.int64)
            vc = np.concatenate(vc) if vc else np.empty(0, np.int64)
        rows = np.concatenate([hr, vr, vc])
        cols = np.concatenate([hc, vc, vr])
        data = np.ones(rows.size)
        n = self.n_vertices
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def d1_csr(self) -> sparse.csr_matrix:
        if self._d1 is None:
            self._d1 = self._graph("D1")
        return self._d1

    def d2_csr(self) -> sparse.csr_matrix:
        if self._d2 is None:
            self._d2 = self._graph("D2")
        return self._d2

    def delta_hyperbolicity_bound(self) -> float:
        """Parameter-only hyperbolicity bound recorded as a diagnostic."""
        a, lam = self.a, self.lam
        return 2.0 * np.log(8 * lam * a ** 3.5 / ((a - 1) * (lam - 1))) / np.log(a)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _horizontal_edges(space: MetricSpace, pts: np.ndarray, r: float):
    """CSR adjacency on slots of `pts` for the witness relation at radius r."""
    k = pts.size
    if k < 2:
        return np.zeros(k + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    cand = space.neighbor_pairs(pts, 2.0 * r * (1.0 + 1e-9))
    if cand.shape[0]:
        good = space.witness_mask(pts[cand[:, 0]], pts[cand[:, 1]], r)
        cand = cand[good]
    rows = np.concatenate([cand[:, 0], cand[:, 1]])
    cols = np.concatenate([cand[:, 1], cand[:, 0]])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(k + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, cols.astype(np.int64)


def _vertical_d1_edges(space: MetricSpace, up_pts: np.ndarray,
                       down_pts: np.ndarray, r_up: float, r_down: float):
    """All (up slot, down slot) pairs whose balls B(x, r_up), B(y, r_down)
    share a witness.  Relies on nestedness: up_pts is a subset of down_pts."""
    down_lookup = {int(p): s for s, p in enumerate(down_pts)}
    up_in_down = np.array([down_lookup[int(p)] for p in up_pts], dtype=np.int64)

    cand = space.neighbor_pairs(down_pts, (r_up + r_down) * (1.0 + 1e-9))
    up_slot_of_down = np.full(down_pts.size, -1, dtype=np.int64)
    up_slot_of_down[up_in_down] = np.arange(up_pts.size)

    ups, downs = [], []
    # Self edges (x, k) -- (x, k+1): x itself is always a witness.
    ups.append(np.arange(up_pts.size, dtype=np.int64))
    downs.append(up_in_down)
    if cand.shape[0]:
        for a_col, b_col in ((0, 1), (1, 0)):
            sel = up_slot_of_down[cand[:, a_col]] >= 0
            sub = cand[sel]
            if not sub.shape[0]:
                continue
            xs = down_pts[sub[:, a_col]]
            ys = down_pts[sub[:, b_col]]
            good = space.witness_mask(xs, ys, r_up, r_down)
            sub = sub[good]
            ups.append(up_slot_of_down[sub[:, a_col]])
            downs.append(sub[:, b_col].astype(np.int64))
    up_arr = np.concatenate(ups)
    down_arr = np.concatenate(downs)
    key = up_arr * down_pts.size + down_arr
    _, uniq = np.unique(key, return_index=True)
    return up_arr[uniq], down_arr[uniq]


def build_filling(hierarchy: NetHierarchy, lam: float) -> Filling:
    """Assemble the filling; requires a >= lambda >= 6."""
    a = hierarchy.a
    if not (a >= lam >= 6):
        raise ParameterViolation(
            f"filling needs a >= lambda >= 6, got a={a}, lambda={lam}")
    space = hierarchy.space
    depth = hierarchy.depth
    horiz = []
    for k in range(depth + 1):
        r = lam * a ** (-k)
        horiz.append(_horizontal_edges(space, hierarchy[k], r))
    parent_slot: list[np.ndarray] = [np.empty(0, dtype=np.int64)]
    for k in range(1, depth + 1):
        coarse = hierarchy[k - 1]
        slots = np.empty(hierarchy[k].size, dtype=np.int64)
        for s, p in enumerate(hierarchy[k]):
            d = space.dist_to(int(p), coarse)
            slots[s] = int(np.argmin(d))  # first minimum = lowest net index
        parent_slot.append(slots)
    d1_vert = []
    for k in range(depth):
        up, down = _vertical_d1_edges(
            space, hierarchy[k], hierarchy[k + 1], a ** (-k), a ** (-(k + 1)))
        d1_vert.append((up, down))
    return Filling(hierarchy, lam, horiz, parent_slot, d1_vert)


# ---------------------------------------------------------------------------
# Structure queries
# ---------------------------------------------------------------------------


def children(filling: Filling, v: Vertex) -> set[Vertex]:
    """Level-(n+1) vertices whose parent is v; nonempty for n < depth."""
    if v.level >= filling.depth:
        raise LevelOutOfRange(f"{v} is at the deepest level")
    s = filling.slot_of(v)
    return {filling.vertex(v.level + 1, int(c))
            for c in filling.child_slots(v.level, s)}


def descendants(filling: Filling, v: Vertex, n: int) -> set[Vertex]:
    """Generation-n descendants of v (n > level of v)."""
    if not v.level < n <= filling.depth:
        raise LevelOutOfRange(f"generation {n} invalid for {v}")
    slots = np.array([filling.slot_of(v)], dtype=np.int64)
    for k in range(v.level, n):
        order, indptr = filling.children_index[k]
        slots = np.concatenate([order[indptr[s]:indptr[s + 1]] for s in slots]) \
            if slots.size else slots
    return {filling.vertex(n, int(s)) for s in slots}


def graph_distance(filling: Filling, v: Vertex, w: Vertex, which: str = "D2") -> int:
    """BFS distance in the chosen edge set (genealogies make S connected)."""
    if which not in ("D1", "D2"):
        raise ValueError("which must be 'D1' or 'D2'")
    if v == w:
        return 0
    g = filling.d1_csr() if which == "D1" else filling.d2_csr()
    src = filling.gid(v.level, filling.slot_of(v))
    dst = filling.gid(w.level, filling.slot_of(w))
    d = shortest_path(g, method="D", unweighted=True, indices=src)
    val = d[dst]
    assert np.isfinite(val), "filling graph must be connected through the root"
    return int(val)


# ---------------------------------------------------------------------------
# Lemma verification
# ---------------------------------------------------------------------------


@dataclass
class FillingReport:
    checks: dict = field(default_factory=dict)
    max_horizontal_degree: tuple = ()
    delta_bound: float = 0.0

    @property
    def ok(self) -> bool:
        return all(r["pass"] for r in self.checks.values())

    def add(self, name: str, passed: bool, witnesses: list, scanned: int):
        self.checks[name] = {
            "pass": bool(passed),
            "witnesses": witnesses[:10],
            "scanned": int(scanned),
        }


def _d2_leq2_same_level_pairs(filling: Filling, k: int):
    """Unordered slot pairs at level k with D2 distance <= 2."""
    n = filling.level_size(k)
    adj = filling.level_csr(k)
    two = adj @ adj + adj
    two = sparse.triu(two.tocsr(), k=1).tocoo()
    pairs = set(zip(two.row.tolist(), two.col.tolist()))
    if k >= 1:
        order, indptr = filling.children_index[k - 1]
        for s in range(len(indptr) - 1):
            sibs = order[indptr[s]:indptr[s + 1]]
            for i in range(sibs.size):
                for j in range(i + 1, sibs.size):
                    x, y = int(sibs[i]), int(sibs[j])
                    pairs.add((min(x, y), max(x, y)))
    if k + 1 <= filling.depth:
        pass  # a level-(k+1) midpoint would need two parents; impossible
    return pairs


def verify_filling_lemma(filling: Filling, pair_budget: int = 400_000) -> FillingReport:
    """Exhaustive structural checks of the filling's basic distance lemmas.

    (a) child/descendant distance bounds, (b) neighbor children have neighbor
    parents, (c) close children have neighbor parents, (d) D1 <= D2 <= 2 D1,
    (e) mixed-neighbor closure.  Failures are reported with witnesses rather
    than raised.
    """
    space = filling.space
    a, lam = filling.a, filling.lam
    rep = FillingReport(max_horizontal_degree=filling.max_horizontal_degree,
                        delta_bound=filling.delta_hyperbolicity_bound())

    # (a) parent distance and descendant spread
    bad, scanned = [], 0
    for k in range(1, filling.depth + 1):
        ps = filling.parent_slot[k]
        child_pts = filling.levels[k]
        parent_pts = filling.levels[k - 1][ps]
        for s in range(child_pts.size):
            scanned += 1
            if not space.dist(int(parent_pts[s]), int(child_pts[s])) < a ** (-(k - 1)):
                bad.append((filling.vertex(k, s), "parent"))
    for k in range(filling.depth):
        bound = a / (a - 1) * a ** (-k)
        anc = {s: [s] for s in range(filling.level_size(k))}
        frontier = anc
        for m in range(k + 1, filling.depth + 1):
            order, indptr = filling.children_index[m - 1]
            nxt: dict[int, list[int]] = {}
            for root_slot, slots in frontier.items():
                ch = [int(c) for s in slots
                      for c in order[indptr[s]:indptr[s + 1]]]
                nxt[root_slot] = ch
                x = int(filling.levels[k][root_slot])
                for c in ch:
                    scanned += 1
                    if not space.dist(x, int(filling.levels[m][c])) < bound:
                        bad.append((filling.vertex(k, root_slot),
                                    filling.vertex(m, c)))
            frontier = nxt
    rep.add("a_child_descendant_bounds", not bad, bad, scanned)

    # (b) D2 <= 1 and D2 <= 2 children imply adjacent parents
    bad, scanned = [], 0
    for k in range(1, filling.depth + 1):
        ps = filling.parent_slot[k]
        adj_up = filling.level_csr(k - 1)
        indptr, indices = filling.horiz[k]
        for s in range(filling.level_size(k)):
            for t in indices[indptr[s]:indptr[s + 1]]:
                if s < t:
                    scanned += 1
                    pu, pv = int(ps[s]), int(ps[t])
                    if pu != pv and adj_up[pu, pv] == 0:
                        bad.append((filling.vertex(k, s), filling.vertex(k, int(t))))
        for (s, t) in _d2_leq2_same_level_pairs(filling, k):
            scanned += 1
            pu, pv = int(ps[s]), int(ps[t])
            if pu != pv and adj_up[pu, pv] == 0:
                bad.append((filling.vertex(k, s), filling.vertex(k, t), "leq2"))
    rep.add("b_parent_adjacency", not bad, bad, scanned)

    # (c) d(x, y) <= 4 a^-n children imply adjacent parents
    bad, scanned = [], 0
    for k in range(1, filling.depth + 1):
        pts = filling.levels[k]
        thr = np.nextafter(4.0 * a ** (-(k - 1)), np.inf)
        pairs = space.neighbor_pairs(pts, thr)
        if pairs.shape[0] > pair_budget:
            pairs = pairs[:: pairs.shape[0] // pair_budget + 1]
        ps = filling.parent_slot[k]
        adj_up = filling.level_csr(k - 1)
        for s, t in pairs:
            scanned += 1
            pu, pv = int(ps[s]), int(ps[t])
            if pu != pv and adj_up[pu, pv] == 0:
                bad.append((filling.vertex(k, int(s)), filling.vertex(k, int(t))))
    rep.add("c_close_children_parents", not bad, bad, scanned)

    # (d) D1 <= D2 <= 2 D1 (sampled pairs when large)
    bad, scanned = [], 0
    n = filling.n_vertices
    if n <= 2000:
        idx = np.arange(n)
    else:
        idx = np.linspace(0, n - 1, 120, dtype=int)
    d1 = shortest_path(filling.d1_csr(), method="D", unweighted=True, indices=idx)
    d2 = shortest_path(filling.d2_csr(), method="D", unweighted=True, indices=idx)
    sub1 = d1[:, idx]
    sub2 = d2[:, idx]
    viol = ~((sub1 <= sub2 + 1e-9) & (sub2 <= 2 * sub1 + 1e-9))
    scanned = viol.size
    if viol.any():
        where = np.argwhere(viol)[:10]
        bad = [(filling.vertex_of_gid(int(idx[i])), filling.vertex_of_gid(int(idx[j])))
               for i, j in where]
    rep.add("d_metric_comparison", not bad, bad, scanned)

    # (e) D1(u, w) = 1, D2(v, w) = 1 with u, v one level up imply D2(u, v) <= 1
    bad, scanned = [], 0
    for k in range(filling.depth):
        up, down = filling.d1_vert[k]
        ps = filling.parent_slot[k + 1]
        adj = filling.level_csr(k)
        for u_slot, w_slot in zip(up, down):
            scanned += 1
            v_slot = int(ps[w_slot])
            if int(u_slot) != v_slot and adj[int(u_slot), v_slot] == 0:
                bad.append((filling.vertex(k, int(u_slot)),
                            filling.vertex(k + 1, int(w_slot))))
    rep.add("e_mixed_neighbor", not bad, bad, scanned)
    return rep


# ---------------------------------------------------------------------------
# Gromov products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GromovRecord:
    v: Vertex
    w: Vertex
    product: float
    target: float
    slack: float
    passed: bool


def gromov_product_check(filling: Filling, v: Vertex, w: Vertex) -> GromovRecord:
    """Exact Gromov product (v|w) at the root in D1 against the log-distance
    target; the slack must stay below 4 when a >= lam."""
    g = filling.d1_csr()
    root_gid = filling.gid(0, 0)
    vg = filling.gid(v.level, filling.slot_of(v))
    wg = filling.gid(w.level, filling.slot_of(w))
    dv = shortest_path(g, method="D", unweighted=True, indices=vg)
    prod = 0.5 * (dv[root_gid] + _bfs_pair(filling, w, root_gid) - dv[wg])
    a = filling.a
    d = filling.space.dist(v.net_index, w.net_index)
    target = np.log(d + a ** (-v.level) + a ** (-w.level)) / np.log(a)
    slack = abs(prod + target)
    return GromovRecord(v, w, float(prod), float(target), float(slack), slack <= 4.0)


def _bfs_pair(filling: Filling, w: Vertex, target_gid: int) -> float:
    g = filling.d1_csr()
    wg = filling.gid(w.level, filling.slot_of(w))
    d = shortest_path(g, method="D", unweighted=True, indices=wg)
    return float(d[target_gid])


def gromov_exhaustive_slack(filling: Filling, max_level: int) -> float:
    """Max Gromov slack over all vertex pairs at levels <= max_level.

    BFS runs on the full D1 graph so shortest paths may dip below max_level.
    """
    gids = np.concatenate([
        filling.offsets[k] + np.arange(filling.level_size(k))
        for k in range(min(max_level, filling.depth) + 1)]).astype(np.int64)
    g = filling.d1_csr()
    dmat = shortest_path(g, method="D", unweighted=True, indices=gids)
    droot = dmat[:, filling.gid(0, 0)]
    sub = dmat[:, gids]
    prod = 0.5 * (droot[:, None] + droot[None, :] - sub)
    a = filling.a
    worst = 0.0
    pts = np.concatenate([filling.levels[k]
                          for k in range(min(max_level, filling.depth) + 1)])
    lv = np.concatenate([np.full(filling.level_size(k), k)
                         for k in range(min(max_level, filling.depth) + 1)])
    for i in range(gids.size):
        d = filling.space.dist_to(int(pts[i]), pts)
        target = np.log(d + a ** (-float(lv[i])) + a ** (-lv.astype(float))) / np.log(a)
        slack = np.abs(prod[i] + target)
        worst = max(worst, float(slack.max()))
    return worst


# ---------------------------------------------------------------------------
# Centers and rays
# ---------------------------------------------------------------------------


def center_set(filling: Filling, x: int, y: int) -> CenterSet:
    """Deepest-level vertices whose 2 a^-k ball contains both x and y."""
    if x == y:
        raise IdenticalPoints("center set needs two distinct points")
    space = filling.space
    for k in range(filling.depth, -1, -1):
        r = 2.0 * filling.a ** (-k)
        pts = filling.levels[k]
        dx = space.dist_to(x, pts)
        dy = space.dist_to(y, pts)
        hit = np.nonzero((dx < r) & (dy < r))[0]
        if hit.size:
            members = frozenset(filling.vertex(k, int(s)) for s in hit)
            return CenterSet(level=k, members=members)
    raise AssertionError("level 0 ball of radius 2 must contain everything")


def genealogy_ray(filling: Filling, x: int) -> list[Vertex]:
    """Parent chain v_0, ..., v_depth staying within (1 - 1/a)^-1 a^-n of x.

    Back-tracks from the deepest net vertex nearest to x; if the distance
    bound fails at the truncation depth, falls back to scanning genealogies
    of all deep vertices near x.
    """
    space = filling.space
    a = filling.a
    N = filling.depth
    bound = lambda n: (1.0 / (1.0 - 1.0 / a)) * a ** (-n)

    def chain_from(slot: int) -> list[Vertex]:
        slots = [slot]
        for k in range(N, 0, -1):
            slots.append(int(filling.parent_slot[k][slots[-1]]))
        slots.reverse()
        return [filling.vertex(k, s) for k, s in enumerate(slots)]

    def ok(chain: list[Vertex]) -> bool:
        return all(space.dist(x, v.net_index) <= bound(n)
                   for n, v in enumerate(chain))

    deep = filling.levels[N]
    d = space.dist_to(x, deep)
    chain = chain_from(int(np.argmin(d)))
    if ok(chain):
        return chain
    for slot in np.nonzero(d < a ** (-N))[0]:
        chain = chain_from(int(slot))
        if ok(chain):
            return chain
    raise AssertionError("no genealogy ray satisfies the distance bound")


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------


def export_dot_level(filling: Filling, k: int) -> str:
    """GraphViz text for the level-k horizontal graph."""
    filling.check_level(k)
    lines = [f'graph level_{k} {{']
    for s in range(filling.level_size(k)):
        lines.append(f'  "{filling.vertex(k, s)}";')
    indptr, indices = filling.horiz[k]
    for s in range(filling.level_size(k)):
        for t in indices[indptr[s]:indptr[s + 1]]:
            if s < t:
                lines.append(f'  "{filling.vertex(k, s)}" -- "{filling.vertex(k, int(t))}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot_d2(filling: Filling) -> str:
    """GraphViz text for the whole D2 graph (horizontal plus parent edges)."""
    lines = ["graph d2 {"]
    for k in range(filling.depth + 1):
        indptr, indices = filling.horiz[k]
        for s in range(filling.level_size(k)):
            for t in indices[indptr[s]:indptr[s + 1]]:
                if s < t:
                    lines.append(
                        f'  "{filling.vertex(k, s)}" -- "{filling.vertex(k, int(t))}";')
    for k in range(1, filling.depth + 1):
        for s, ps in enumerate(filling.parent_slot[k]):
            lines.append(
                f'  "{filling.vertex(k - 1, int(ps))}" -- "{filling.vertex(k, s)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def filling_to_json(filling: Filling) -> str:
    """Stable JSON dump of the parent map and horizontal adjacency."""
    doc = {
        "a": filling.a,
        "lambda": filling.lam,
        "depth": filling.depth,
        "levels": [lev.tolist() for lev in filling.levels],
        "parents": {
            str(k): filling.parent_slot[k].tolist()
            for k in range(1, filling.depth + 1)
        },
        "horizontal": {
            str(k): [filling.horiz_neighbors(k, s).tolist()
                     for s in range(filling.level_size(k))]
            for k in range(filling.depth + 1)
        },
    }
    return json.dumps(doc, sort_keys=True, indent=1)
