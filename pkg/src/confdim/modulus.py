"""Combinatorial p-modulus of vertex-weighted path families.

The solver runs constraint generation: keep a small active set of paths,
solve the restricted program (linear program for p = 1, quasi-Newton ascent
on the smooth Lagrangian dual for p > 1, with an exact KKT attempt at
p = 2), then ask a vertex-weighted Dijkstra oracle for a violated path.
When no violation remains the density is rescaled so admissibility is exact,
giving a certified upper bound; the restricted program's value is a lower
bound because dropping constraints can only shrink the infimum.

For 0 < p < 1 the program is not convex: the solver returns the p-mass of
an admissible min-cut style density as an upper bound only and says so in
the result notes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog, minimize
from scipy.sparse.csgraph import maximum_flow

from ._errors import DepthExceeded, HypothesisUnverified, TooLarge
from ._graphs import VertexWeightedGraph, reachable_from
from .filling import Filling, Vertex

__all__ = [
    "PathFamily",
    "Density",
    "ModulusResult",
    "TransferReport",
    "annulus_family",
    "family_from_edges",
    "shortest_violating_path",
    "compute_modulus",
    "brute_force_modulus",
    "transfer_bound_check",
]

EPS_ADM = 1e-9


@dataclass
class PathFamily:
    """All paths in a fixed graph from the source set to the sink set.

    The graph is one horizontal level of a filling (or any test graph);
    adjacency is a symmetric CSR over local vertex ids.
    """

    indptr: np.ndarray
    indices: np.ndarray
    sources: np.ndarray
    sinks: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indptr = np.asarray(self.indptr, dtype=np.int64)
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.sources = np.unique(np.asarray(self.sources, dtype=np.int64))
        self.sinks = np.unique(np.asarray(self.sinks, dtype=np.int64))
        self._vw = None

    @property
    def n(self) -> int:
        return self.indptr.size - 1

    @property
    def n_edges(self) -> int:
        return self.indices.size // 2

    @property
    def vw(self) -> VertexWeightedGraph:
        if self._vw is None:
            self._vw = VertexWeightedGraph(self.indptr, self.indices, self.sources)
        return self._vw

    def is_structurally_empty(self) -> bool:
        if self.sources.size == 0 or self.sinks.size == 0:
            return True
        seen = reachable_from(self.indptr, self.indices, self.sources)
        return not seen[self.sinks].any()


@dataclass
class Density:
    values: np.ndarray


@dataclass
class ModulusResult:
    upper: float
    lower: float
    rho_opt: Density
    iterations: int
    status: str  # Converged | EmptyFamily | IterationLimit
    notes: str = ""
    active_paths: list = field(default_factory=list)


def family_from_edges(n: int, edges, sources, sinks, meta=None) -> PathFamily:
    """Convenience constructor for fixture graphs given an undirected edge list."""
    rows, cols = [], []
    for u, v in edges:
        rows += [u, v]
        cols += [v, u]
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return PathFamily(indptr, cols, np.asarray(sources), np.asarray(sinks),
                      meta or {})


def annulus_family(filling: Filling, v: Vertex, k: int, L: float) -> PathFamily:
    """Crossing family of the annulus around v: paths at level(v) + k that
    start with base point inside B_v and end at distance >= L a^-level(v).

    The graph is restricted to the ball that minimal crossing paths can
    touch; the restriction changes no constraint of the family.
    """
    if L <= 1:
        raise ValueError("annulus parameter L must exceed 1")
    n0 = v.level
    level = n0 + k
    if level > filling.depth:
        raise DepthExceeded(f"level {n0}+{k} exceeds filling depth {filling.depth}")
    space = filling.space
    a = filling.a
    pts = filling.levels[level]
    d = space.dist_to(v.net_index, pts)
    r_src = a ** (-n0)
    r_sink = L * a ** (-n0)
    hop = 2.0 * filling.lam * a ** (-level)
    keep = np.nonzero(d < r_sink + hop)[0]
    old_to_new = np.full(pts.size, -1, dtype=np.int64)
    old_to_new[keep] = np.arange(keep.size)
    indptr, indices = filling.horiz[level]
    new_indptr = [0]
    new_indices = []
    for s in keep:
        nb = indices[indptr[s]:indptr[s + 1]]
        nb = old_to_new[nb]
        nb = nb[nb >= 0]
        new_indices.append(nb)
        new_indptr.append(new_indptr[-1] + nb.size)
    d_keep = d[keep]
    sources = np.nonzero(d_keep < r_src)[0]
    sinks = np.nonzero(d_keep >= r_sink)[0]
    return PathFamily(
        np.asarray(new_indptr, dtype=np.int64),
        np.concatenate(new_indices) if new_indices else np.empty(0, np.int64),
        sources, sinks,
        meta={"v": v, "k": k, "L": L, "level": level,
              "level_slots": filling.levels[level][keep]})


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------


def shortest_violating_path(family: PathFamily, rho) -> np.ndarray | None:
    """Cheapest source-to-sink path under vertex costs rho, or None when
    every path already has rho-length >= 1 - EPS_ADM (or none exists)."""
    vals = rho.values if isinstance(rho, Density) else np.asarray(rho, float)
    if family.sources.size == 0 or family.sinks.size == 0:
        return None
    val, path = family.vw.min_path(vals, family.sinks)
    if path is None or val >= 1.0 - EPS_ADM:
        return None
    return path


def _seed_paths(family: PathFamily, count: int) -> list[np.ndarray]:
    """Roughly vertex-disjoint hop-short paths to prime the active set."""
    paths = []
    blocked = np.zeros(family.n, dtype=bool)
    weights = np.zeros(family.n)
    for _ in range(count):
        weights[:] = 1e-9
        weights[blocked] = np.inf
        val, path = family.vw.min_path(weights, family.sinks)
        if path is None or not np.isfinite(val):
            break
        paths.append(path)
        interior = path[1:-1] if path.size > 2 else path[:0]
        blocked[interior] = True
    return paths


def _min_vertex_cut(family: PathFamily):
    """Exact unit-exponent modulus: the min vertex cut between sources and
    sinks, via max flow on the node-split graph.  Returns (cut size,
    indicator density)."""
    n = family.n
    big = n + 2
    rows, cols, caps = [], [], []

    def add(a, b, c):
        rows.append(a)
        cols.append(b)
        caps.append(c)

    for i in range(n):
        add(i, n + i, 1)  # vertex capacity
    deg = np.diff(family.indptr)
    tails = np.repeat(np.arange(n), deg)
    for u, v in zip(tails, family.indices):
        add(n + int(u), int(v), big)
    S, T = 2 * n, 2 * n + 1
    for s in family.sources:
        add(S, int(s), big)
    for t in family.sinks:
        add(n + int(t), T, big)
    mat = sparse.csr_matrix(
        (np.asarray(caps, dtype=np.int32),
         (np.asarray(rows), np.asarray(cols))),
        shape=(2 * n + 2, 2 * n + 2))
    res = maximum_flow(mat, S, T)
    flow = res.flow
    residual = mat - flow
    residual.data = np.maximum(residual.data, 0)
    # reverse residual arcs exist wherever flow is positive
    back = flow.T.tocsr()
    back.data = np.maximum(back.data, 0)
    reach = np.zeros(2 * n + 2, dtype=bool)
    stack = [S]
    reach[S] = True
    while stack:
        u = stack.pop()
        for g in (residual, back):
            lo, hi = g.indptr[u], g.indptr[u + 1]
            for idx in range(lo, hi):
                v = g.indices[idx]
                if g.data[idx] > 0 and not reach[v]:
                    reach[v] = True
                    stack.append(int(v))
    rho = np.zeros(n)
    rho[reach[:n] & ~reach[n:2 * n]] = 1.0
    return float(res.flow_value), rho


def _dual_value(A, lam, p):
    s = A.T @ lam
    rho = np.power(s / p, 1.0 / (p - 1.0))
    g = lam.sum() - (p - 1.0) * np.power(rho, p).sum()
    return g, rho


def _restricted_kkt_p2(A: sparse.csr_matrix):
    """Active-set equality solve for p = 2; returns None when it fails."""
    m = A.shape[0]
    act = np.arange(m)
    for _ in range(3 * m + 8):
        Aact = A[act]
        G = (Aact @ Aact.T).toarray()
        try:
            lam_act = np.linalg.lstsq(G, 2.0 * np.ones(act.size), rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
        if (lam_act >= -1e-11).all():
            lam = np.zeros(m)
            lam[act] = np.maximum(lam_act, 0.0)
            rho = 0.5 * (A.T @ lam)
            if (A @ rho >= 1.0 - 1e-9).all():
                return np.asarray(rho), lam
            # a dropped constraint is violated: reinstate all and give up
            return None
        act = act[lam_act > -1e-11]
        if act.size == 0:
            return None
    return None


def _restricted_dual(A: sparse.csr_matrix, p: float, lam0: np.ndarray,
                     maxiter: int):
    m = A.shape[0]

    def negg(lam):
        g, rho = _dual_value(A, lam, p)
        grad = 1.0 - A @ rho
        return -g, -grad

    res = minimize(negg, lam0, jac=True, method="L-BFGS-B",
                   bounds=[(0.0, None)] * m,
                   options={"maxiter": maxiter, "ftol": 1e-14, "gtol": 1e-12})
    lam = np.maximum(res.x, 0.0)
    g, rho = _dual_value(A, lam, p)
    return np.asarray(rho), lam, float(g)


def _solve_restricted(paths: list[np.ndarray], n: int, p: float,
                      lam0: np.ndarray, effort: int):
    rows = np.concatenate([np.full(pt.size, i) for i, pt in enumerate(paths)])
    cols = np.concatenate(paths)
    A = sparse.csr_matrix((np.ones(cols.size), (rows, cols)),
                          shape=(len(paths), n))
    A.sum_duplicates()
    A.data[:] = 1.0  # a revisited vertex still pays once
    if p == 2.0:
        got = _restricted_kkt_p2(A)
        if got is not None:
            rho, lam = got
            g, _ = _dual_value(A, lam, p)
            return rho, lam, float(g)
    return _restricted_dual(A, p, lam0, maxiter=effort)


def _violating_batch(family: PathFamily, rho: np.ndarray, batch: int):
    """Up to `batch` interior-disjoint violating paths under rho."""
    out = []
    work = rho.copy()
    for _ in range(batch):
        val, path = family.vw.min_path(work, family.sinks)
        if path is None or val >= 1.0 - EPS_ADM:
            break
        true_val = float(rho[path].sum())
        if true_val < 1.0 - EPS_ADM:
            out.append(path)
        interior = path[1:-1] if path.size > 2 else path
        work[interior] = 10.0  # any path through them stops violating
        if true_val >= 1.0 - EPS_ADM:
            break
    return out


def _certify(family: PathFamily, rho: np.ndarray, p: float):
    """Rescale and clamp so the admissibility oracle returns no violation,
    then report the exact mass."""
    val, _ = family.vw.min_path(rho, family.sinks)
    if not np.isfinite(val) or val <= 0:
        return None
    rho = rho / val
    for _ in range(4):
        val, _ = family.vw.min_path(rho, family.sinks)
        if val >= 1.0 - 1e-13:
            break
        rho = rho / val
    rho = np.minimum(rho, 1.0)
    val, _ = family.vw.min_path(rho, family.sinks)
    if val < 1.0 - EPS_ADM:
        rho = rho / val
        val, _ = family.vw.min_path(rho, family.sinks)
    return rho, float(np.power(rho, p).sum())


def compute_modulus(family: PathFamily, p: float, tol: float = 1e-6,
                    max_iter: int = 200,
                    warm_paths: list[np.ndarray] | None = None) -> ModulusResult:
    """Certified bounds on the p-modulus of the family.

    The returned upper bound is the p-mass of a density that the violating
    path oracle certifies admissible; the lower bound is the value of the
    restricted program over the active paths.  Empty families give exact
    zeros.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    zero = Density(np.zeros(family.n))
    if family.is_structurally_empty():
        return ModulusResult(0.0, 0.0, zero, 0, "EmptyFamily")

    if p < 1.0:
        return _upper_only_small_p(family, p, tol, max_iter)

    if p == 1.0:
        cut, rho = _min_vertex_cut(family)
        cert = _certify(family, rho, 1.0)
        if cert is None:
            return ModulusResult(0.0, 0.0, zero, 1, "EmptyFamily")
        rho_c, upper = cert
        lower = min(cut, upper)
        return ModulusResult(upper, lower, Density(rho_c), 1, "Converged",
                             notes=f"min vertex cut {cut:g}")

    paths: list[np.ndarray] = []
    keys: set[tuple] = set()
    for pt in (warm_paths or []) + _seed_paths(family, 12):
        key = tuple(sorted(set(int(x) for x in pt)))
        if key not in keys:
            keys.add(key)
            paths.append(np.asarray(pt, dtype=np.int64))
    if not paths:
        return ModulusResult(0.0, 0.0, zero, 0, "EmptyFamily")

    lam = np.zeros(len(paths))
    effort = 400
    rho = np.zeros(family.n)
    lower = 0.0
    iterations = 0
    clean = False
    while iterations < max_iter:
        iterations += 1
        rho, lam, lower = _solve_restricted(paths, family.n, p, lam, effort)
        batch = _violating_batch(family, rho, batch=6)
        fresh = 0
        for vio in batch:
            key = tuple(sorted(set(int(x) for x in vio)))
            if key not in keys:
                keys.add(key)
                paths.append(vio)
                lam = np.concatenate([lam, [0.0]])
                fresh += 1
        if not batch:
            clean = True
            break
        if fresh == 0:
            if effort >= 40_000:
                break
            effort *= 4

    cert = _certify(family, rho, p)
    if cert is None:
        return ModulusResult(0.0, 0.0, zero, iterations, "EmptyFamily")
    rho_c, upper = cert
    lower = min(lower, upper)
    converged = clean and (upper - lower) <= tol * max(1.0, upper)
    status = "Converged" if converged else "IterationLimit"
    return ModulusResult(upper, max(lower, 0.0), Density(rho_c), iterations,
                         status, notes=f"{len(paths)} active paths",
                         active_paths=paths)


def _upper_only_small_p(family: PathFamily, p: float, tol: float,
                        max_iter: int) -> ModulusResult:
    res = compute_modulus(family, 1.0, tol=max(tol, 1e-9), max_iter=max_iter)
    if res.status == "EmptyFamily":
        return ModulusResult(0.0, 0.0, res.rho_opt, res.iterations,
                             "EmptyFamily", notes="NonConvexRegime")
    rho = np.minimum(res.rho_opt.values, 1.0)
    upper = float(np.power(rho[rho > 0], p).sum())
    return ModulusResult(upper, 0.0, Density(rho), res.iterations, res.status,
                         notes="NonConvexRegime: upper bound only")


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def _enumerate_minimal_paths(family: PathFamily, cap: int) -> list[tuple]:
    """All simple source-to-sink paths with no interior source or sink (the
    binding constraints); raises TooLarge past the cap."""
    indptr, indices = family.indptr, family.indices
    src = set(int(s) for s in family.sources)
    snk = set(int(s) for s in family.sinks)
    out: list[tuple] = []

    def dfs(node: int, seen: set, path: list):
        if node in snk:
            out.append(tuple(path))
            if len(out) > cap:
                raise TooLarge(f"more than {cap} source-to-sink paths")
            return
        for nb in indices[indptr[node]:indptr[node + 1]]:
            nb = int(nb)
            if nb in seen or (nb in src):
                continue
            seen.add(nb)
            path.append(nb)
            dfs(nb, seen, path)
            path.pop()
            seen.remove(nb)

    for s in sorted(src):
        if s in snk:
            out.append((s,))
            continue
        dfs(s, {s}, [s])
    return out


def brute_force_modulus(family: PathFamily, p: float,
                        path_cap: int = 200) -> float:
    """Independent oracle: enumerate every binding source-to-sink path and
    solve the full program with an off-the-shelf convex solver.

    Only meant for small fixtures; raises TooLarge beyond the caps.
    """
    if family.is_structurally_empty():
        return 0.0
    cap = 100_000 if family.n <= 14 else path_cap
    paths = _enumerate_minimal_paths(family, cap)
    if family.n > 14 and len(paths) > path_cap:
        raise TooLarge("fixture exceeds both brute-force caps")
    constraints = sorted(set(tuple(sorted(set(pt))) for pt in paths))
    if not constraints:
        return 0.0
    rows = np.concatenate([np.full(len(c), i) for i, c in enumerate(constraints)])
    cols = np.concatenate([np.asarray(c) for c in constraints])
    A = sparse.csr_matrix((np.ones(cols.size), (rows, cols)),
                          shape=(len(constraints), family.n))
    if p == 1.0:
        res = linprog(c=np.ones(family.n), A_ub=-A, b_ub=-np.ones(A.shape[0]),
                      bounds=(0, None), method="highs")
        if not res.success:
            raise RuntimeError(f"brute-force LP failed: {res.message}")
        return float(res.fun)
    if p > 1.0:
        import cvxpy as cp

        rho = cp.Variable(family.n, nonneg=True)
        prob = cp.Problem(cp.Minimize(cp.sum(cp.power(rho, p))),
                          [A @ rho >= 1])
        val = prob.solve(solver=cp.CLARABEL)
        if prob.status not in ("optimal", "optimal_inaccurate"):
            raise RuntimeError(f"brute-force solve ended with {prob.status}")
        return float(val)
    return _brute_force_small_p(A, family.n, p)


def _brute_force_small_p(A, n, p):
    """Multistart local solve of the non-convex regime; upper estimate."""
    from scipy.optimize import minimize as _min

    Ad = A.toarray()
    best = np.inf
    starts = [np.full(n, 0.5), np.ones(n), np.full(n, 0.1)]
    for x0 in starts:
        res = _min(lambda x: np.power(np.abs(x), p).sum(), x0,
                   constraints=[{"type": "ineq",
                                 "fun": lambda x: Ad @ x - 1.0}],
                   bounds=[(0, None)] * n, method="SLSQP",
                   options={"maxiter": 500, "ftol": 1e-12})
        if res.success:
            best = min(best, float(np.power(np.abs(res.x), p).sum()))
    return best


# ---------------------------------------------------------------------------
# Transfer bound
# ---------------------------------------------------------------------------


@dataclass
class TransferReport:
    factor: float
    modulus: ModulusResult
    modulus_tilde: ModulusResult
    sampled_paths: int
    passed: bool


def transfer_bound_check(family: PathFamily, family_tilde: PathFamily,
                         H: dict[int, list[int]], p: float,
                         sample_cap: int = 50) -> TransferReport:
    """Check the covering transfer bound between two families.

    For sampled paths of the first family, the union of their H-images must
    contain a source-to-sink path of the second (else HypothesisUnverified);
    the certified bounds must then satisfy
    lower <= (max |H|)^p * (max preimage count) * upper_tilde.
    """
    paths = _enumerate_minimal_paths(family, cap=100_000)[:sample_cap]
    if not paths:
        raise HypothesisUnverified("no paths to sample in the first family")
    for pt in paths:
        image = sorted(set(w for v in pt for w in H.get(int(v), [])))
        if not _has_crossing(family_tilde, image):
            raise HypothesisUnverified(
                f"H-image of path {pt[:6]}... contains no crossing path")
    h_max = max((len(v) for v in H.values()), default=0)
    pre: dict[int, int] = {}
    for v, ws in H.items():
        for w in ws:
            pre[w] = pre.get(w, 0) + 1
    pre_max = max(pre.values(), default=0)
    factor = float(h_max) ** p * float(pre_max)
    res = compute_modulus(family, p, tol=1e-7)
    res_t = compute_modulus(family_tilde, p, tol=1e-7)
    passed = res.lower <= factor * res_t.upper * (1 + 1e-9) + 1e-12
    return TransferReport(factor, res, res_t, len(paths), passed)


def _has_crossing(family: PathFamily, allowed: list[int]) -> bool:
    allowed_set = set(allowed)
    srcs = [s for s in family.sources if int(s) in allowed_set]
    if not srcs:
        return False
    snks = set(int(s) for s in family.sinks if int(s) in allowed_set)
    if not snks:
        return False
    seen = set(int(s) for s in srcs)
    stack = list(seen)
    while stack:
        u = stack.pop()
        if u in snks:
            return True
        for nb in family.indices[family.indptr[u]:family.indptr[u + 1]]:
            nb = int(nb)
            if nb in allowed_set and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return bool(snks & seen)
