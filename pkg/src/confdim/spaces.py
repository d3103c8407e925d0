"""Sampled compact metric spaces, canonical generators, and separated nets.

A compact space is represented by a finite sample together with an exact
distance oracle.  All ball statements use strict inequalities (open balls)
with no tolerance; the generators therefore place points on integer grids
wherever possible so that membership tests never sit on a floating-point
knife edge.  Planar grids (square, carpet) use the sup metric, under which
grid distances are exact multiples of the grid step; bi-Lipschitz changes
of metric leave every dimension-type quantity computed here unchanged.

Normalization rescales distances as (raw / raw_diameter) * 0.5, which makes
the normalized diameter equal to 0.5 exactly in IEEE arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from ._errors import DepthTooLarge, InsufficientScales, InvalidSpec

__all__ = [
    "SpaceSpec",
    "MetricSpace",
    "NetHierarchy",
    "make_space",
    "normalize_diameter",
    "build_nets",
    "covering_number",
    "estimate_assouad",
    "load_space_spec",
    "SPACE_KINDS",
]

SPACE_KINDS = (
    "interval",
    "square",
    "cantor_middle_third",
    "sierpinski_carpet",
    "sierpinski_gasket",
    "ultrametric_product",
    "point_cloud",
)

# Hard caps so a bad depth request fails fast instead of thrashing.
_MAX_COORD_POINTS = 800_000
_MAX_DENSE_POINTS = 6_000


@dataclass(frozen=True)
class SpaceSpec:
    """Recipe for a canonical sample space.

    ``resolution_depth`` is measured in the generator's own subdivision base
    (2 for interval/cantor, 3 for carpet, the grid itself for square).  The
    payload can override the sampling density, e.g. ``{"side_points": 217}``
    for the square or ``{"points": 16385}`` for the interval, which is how
    callers match the sample resolution to a filling depth.
    """

    kind: str
    resolution_depth: int
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SPACE_KINDS:
            raise InvalidSpec(f"unknown space kind {self.kind!r}")
        if self.resolution_depth < 0:
            raise InvalidSpec("resolution_depth must be >= 0")


# ---------------------------------------------------------------------------
# Distance engines.  Engines expose *raw* distances; MetricSpace applies the
# normalization transform on top.
# ---------------------------------------------------------------------------


class _IntGridEngine:
    """Points with integer coordinates under the sup metric, scaled by `step`.

    ``shape`` is set when the points are exactly the full grid
    ``{0..shape[0]-1} x ... `` (in C order), which unlocks exact integer
    witness tests and box-shaped ball queries.
    """

    tree_metric = np.inf

    def __init__(self, coords: np.ndarray, step: float, shape: tuple[int, ...] | None):
        self.coords = np.ascontiguousarray(coords, dtype=np.int64)
        self.step = float(step)
        self.shape = shape
        self.n = self.coords.shape[0]
        self._tree = None

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.coords.astype(np.float64))
        return self._tree

    def tree_radius(self, raw_r: float) -> float:
        # KD-tree lives in integer coordinates.
        return raw_r / self.step

    def int_dist_to(self, i: int, idx) -> np.ndarray:
        d = np.abs(self.coords[idx] - self.coords[i])
        return d.max(axis=-1) if d.ndim > 1 else d

    def raw_dist_to(self, i: int, idx) -> np.ndarray:
        return self.int_dist_to(i, idx) * self.step

    def raw_dist_row(self, i: int) -> np.ndarray:
        return np.abs(self.coords - self.coords[i]).max(axis=1) * self.step

    def raw_diameter(self) -> float:
        spread = self.coords.max(axis=0) - self.coords.min(axis=0)
        return int(spread.max()) * self.step


class _FloatCoordEngine:
    """Euclidean point cloud (used by the gasket generator)."""

    tree_metric = 2.0

    def __init__(self, coords: np.ndarray):
        self.coords = np.ascontiguousarray(coords, dtype=np.float64)
        self.n = self.coords.shape[0]
        self.shape = None
        self._tree = None

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.coords)
        return self._tree

    def tree_radius(self, raw_r: float) -> float:
        return raw_r

    def raw_dist_to(self, i: int, idx) -> np.ndarray:
        d = self.coords[idx] - self.coords[i]
        return np.sqrt((d * d).sum(axis=-1))

    def raw_dist_row(self, i: int) -> np.ndarray:
        d = self.coords - self.coords[i]
        return np.sqrt((d * d).sum(axis=1))

    def raw_diameter(self) -> float:
        best = 0.0
        for i in range(self.n):
            best = max(best, float(self.raw_dist_row(i).max()))
        return best


class _UltrametricEngine:
    """Sequences (x_1, ..., x_D) with d(x, y) = 2^-j, j the first index where
    they differ.  The first coordinate is constant, so raw distances are at
    most 1/4."""

    tree_metric = None

    def __init__(self, seqs: np.ndarray):
        self.seqs = np.ascontiguousarray(seqs, dtype=np.int64)
        self.n = self.seqs.shape[0]
        self.shape = None
        self.tree = None

    def raw_dist_to(self, i: int, idx) -> np.ndarray:
        rows = self.seqs[idx]
        if rows.ndim == 1:
            rows = rows[None, :]
        diff = rows != self.seqs[i]
        any_diff = diff.any(axis=1)
        j = diff.argmax(axis=1) + 1  # 1-based index of first mismatch
        out = np.where(any_diff, np.power(2.0, -j.astype(np.float64)), 0.0)
        return out if np.ndim(idx) else out[0]

    def raw_dist_row(self, i: int) -> np.ndarray:
        return self.raw_dist_to(i, np.arange(self.n))

    def raw_diameter(self) -> float:
        for col in range(self.seqs.shape[1]):
            if np.unique(self.seqs[:, col]).size > 1:
                return 2.0 ** -(col + 1)
        return 0.0


class _MatrixEngine:
    """Explicit dense distance matrix (point clouds)."""

    tree_metric = None

    def __init__(self, mat: np.ndarray):
        self.mat = np.ascontiguousarray(mat, dtype=np.float64)
        self.n = self.mat.shape[0]
        self.shape = None
        self.tree = None

    def raw_dist_to(self, i: int, idx) -> np.ndarray:
        return self.mat[i, idx]

    def raw_dist_row(self, i: int) -> np.ndarray:
        return self.mat[i]

    def raw_diameter(self) -> float:
        return float(self.mat.max()) if self.n else 0.0


# ---------------------------------------------------------------------------
# MetricSpace
# ---------------------------------------------------------------------------


class MetricSpace:
    """Finite point sample with an exact symmetric distance oracle.

    Points are addressed by index 0..n-1.  ``dist`` values are canonical:
    every comparison anywhere in the package goes through the same rounded
    float, so strict open-ball tests are internally consistent.
    """

    def __init__(self, engine, label: str, norm_den: float | None = None,
                 degenerate: bool = False, spec: SpaceSpec | None = None):
        self._engine = engine
        self.label = label
        self._den = norm_den  # raw diameter used by the normalization map
        self.degenerate = degenerate
        self.spec = spec
        self._diameter = None

    # -- basic queries ------------------------------------------------------

    @property
    def n(self) -> int:
        return self._engine.n

    def __len__(self) -> int:
        return self._engine.n

    @property
    def normalized(self) -> bool:
        return self._den is not None or self.diameter == 0.5

    def _c(self, raw):
        """Canonical transform from raw to reported distances."""
        if self._den is None:
            return raw
        return (raw / self._den) * 0.5

    def dist(self, i: int, j: int) -> float:
        return float(self._c(self._engine.raw_dist_to(i, np.array([j]))[0]))

    def dist_to(self, i: int, idx) -> np.ndarray:
        return self._c(self._engine.raw_dist_to(i, np.asarray(idx)))

    def dist_row(self, i: int) -> np.ndarray:
        return self._c(self._engine.raw_dist_row(i))

    @property
    def diameter(self) -> float:
        if self._diameter is None:
            raw = self._engine.raw_diameter()
            self._diameter = float(self._c(raw))
        return self._diameter

    def point(self, i: int):
        """Displayable handle for point i (coordinates or sequence)."""
        eng = self._engine
        if isinstance(eng, _UltrametricEngine):
            return tuple(int(v) for v in eng.seqs[i])
        if isinstance(eng, _IntGridEngine):
            return tuple(float(v) * eng.step for v in eng.coords[i])
        if isinstance(eng, _FloatCoordEngine):
            return tuple(float(v) for v in eng.coords[i])
        return i

    # -- radius conversion helpers -------------------------------------------

    def _raw_radius(self, r: float) -> float:
        return r if self._den is None else r * 2.0 * self._den

    def _int_threshold(self, r: float) -> int:
        """Largest integer m with canonical(m * step) < r for grid engines."""
        eng = self._engine
        m = int(np.floor(self._raw_radius(r) / eng.step)) + 2
        while m > 0 and not self._c(m * eng.step) < r:
            m -= 1
        return m

    # -- ball queries ---------------------------------------------------------

    def ball(self, i: int, r: float) -> np.ndarray:
        """Indices of the open ball B(i, r) = { j : dist(i, j) < r }."""
        eng = self._engine
        if isinstance(eng, _IntGridEngine) and eng.shape is not None:
            m = self._int_threshold(r)
            c = eng.coords[i]
            shape = eng.shape
            slices = [np.arange(max(c[a] - m, 0), min(c[a] + m, shape[a] - 1) + 1)
                      for a in range(len(shape))]
            grids = np.meshgrid(*slices, indexing="ij")
            return np.ravel_multi_index([g.ravel() for g in grids], shape)
        if eng.tree is not None:
            raw_r = eng.tree_radius(self._raw_radius(r)) * (1.0 + 1e-9) + 1e-300
            cand = np.asarray(eng.tree.query_ball_point(
                eng.coords[i].astype(np.float64), raw_r, p=eng.tree_metric),
                dtype=np.int64)
            if cand.size == 0:
                return cand
            return cand[self.dist_to(i, cand) < r]
        row = self.dist_row(i)
        return np.nonzero(row < r)[0]

    def ball_mask(self, i: int, r: float, out: np.ndarray | None = None) -> np.ndarray:
        mask = out if out is not None else np.zeros(self.n, dtype=bool)
        mask[self.ball(i, r)] = True
        return mask

    # -- pair helpers used by the filling construction -------------------------

    def neighbor_pairs(self, pts: np.ndarray, threshold: float) -> np.ndarray:
        """All local-index pairs (i, j), i < j, of pts with dist < threshold."""
        pts = np.asarray(pts, dtype=np.int64)
        k = pts.size
        if k < 2:
            return np.empty((0, 2), dtype=np.int64)
        eng = self._engine
        if eng.tree is not None:
            sub = cKDTree(np.asarray(eng.coords, dtype=np.float64)[pts])
            raw_r = eng.tree_radius(self._raw_radius(threshold)) * (1.0 + 1e-9)
            pairs = sub.query_pairs(raw_r, p=eng.tree_metric, output_type="ndarray")
            if pairs.size == 0:
                return pairs.reshape(0, 2)
            keep = np.fromiter(
                (self.dist(pts[a], pts[b]) < threshold for a, b in pairs),
                dtype=bool, count=pairs.shape[0]) if pairs.shape[0] < 4096 else \
                self._bulk_pair_filter(pts, pairs, threshold)
            return pairs[keep]
        out = []
        for a in range(k):
            d = self.dist_to(pts[a], pts[a + 1:])
            hits = np.nonzero(d < threshold)[0]
            for h in hits:
                out.append((a, a + 1 + h))
        return np.array(out, dtype=np.int64).reshape(-1, 2)

    def _bulk_pair_filter(self, pts, pairs, threshold):
        eng = self._engine
        if isinstance(eng, _IntGridEngine):
            ca = eng.coords[pts[pairs[:, 0]]]
            cb = eng.coords[pts[pairs[:, 1]]]
            m = np.abs(ca - cb).max(axis=1)
            return self._c(m * eng.step) < threshold
        keep = np.empty(pairs.shape[0], dtype=bool)
        for t, (a, b) in enumerate(pairs):
            keep[t] = self.dist(pts[a], pts[b]) < threshold
        return keep

    def witness_mask(self, xs: np.ndarray, ys: np.ndarray,
                     r1: float, r2: float | None = None) -> np.ndarray:
        """Boolean mask over point-index pairs (xs[t], ys[t]): does a sample
        point z exist with dist(xs[t], z) < r1 and dist(ys[t], z) < r2?"""
        if r2 is None:
            r2 = r1
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        if xs.size == 0:
            return np.zeros(0, dtype=bool)
        eng = self._engine
        if isinstance(eng, _IntGridEngine) and eng.shape is not None:
            m1 = self._int_threshold(r1)
            m2 = self._int_threshold(r2)
            ca = eng.coords[xs]
            cb = eng.coords[ys]
            shape = np.array(eng.shape, dtype=np.int64)
            lo = np.maximum(np.maximum(ca - m1, cb - m2), 0)
            hi = np.minimum(np.minimum(ca + m1, cb + m2), shape - 1)
            return (lo <= hi).all(axis=1)
        ok = np.zeros(xs.size, dtype=bool)
        cache: dict[int, np.ndarray] = {}
        for t in range(xs.size):
            ix = int(xs[t])
            w = cache.get(ix)
            if w is None:
                w = self.ball(ix, r1)
                cache[ix] = w
            if w.size and np.any(self.dist_to(int(ys[t]), w) < r2):
                ok[t] = True
        return ok


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _interval_engine(spec: SpaceSpec) -> _IntGridEngine:
    npts = spec.payload.get("points", 2 ** spec.resolution_depth + 1)
    if npts < 1:
        raise InvalidSpec("interval needs at least one point")
    if npts > _MAX_COORD_POINTS:
        raise DepthTooLarge(f"interval sample of {npts} points exceeds budget")
    step = 1.0 / (npts - 1) if npts > 1 else 1.0
    coords = np.arange(npts, dtype=np.int64)[:, None]
    return _IntGridEngine(coords, step, (npts,))


def _square_engine(spec: SpaceSpec) -> _IntGridEngine:
    side = spec.payload.get("side_points", 2 ** spec.resolution_depth + 1)
    if side < 2:
        raise InvalidSpec("square needs side_points >= 2")
    if side * side > _MAX_COORD_POINTS:
        raise DepthTooLarge(f"square sample of {side}^2 points exceeds budget")
    step = 1.0 / (side - 1)
    ii, jj = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    coords = np.stack([ii.ravel(), jj.ravel()], axis=1).astype(np.int64)
    return _IntGridEngine(coords, step, (side, side))


def _cantor_engine(spec: SpaceSpec) -> _IntGridEngine:
    depth = spec.resolution_depth
    if 2 ** depth > _MAX_DENSE_POINTS * 8:
        raise DepthTooLarge("cantor depth too large")
    # Left endpoints of the level-`depth` intervals, as numerators over 3^depth.
    nums = np.array([0], dtype=np.int64)
    unit = 3 ** depth
    for k in range(depth):
        off = 2 * 3 ** (depth - k - 1)
        nums = np.concatenate([nums, nums + off])
    nums.sort()
    return _IntGridEngine(nums[:, None], 1.0 / unit, None)


def _carpet_engine(spec: SpaceSpec) -> _IntGridEngine:
    depth = spec.resolution_depth
    if 8 ** depth > _MAX_COORD_POINTS:
        raise DepthTooLarge("carpet depth too large")
    cells = np.array([[0, 0]], dtype=np.int64)
    for k in range(depth):
        scale = 3 ** (depth - k - 1)
        offs = np.array([(i, j) for i in range(3) for j in range(3)
                         if not (i == 1 and j == 1)], dtype=np.int64) * scale
        cells = (cells[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    order = np.lexsort((cells[:, 1], cells[:, 0]))
    return _IntGridEngine(cells[order], 1.0 / 3 ** depth, None)


def _gasket_engine(spec: SpaceSpec) -> _FloatCoordEngine:
    depth = spec.resolution_depth
    if 3 ** depth > _MAX_DENSE_POINTS * 40:
        raise DepthTooLarge("gasket depth too large")
    base = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
    tris = [base]
    for _ in range(depth):
        nxt = []
        for t in tris:
            mid = (t + np.roll(t, -1, axis=0)) / 2.0
            nxt.append(np.array([t[0], mid[0], mid[2]]))
            nxt.append(np.array([mid[0], t[1], mid[1]]))
            nxt.append(np.array([mid[2], mid[1], t[2]]))
        tris = nxt
    pts = np.concatenate(tris, axis=0)
    pts = np.unique(np.round(pts, 12), axis=0)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    return _FloatCoordEngine(pts[order])


def _ultrametric_engine(spec: SpaceSpec) -> _UltrametricEngine:
    depth = spec.resolution_depth
    if depth < 1:
        raise InvalidSpec("ultrametric_product needs depth >= 1")
    count = 1
    for i in range(1, depth + 1):
        count *= i
    if count > _MAX_DENSE_POINTS:
        raise DepthTooLarge(f"ultrametric depth {depth} gives {count} points")
    seqs = np.zeros((1, depth), dtype=np.int64) + 1
    for i in range(2, depth + 1):
        reps = []
        for v in range(1, i + 1):
            block = seqs.copy()
            block[:, i - 1] = v
            reps.append(block)
        seqs = np.concatenate(reps, axis=0)
    seqs = seqs[np.lexsort(tuple(seqs[:, c] for c in range(depth - 1, -1, -1)))]
    return _UltrametricEngine(seqs)


def _point_cloud_engine(spec: SpaceSpec) -> _MatrixEngine:
    payload = spec.payload
    tri = payload.get("distances")
    if tri is None or len(tri) == 0:
        raise InvalidSpec("point_cloud payload has no distances")
    vals = [float(Fraction(str(x))) for x in tri]
    # Flat lower-triangular, row-major: row i contributes i entries.
    n = int((1 + np.sqrt(1 + 8 * len(vals))) / 2)
    if n * (n - 1) // 2 != len(vals):
        raise InvalidSpec("lower-triangular length is not n(n-1)/2")
    if n > _MAX_DENSE_POINTS:
        raise DepthTooLarge("point cloud too large")
    mat = np.zeros((n, n))
    k = 0
    for i in range(1, n):
        for j in range(i):
            mat[i, j] = mat[j, i] = vals[k]
            k += 1
    if (mat < 0).any():
        raise InvalidSpec("negative distance in point cloud")
    if n > 1 and not (mat[~np.eye(n, dtype=bool)] > 0).all():
        raise InvalidSpec("distinct points at zero distance")
    _check_triangle(mat)
    return _MatrixEngine(mat)


def _check_triangle(mat: np.ndarray, budget: int = 400) -> None:
    n = mat.shape[0]
    idx = np.arange(n) if n <= budget else np.linspace(0, n - 1, budget, dtype=int)
    sub = mat[np.ix_(idx, idx)]
    # d(i,k) <= d(i,j) + d(j,k) for all sampled triples, vectorized over j.
    for j in range(sub.shape[0]):
        slack = sub - (sub[:, j][:, None] + sub[j][None, :])
        if (slack > 1e-12).any():
            raise InvalidSpec("triangle inequality violated in point cloud")


_GENERATORS = {
    "interval": _interval_engine,
    "square": _square_engine,
    "cantor_middle_third": _cantor_engine,
    "sierpinski_carpet": _carpet_engine,
    "sierpinski_gasket": _gasket_engine,
    "ultrametric_product": _ultrametric_engine,
    "point_cloud": _point_cloud_engine,
}


def make_space(spec: SpaceSpec) -> MetricSpace:
    """Instantiate the sample space described by `spec` (unnormalized)."""
    engine = _GENERATORS[spec.kind](spec)
    return MetricSpace(engine, label=spec.kind, spec=spec)


def normalize_diameter(space: MetricSpace) -> MetricSpace:
    """Rescale so the diameter equals 1/2 exactly.

    Single-point or zero-diameter spaces come back unchanged with the
    `degenerate` flag set.
    """
    if space.n <= 1 or space.diameter == 0.0:
        out = MetricSpace(space._engine, space.label, norm_den=space._den,
                          degenerate=True, spec=space.spec)
        return out
    if space.diameter == 0.5:
        return space
    raw_diam = space._engine.raw_diameter()
    return MetricSpace(space._engine, space.label, norm_den=raw_diam,
                       degenerate=False, spec=space.spec)


def load_space_spec(path: str | Path) -> SpaceSpec:
    """Read a JSON space-spec file: {"kind": ..., "depth": n, "payload": {...}}."""
    data = json.loads(Path(path).read_text())
    try:
        return SpaceSpec(kind=data["kind"], resolution_depth=int(data["depth"]),
                         payload=data.get("payload", {}))
    except KeyError as exc:
        raise InvalidSpec(f"space spec missing field {exc}") from exc


# ---------------------------------------------------------------------------
# Nets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetHierarchy:
    """Nested maximal a^-k separated subsets X_0 c X_1 c ... c X_depth."""

    space: MetricSpace
    a: float
    levels: tuple[np.ndarray, ...]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def __getitem__(self, k: int) -> np.ndarray:
        return self.levels[k]


def build_nets(space: MetricSpace, a: float, depth: int) -> NetHierarchy:
    """Greedy nested nets: ascending point index, seeded with the coarser net.

    Every level k is a maximal a^-k separated subset of the sample, and
    X_{k-1} is a subset of X_k.  Deterministic by construction.
    """
    if a <= 1:
        raise InvalidSpec("scale base a must be > 1")
    if not space.normalized and space.n > 1:
        raise InvalidSpec("build_nets expects a normalized space (diameter 1/2)")
    levels: list[np.ndarray] = []
    prev: np.ndarray = np.empty(0, dtype=np.int64)
    for k in range(depth + 1):
        r = float(a) ** (-k)
        blocked = np.zeros(space.n, dtype=bool)
        chosen: list[int] = []
        for i in prev:
            chosen.append(int(i))
            space.ball_mask(int(i), r, out=blocked)
        if blocked.all() and not chosen:
            pass
        for i in range(space.n):
            if not blocked[i]:
                chosen.append(i)
                space.ball_mask(i, r, out=blocked)
        arr = np.array(sorted(chosen), dtype=np.int64)
        levels.append(arr)
        prev = arr
    return NetHierarchy(space=space, a=float(a), levels=tuple(levels))


def covering_number(space: MetricSpace, x: int, R: float, r: float) -> int:
    """Size of a greedy maximal r-separated subset of the sampled ball B(x, R),
    seeded at the center.  By maximality the result is an r-cover of the
    sampled ball, hence an upper-bound proxy for the ideal covering count.
    """
    if not (0 < r):
        raise InvalidSpec("covering_number needs r > 0")
    members = space.ball(x, R)
    if members.size == 0:
        return 0
    member_set = set(int(m) for m in members)
    blocked: set[int] = set()
    count = 0
    order = [x] + [int(m) for m in members if int(m) != x]
    for c in order:
        if c in blocked or c not in member_set:
            continue
        count += 1
        hit = space.ball(c, r)
        blocked.update(int(h) for h in hit if int(h) in member_set)
        blocked.add(c)
    return count


def estimate_assouad(space: MetricSpace, scale_pairs: list[tuple[float, float]],
                     center_budget: int = 48) -> float:
    """Desk-scale lower estimate of the Assouad dimension.

    Takes the sup over sampled centers and the given (R, r) pairs of
    log N_r(B(x, R)) / log(R / r) using greedy covering counts.
    """
    if len(scale_pairs) < 3:
        raise InsufficientScales("need at least 3 (R, r) scale pairs")
    for R, r in scale_pairs:
        if not r < R:
            raise InsufficientScales(f"pair (R={R}, r={r}) needs r < R")
    n = space.n
    if n == 1:
        return 0.0
    stride = max(1, n // center_budget)
    centers = range(0, n, stride)
    best = 0.0
    for x in centers:
        for R, r in scale_pairs:
            cnt = covering_number(space, x, R, r)
            if cnt >= 1:
                best = max(best, np.log(cnt) / np.log(R / r))
    return float(best)
