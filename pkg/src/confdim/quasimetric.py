"""Deformed visual metric on a net, built from genealogy weights.

The link cost between two points is the largest genealogy product over the
deepest-level vertices whose doubled balls contain both; the metric is the
chain infimum of link costs over chains through the net.  Restricting
chains to the net can only increase the result, so the one-link upper bound
is exact while the lower comparability constant is measured, not assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from ._errors import (
    IdenticalPoints,
    InsufficientTriples,
    ThresholdNotReached,
    UncertifiedParams,
)
from .filling import Filling, Vertex, center_set, genealogy_ray
from .modulus import Density, PathFamily, annulus_family
from ._graphs import reachable_from
from .weights import WeightAssignment

__all__ = [
    "QuasiMetric",
    "pi_center",
    "build_theta",
    "verify_visual_bounds",
    "ball_comparison_check",
    "estimate_distortion",
    "admissible_from_measure",
    "d_rho_graph_metric",
    "DistortionProfile",
]


def pi_center(filling: Filling, weights: WeightAssignment, x: int, y: int) -> float:
    """Largest genealogy product over the center set of the pair."""
    if x == y:
        raise IdenticalPoints("pi_center needs two distinct points")
    cs = center_set(filling, x, y)
    return max(weights.pi(v) for v in cs.members)


@dataclass
class QuasiMetric:
    base_level: int
    net: np.ndarray          # sample indices of the net points
    theta: np.ndarray        # chain-infimum metric matrix
    link_cost: np.ndarray    # one-link costs pi(c(x, y))
    provenance: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.net.size

    def row(self, i: int) -> np.ndarray:
        return self.theta[i]


def _link_cost_matrix(filling: Filling, weights: WeightAssignment,
                      net: np.ndarray) -> np.ndarray:
    """pi(c(x, y)) for all net pairs via level sweeps: at each level, every
    vertex stamps the max pi over the pairs its doubled ball covers; deeper
    levels overwrite shallower ones, which realizes the deepest-level rule."""
    space = filling.space
    a = filling.a
    n = net.size
    root_pi = float(weights.pi_levels[0][0])
    D0 = np.full((n, n), root_pi)
    for k in range(1, filling.depth + 1):
        r = 2.0 * a ** (-k)
        lev = filling.levels[k]
        piv = weights.pi_levels[k]
        stamp = np.full((n, n), -1.0)
        order = np.argsort(piv, kind="stable")  # larger pi stamps later
        for s in order:
            d = space.dist_to(int(lev[s]), net)
            mem = np.nonzero(d < r)[0]
            if mem.size >= 2:
                stamp[np.ix_(mem, mem)] = piv[s]
        covered = stamp >= 0
        D0[covered] = stamp[covered]
    np.fill_diagonal(D0, 0.0)
    return D0


def build_theta(filling: Filling, weights: WeightAssignment, m: int,
                validate: bool | str = "auto") -> QuasiMetric:
    """Chain-infimum metric on the level-m net.

    Emits a warning note (never an error) when the weights lack the
    bounded-ratio certificates; the metric is still built.
    """
    filling.check_level(m)
    net = filling.levels[m]
    notes = {}
    if weights.params.K0 is None or weights.params.eta_minus is None:
        notes["warning"] = "weights carry no certified constants"
    D0 = _link_cost_matrix(filling, weights, net)
    theta = D0.copy()
    n = net.size
    for mid in range(n):
        np.minimum(theta, theta[:, mid, None] + theta[None, mid, :], out=theta)
    if validate == "auto":
        validate = n <= 420
    if validate:
        _assert_metric(theta)
    return QuasiMetric(base_level=m, net=net, theta=theta, link_cost=D0,
                       provenance={"params": weights.params, **notes})


def _assert_metric(theta: np.ndarray) -> None:
    assert np.allclose(theta, theta.T, atol=0.0), "theta must be symmetric"
    assert (np.diag(theta) == 0.0).all(), "theta diagonal must vanish"
    off = theta[~np.eye(theta.shape[0], dtype=bool)]
    assert (off > 0).all(), "distinct net points need positive distance"
    n = theta.shape[0]
    for j in range(n):
        slack = theta - (theta[:, j, None] + theta[None, j, :])
        assert slack.max() <= 1e-12, "triangle inequality failed"


@dataclass
class VisualBoundsReport:
    upper_violations: int
    tightest_lower_constant: float
    passed: bool


def verify_visual_bounds(qm: QuasiMetric, filling: Filling,
                         weights: WeightAssignment) -> VisualBoundsReport:
    """theta <= pi(c(x,y)) must hold exactly (one-link chains); the observed
    lower comparability constant is reported, not asserted."""
    mask = ~np.eye(qm.n, dtype=bool)
    upper_bad = int((qm.theta[mask] > qm.link_cost[mask]).sum())
    ratios = qm.link_cost[mask] / qm.theta[mask]
    tight = float(ratios.max()) if ratios.size else 1.0
    return VisualBoundsReport(upper_violations=upper_bad,
                              tightest_lower_constant=tight,
                              passed=upper_bad == 0)


@dataclass
class BallComparisonReport:
    x: int
    r: float
    inner_level: int | None
    inner_ok: bool
    outer_level: int | None
    outer_ok: bool
    trivial_outer: bool = False


def ball_comparison_check(qm: QuasiMetric, filling: Filling,
                          weights: WeightAssignment, x: int, r: float,
                          lower_const: float | None = None) -> BallComparisonReport:
    """Sandwich the theta-ball B(x, r) between metric balls along x's
    genealogy ray, using the certified horizontal constant."""
    K0 = weights.params.K0
    if K0 is None:
        raise UncertifiedParams("ball comparison needs a certified K0")
    if lower_const is None:
        lower_const = verify_visual_bounds(qm, filling, weights).tightest_lower_constant
    L = max(lower_const, 1.0)
    pos = np.nonzero(qm.net == x)[0]
    if pos.size != 1:
        raise ValueError("x must be a net point of the quasi-metric")
    xi = int(pos[0])
    ray = genealogy_ray(filling, x)
    pis = np.array([weights.pi(v) for v in ray])
    space = filling.space
    a = filling.a

    theta_row = qm.theta[xi]
    inner_level = inner_ok = None
    ks = np.nonzero(pis < r / K0)[0]
    if ks.size == 0:
        raise ThresholdNotReached(
            f"no ray vertex has pi below r/K0 = {r / K0:.3g} at depth {filling.depth}")
    k = int(ks[0])
    inner_level = k
    d_row = space.dist_to(int(ray[k].net_index), qm.net)
    inner_ok = bool(np.all(theta_row[d_row < 2.0 * a ** (-k)] < r))

    trivial = r >= pis[0] / (K0 * L)
    if trivial:
        outer_level, outer_ok = 0, True
    else:
        crossing = np.nonzero(pis <= K0 * L * r)[0]
        if crossing.size == 0:
            raise ThresholdNotReached("ray too shallow for the outer inclusion")
        k2 = int(crossing[0])
        outer_level = k2
        d_row2 = space.dist_to(int(ray[k2].net_index), qm.net)
        outer_ok = bool(np.all(d_row2[theta_row < r] < 2.0 * (filling.lam + 2.0) * a ** (-k2)))
    return BallComparisonReport(x=x, r=r, inner_level=inner_level,
                                inner_ok=bool(inner_ok),
                                outer_level=outer_level, outer_ok=bool(outer_ok),
                                trivial_outer=trivial)


# ---------------------------------------------------------------------------
# Distortion
# ---------------------------------------------------------------------------


@dataclass
class DistortionProfile:
    bin_centers: np.ndarray
    envelope95: np.ndarray
    envelope_max: np.ndarray
    alpha: float
    C: float
    n_triples: int


def estimate_distortion(d_matrix, theta_matrix, n_triples: int = 4000,
                        seed: int = 0, n_bins: int = 24) -> DistortionProfile:
    """Empirical distortion gauge from sampled triples.

    For triples (x, a, b) the pair (t, H) = (d-ratio, theta-ratio) is binned
    in log t; the 95th-percentile upper envelope (and the raw max) estimate
    the gauge, and a two-branch fit reports the best power law
    C (t^alpha or t^(1/alpha)).
    """
    d_matrix = np.asarray(d_matrix, dtype=np.float64)
    theta_matrix = np.asarray(theta_matrix, dtype=np.float64)
    n = d_matrix.shape[0]
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, n, size=3 * n_triples)
    as_ = rng.integers(0, n, size=3 * n_triples)
    bs = rng.integers(0, n, size=3 * n_triples)
    ok = (xs != as_) & (xs != bs) & (as_ != bs)
    xs, as_, bs = xs[ok][:n_triples], as_[ok][:n_triples], bs[ok][:n_triples]
    if xs.size < 100:
        raise InsufficientTriples(f"only {xs.size} valid triples")
    t = d_matrix[xs, as_] / d_matrix[xs, bs]
    H = theta_matrix[xs, as_] / theta_matrix[xs, bs]
    good = np.isfinite(t) & np.isfinite(H) & (t > 0) & (H > 0)
    t, H = t[good], H[good]
    logt = np.log(t)
    edges = np.linspace(logt.min() - 1e-9, logt.max() + 1e-9, n_bins + 1)
    centers, env95, envmax = [], [], []
    for b in range(n_bins):
        sel = (logt >= edges[b]) & (logt < edges[b + 1])
        if sel.sum() < 3:
            continue
        centers.append(0.5 * (edges[b] + edges[b + 1]))
        env95.append(np.quantile(H[sel], 0.95))
        envmax.append(H[sel].max())
    centers = np.array(centers)
    env95 = np.array(env95)
    envmax = np.array(envmax)

    def branch_slope(mask):
        if mask.sum() < 2:
            return None, 0.0
        A = np.vstack([centers[mask], np.ones(mask.sum())]).T
        sol, *_ = np.linalg.lstsq(A, np.log(env95[mask]), rcond=None)
        return float(sol[0]), float(sol[1])

    s_hi, c_hi = branch_slope(centers > 0)
    s_lo, c_lo = branch_slope(centers < 0)
    alpha = 1.0
    if s_hi is not None:
        alpha = max(alpha, s_hi)
    if s_lo is not None and s_lo > 1e-9:
        alpha = max(alpha, 1.0 / s_lo)
    C = float(np.exp(max(c_hi if s_hi is not None else 0.0,
                         c_lo if s_lo is not None else 0.0, 0.0)))
    return DistortionProfile(np.exp(centers), env95, envmax, alpha, C, int(t.size))


# ---------------------------------------------------------------------------
# Measure-derived admissible densities
# ---------------------------------------------------------------------------


@dataclass
class AdmissibleFromMeasure:
    family: PathFamily
    density: Density
    margin: float
    q_mass: float
    sup_value: float


def admissible_from_measure(filling: Filling, sample_mass: np.ndarray,
                            v: Vertex, k: int, L: float,
                            q: float) -> AdmissibleFromMeasure:
    """Ball-mass-ratio density on the annulus family around v.

    Supported on family vertices whose ball meets the widened annulus ball
    and that lie on some crossing path (approximated by two-sided
    reachability); the margin is the least path sum, reported rather than
    presumed positive.  Empty families report an infinite margin.
    """
    fam = annulus_family(filling, v, k, L)
    space = filling.space
    a = filling.a
    level = v.level + k
    slots_pts = fam.meta["level_slots"]
    n = fam.n
    rho = np.zeros(n)
    if fam.is_structurally_empty():
        return AdmissibleFromMeasure(fam, Density(rho), np.inf, 0.0, 0.0)
    fwd = reachable_from(fam.indptr, fam.indices, fam.sources)
    bwd = reachable_from(fam.indptr, fam.indices, fam.sinks)
    on_path = fwd & bwd
    mu_v = float(sample_mass[space.ball(v.net_index, a ** (-v.level))].sum())
    widened = (L + 1.0) * a ** (-v.level)
    witness = space.witness_mask(
        slots_pts, np.full(n, v.net_index), a ** (-level), widened)
    support = np.nonzero(on_path & witness)[0]
    for s in support:
        mu_w = float(sample_mass[space.ball(int(slots_pts[s]), a ** (-level))].sum())
        rho[s] = (mu_w / mu_v) ** (1.0 / q) if mu_v > 0 else 0.0
    margin, _ = fam.vw.min_path(rho, fam.sinks)
    q_mass = float(np.power(rho[rho > 0], q).sum())
    return AdmissibleFromMeasure(fam, Density(rho), float(margin), q_mass,
                                 float(rho.max(initial=0.0)))


# ---------------------------------------------------------------------------
# Deformed graph metric
# ---------------------------------------------------------------------------


def d_rho_graph_metric(filling: Filling, weights: WeightAssignment,
                       v: Vertex, w: Vertex) -> float:
    """Weighted D2 distance: horizontal edges cost the fixed constant
    2 max(-log eta-, 1/(-log eta+), log K0); a parent-child edge costs
    -log rho(child)."""
    prm = weights.params
    if prm.eta_minus is None or prm.eta_plus is None or prm.K0 is None:
        raise UncertifiedParams("d_rho needs certified (eta-, eta+, K0)")
    if v == w:
        return 0.0
    hcost = 2.0 * max(-np.log(prm.eta_minus),
                      1.0 / (-np.log(prm.eta_plus)),
                      np.log(prm.K0))
    f = filling
    rows, cols, data = [], [], []
    for k in range(f.depth + 1):
        indptr, indices = f.horiz[k]
        deg = np.diff(indptr)
        src = np.repeat(np.arange(f.level_size(k)), deg)
        rows.append(f.offsets[k] + src)
        cols.append(f.offsets[k] + indices)
        data.append(np.full(indices.size, hcost))
    for k in range(1, f.depth + 1):
        ps = f.parent_slot[k]
        child = f.offsets[k] + np.arange(ps.size)
        par = f.offsets[k - 1] + ps
        vc = -np.log(weights.rho_levels[k])
        rows += [child, par]
        cols += [par, child]
        data += [vc, vc]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.concatenate(data)
    g = sparse.csr_matrix((data, (rows, cols)),
                          shape=(f.n_vertices, f.n_vertices))
    src = f.gid(v.level, f.slot_of(v))
    dst = f.gid(w.level, f.slot_of(w))
    dist = dijkstra(g, directed=False, indices=src)
    return float(dist[dst])
