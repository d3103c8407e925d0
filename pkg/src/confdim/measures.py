"""Level-by-level construction of a doubling measure on the filling.

Mass starts as a unit at the root and moves down one level at a time: an
averaging step spreads each vertex's mass over its children proportionally
to pi^p, then a sweep of local balancing operators moves mass across
horizontal edges until every edge ratio f/pi^p vs f/pi^p sits within C^2.
Each balancing application is an exact one-edge transfer, so the whole
construction doubles as its own coupling witness: the transfer log records
every move with its distance, and the audits confirm that no mass ever
travels farther than (1 + 2 lambda / a) a^-k in the step leaving level k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._errors import ChainInvalid, HypothesisFailure, PostconditionFailure
from .filling import Filling, Vertex
from .weights import WeightAssignment, check_H1, check_H2, check_H4

__all__ = [
    "LevelMass",
    "BalanceConfig",
    "TransferRecord",
    "MeasureHierarchy",
    "check_balanced",
    "check_compatible",
    "averaging_step",
    "balance_edge",
    "balance_sweep",
    "build_measure",
    "estimate_homogeneity",
    "reverse_doubling_check",
    "HomogeneityReport",
]

_SLACK = 1e-12


@dataclass
class LevelMass:
    level: int
    mass: np.ndarray

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=np.float64)

    def total(self) -> float:
        return float(self.mass.sum())


@dataclass(frozen=True)
class BalanceConfig:
    """Balancing parameters: the comparison constant C > 1, the exponent p,
    and the genealogy weight map pi (one positive array per level)."""

    C: float
    p: float
    pi_levels: list
    weights: WeightAssignment | None = None

    def __post_init__(self):
        if self.C <= 1:
            raise ValueError("balance constant C must exceed 1")
        if self.weights is not None:
            eta = self.weights.params.eta_minus
            if eta is not None and self.C < eta ** (-self.p) * (1 - 1e-12):
                raise ValueError("C must be at least eta_minus^-p")

    @classmethod
    def from_weights(cls, weights: WeightAssignment, p: float,
                     C: float | None = None) -> "BalanceConfig":
        if C is None:
            h1 = check_H1(weights)
            if not h1.passed:
                raise HypothesisFailure(f"H1 fails at {h1.witness}")
            C = h1.constants["eta_minus"] ** (-p)
        return cls(C=C, p=p, pi_levels=weights.pi_levels, weights=weights)

    def quotient(self, level: int, mass: np.ndarray) -> np.ndarray:
        pi = np.asarray(self.pi_levels[level], dtype=np.float64)
        return mass / pi ** self.p


@dataclass(frozen=True)
class TransferRecord:
    step: int
    kind: str  # "spread" | "balance"
    src: Vertex
    dst: Vertex
    amount: float
    distance: float


@dataclass
class MeasureHierarchy:
    filling: Filling
    config: BalanceConfig
    levels: list[LevelMass]
    transfer_log: list[TransferRecord]
    audits: dict = field(default_factory=dict)

    def point_masses(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Pushforward of the level-k mass to sample points."""
        return self.filling.levels[k], self.levels[k].mass

    def sample_mass_vector(self, k: int) -> np.ndarray:
        out = np.zeros(self.filling.space.n)
        idx, m = self.point_masses(k)
        out[idx] = m
        return out


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def check_balanced(mass: LevelMass, cfg: BalanceConfig, filling: Filling):
    """Every horizontal edge ratio within C^2.  Returns (ok, worst_edge, ratio)."""
    q = cfg.quotient(mass.level, mass.mass)
    indptr, indices = filling.horiz[mass.level]
    bound = cfg.C ** 2
    worst_ratio, worst_edge = 1.0, None
    for s in range(q.size):
        nb = indices[indptr[s]:indptr[s + 1]]
        if nb.size:
            ratios = q[s] / q[nb]
            t = int(np.argmax(ratios))
            if ratios[t] > worst_ratio:
                worst_ratio = float(ratios[t])
                worst_edge = (filling.vertex(mass.level, s),
                              filling.vertex(mass.level, int(nb[t])))
    return worst_ratio <= bound * (1 + _SLACK), worst_edge, worst_ratio


def check_compatible(parent_mass: LevelMass, child_mass: LevelMass,
                     cfg: BalanceConfig, filling: Filling):
    """Parent-child quotient ratios within [1, C].  Returns (ok, worst, lo, hi)."""
    qp = cfg.quotient(parent_mass.level, parent_mass.mass)
    qc = cfg.quotient(child_mass.level, child_mass.mass)
    ps = filling.parent_slot[child_mass.level]
    ratios = qc / qp[ps]
    lo, hi = float(ratios.min()), float(ratios.max())
    ok = lo >= 1.0 - _SLACK and hi <= cfg.C * (1 + _SLACK)
    worst = None
    if not ok:
        s = int(np.argmin(ratios)) if lo < 1.0 - _SLACK else int(np.argmax(ratios))
        worst = (filling.vertex(parent_mass.level, int(ps[s])),
                 filling.vertex(child_mass.level, s))
    return ok, worst, lo, hi


# ---------------------------------------------------------------------------
# Averaging and balancing
# ---------------------------------------------------------------------------


def averaging_step(mass: LevelMass, filling: Filling, cfg: BalanceConfig,
                   log: list[TransferRecord] | None = None,
                   step0: int = 0, precheck: bool = True) -> LevelMass:
    """Spread each vertex's mass over its children proportionally to pi^p.

    With the uniform bounds and child-mass decay certified, the output is
    automatically compatible with the input; that is asserted, not assumed.
    """
    k = mass.level
    if precheck and cfg.weights is not None:
        if not check_H1(cfg.weights).passed:
            raise HypothesisFailure("averaging needs the uniform bounds (H1)")
        if not check_H4(cfg.weights, cfg.p).passed:
            raise HypothesisFailure("averaging needs child mass decay (H4)")
    pi_child = np.asarray(cfg.pi_levels[k + 1], dtype=np.float64)
    ps = filling.parent_slot[k + 1]
    contrib = pi_child ** cfg.p
    denom = np.zeros(filling.level_size(k))
    np.add.at(denom, ps, contrib)
    out = contrib / denom[ps] * mass.mass[ps]
    result = LevelMass(k + 1, out)
    if log is not None:
        space = filling.space
        for s in range(out.size):
            src = filling.vertex(k, int(ps[s]))
            dst = filling.vertex(k + 1, s)
            log.append(TransferRecord(
                step0 + s, "spread", src, dst, float(out[s]),
                space.dist(src.net_index, dst.net_index)))
    if abs(result.total() - mass.total()) > 1e-12:
        raise PostconditionFailure("averaging changed the total mass")
    ok, worst, lo, hi = check_compatible(mass, result, cfg, filling)
    if not ok:
        raise PostconditionFailure(
            f"averaging output incompatible at {worst}: [{lo}, {hi}]")
    return result


def balance_edge(f: LevelMass, e: tuple[int, int], cfg: BalanceConfig,
                 filling: Filling):
    """Apply the one-edge balancing operator.

    Identity when the edge ratio already sits within C^2; otherwise moves
    the unique amount that lands the post-ratio exactly on C^2.  Returns
    (new mass, transfer tuple or None).
    """
    k = f.level
    u, v = e
    pi = np.asarray(cfg.pi_levels[k], dtype=np.float64)
    p, C = cfg.p, cfg.C
    qu = f.mass[u] / pi[u] ** p
    qv = f.mass[v] / pi[v] ** p
    # Same slack as the balance checkers, so numerically balanced edges are
    # genuine fixed points of the operator.
    if qu <= C ** 2 * qv * (1 + _SLACK) and qv <= C ** 2 * qu * (1 + _SLACK):
        return f, None
    if qv > qu:
        u, v = v, u
        qu, qv = qv, qu
    alpha = (qu - C ** 2 * qv) / (C ** 2 / pi[v] ** p + 1.0 / pi[u] ** p)
    out = f.mass.copy()
    out[u] -= alpha
    out[v] += alpha
    return LevelMass(k, out), (u, v, float(alpha))


def _edge_enumeration(filling: Filling, k: int) -> list[tuple[int, int]]:
    """Ascending (min slot, max slot); slots are net-index ordered."""
    indptr, indices = filling.horiz[k]
    edges = set()
    for s in range(filling.level_size(k)):
        for t in indices[indptr[s]:indptr[s + 1]]:
            edges.add((min(s, int(t)), max(s, int(t))))
    return sorted(edges)


def balance_sweep(parent_mass: LevelMass, f0: LevelMass, filling: Filling,
                  cfg: BalanceConfig, edge_order: list[tuple[int, int]] | None = None,
                  log: list[TransferRecord] | None = None, step0: int = 0,
                  exhaustive_audit: bool | None = None) -> LevelMass:
    """One pass of balancing operators over every edge of the child level.

    Asserts, per the construction's guarantees: compatibility with the
    parent after every edge, no previously balanced edge going bad, no
    forwarding (mass into a vertex never later leaves it), and final
    balancedness.  A violation raises PostconditionFailure since these hold
    unconditionally for compatible inputs.
    """
    k = f0.level
    ok, worst, lo, hi = check_compatible(parent_mass, f0, cfg, filling)
    if not ok:
        raise HypothesisFailure(f"sweep input incompatible at {worst}")
    edges = edge_order if edge_order is not None else _edge_enumeration(filling, k)
    if exhaustive_audit is None:
        exhaustive_audit = len(edges) <= 4000
    bound = cfg.C ** 2
    cur = f0
    received: dict[int, int] = {}
    moves: list[tuple[int, int, int]] = []
    space = filling.space
    balanced_before = set()
    if exhaustive_audit:
        q = cfg.quotient(k, cur.mass)
        for (x, y) in edges:
            if q[x] <= bound * q[y] * (1 + _SLACK) and q[y] <= bound * q[x] * (1 + _SLACK):
                balanced_before.add((x, y))
    for i, e in enumerate(edges):
        cur, transfer = balance_edge(cur, e, cfg, filling)
        if transfer is None:
            continue
        u, v, alpha = transfer
        moves.append((i, u, v))
        received[v] = i
        if u in received and received[u] < i:
            raise PostconditionFailure(
                f"forwarding: vertex {filling.vertex(k, u)} received then sent")
        if log is not None:
            log.append(TransferRecord(
                step0 + i, "balance", filling.vertex(k, u), filling.vertex(k, v),
                alpha, space.dist(int(filling.levels[k][u]),
                                  int(filling.levels[k][v]))))
        ok, worst, lo, hi = check_compatible(parent_mass, cur, cfg, filling)
        if not ok:
            raise PostconditionFailure(
                f"compatibility broke at edge {e}, worst {worst}")
        if exhaustive_audit:
            q = cfg.quotient(k, cur.mass)
            for (x, y) in balanced_before:
                if (x, y) == e:
                    continue
                if q[x] > bound * q[y] * (1 + 1e-9) or q[y] > bound * q[x] * (1 + 1e-9):
                    raise PostconditionFailure(
                        f"edge {(x, y)} became unbalanced after balancing {e}")
            if q[e[0]] <= bound * q[e[1]] * (1 + _SLACK) and \
               q[e[1]] <= bound * q[e[0]] * (1 + _SLACK):
                balanced_before.add(e)
    ok, worst, ratio = check_balanced(cur, cfg, filling)
    if not ok:
        raise PostconditionFailure(
            f"sweep left edge {worst} unbalanced (ratio {ratio})")
    if abs(cur.total() - f0.total()) > 1e-12:
        raise PostconditionFailure("sweep changed the total mass")
    if not (cur.mass > 0).all():
        raise PostconditionFailure("sweep zeroed a vertex mass")
    return cur


def build_measure(filling: Filling, weights: WeightAssignment, p: float,
                  C: float | None = None, depth: int | None = None,
                  keep_log: bool = True) -> MeasureHierarchy:
    """Alternate averaging and balancing from the unit root mass.

    Requires the uniform bounds, horizontal comparability, and child-mass
    decay; C defaults to the tightest allowed value eta_minus^-p.  Transfer
    distances are audited against the per-level bound
    (1 + 2 lambda / a) a^-k.
    """
    h1 = check_H1(weights)
    if not h1.passed:
        raise HypothesisFailure(f"H1 fails at {h1.witness}")
    h4 = check_H4(weights, p)
    if not h4.passed:
        raise HypothesisFailure(f"H4 fails at {h4.witness}: {h4.constants}")
    weights.certify(p)
    eta = weights.params.eta_minus
    if C is None:
        C = eta ** (-p)
    cfg = BalanceConfig(C=C, p=p, pi_levels=weights.pi_levels, weights=weights)
    depth = filling.depth if depth is None else min(depth, filling.depth)

    levels = [LevelMass(0, np.array([1.0]))]
    log: list[TransferRecord] = [] if keep_log else None
    audits = {"per_level": []}
    a, lam = filling.a, filling.lam
    step = 0
    for k in range(depth):
        n_log0 = len(log) if keep_log else 0
        f0 = averaging_step(levels[k], filling, cfg, log=log, step0=step,
                            precheck=False)
        step += f0.mass.size
        f1 = balance_sweep(levels[k], f0, filling, cfg, log=log, step0=step)
        step += filling.level_size(k + 1)
        levels.append(f1)
        if abs(f1.total() - 1.0) > 1e-12:
            raise PostconditionFailure(f"level {k + 1} mass drifted: {f1.total()}")
        if keep_log:
            spread_d = [r.distance for r in log[n_log0:] if r.kind == "spread"]
            bal_d = [r.distance for r in log[n_log0:] if r.kind == "balance"]
            max_spread = max(spread_d) if spread_d else 0.0
            max_bal = max(bal_d) if bal_d else 0.0
            bound = (1.0 + 2.0 * lam / a) * a ** (-k)
            if not max_spread < a ** (-k):
                raise PostconditionFailure("spread moved mass too far")
            if bal_d and not max_bal < 2.0 * lam * a ** (-(k + 1)):
                raise PostconditionFailure("balancing moved mass too far")
            audits["per_level"].append({
                "level": k,
                "max_spread": max_spread,
                "max_balance": max_bal,
                "composite_bound": bound,
                "composite": max_spread + max_bal,
            })
    return MeasureHierarchy(filling, cfg, levels, log or [], audits)


# ---------------------------------------------------------------------------
# Homogeneity diagnostics
# ---------------------------------------------------------------------------


@dataclass
class HomogeneityReport:
    q: float
    worst: float
    records: list


def _rows(metric, i: int) -> np.ndarray:
    if callable(metric):
        return np.asarray(metric(i), dtype=np.float64)
    return np.asarray(metric[i], dtype=np.float64)


def estimate_homogeneity(mass: np.ndarray, metric, q: float,
                         centers: np.ndarray | None = None,
                         radius_pairs: list[tuple[float, float]] | None = None,
                         cutoff: float = 0.0,
                         center_budget: int = 48) -> HomogeneityReport:
    """Worst ratio mu(B(x,R)) / mu(B(x,r)) * (r/R)^q over sampled centers
    and scale pairs, skipping r below the cutoff."""
    mass = np.asarray(mass, dtype=np.float64)
    n = mass.size
    if centers is None:
        stride = max(1, n // center_budget)
        centers = np.arange(0, n, stride)
    if radius_pairs is None:
        radii = [2.0 ** -i for i in range(1, 16) if 2.0 ** -i >= cutoff]
        radius_pairs = [(R, r) for R in radii for r in radii if r < R]
    worst = 0.0
    records = []
    for x in centers:
        d = _rows(metric, int(x))
        for R, r in radius_pairs:
            if r < cutoff:
                continue
            mR = float(mass[d < R].sum())
            mr = float(mass[d < r].sum())
            if mr <= 0.0:
                continue
            val = (mR / mr) * (r / R) ** q
            records.append((int(x), R, r, val))
            worst = max(worst, val)
    return HomogeneityReport(q=q, worst=worst, records=records)


def measured_doubling_constant(mass: np.ndarray, metric, cutoff: float,
                               center_budget: int = 48) -> float:
    """Empirical sup of mu(B(x,2s))/mu(B(x,s)) over dyadic s above cutoff."""
    mass = np.asarray(mass, dtype=np.float64)
    n = mass.size
    stride = max(1, n // center_budget)
    worst = 1.0
    for x in range(0, n, stride):
        d = _rows(metric, x)
        s = 0.5
        while s >= cutoff:
            m1 = float(mass[d < s].sum())
            m2 = float(mass[d < 2 * s].sum())
            if m1 > 0:
                worst = max(worst, m2 / m1)
            s /= 2
    return worst


def reverse_doubling_check(mass: np.ndarray, metric, chain: list[int],
                           r: float, R: float, cutoff: float = 0.0):
    """Chain-based lower volume growth.

    The chain must step by less than r/4 and its endpoints must be more
    than R apart; the measured doubling constant then forces
    mu(B(x0, R)) >= c (R/r)^alpha mu(B(x0, r)).
    Returns (ok, constants dict).
    """
    if not r < R:
        raise ChainInvalid("need r < R")
    if len(chain) < 2:
        raise ChainInvalid("chain needs at least two points")
    for i in range(len(chain) - 1):
        d0 = _rows(metric, chain[i])
        if not d0[chain[i + 1]] < r / 4.0:
            raise ChainInvalid(f"step {i} of the chain is too long")
    d_start = _rows(metric, chain[0])
    if not d_start[chain[-1]] > R:
        raise ChainInvalid("chain endpoints are not separated by more than R")
    C_D = measured_doubling_constant(mass, metric, cutoff=max(cutoff, r / 8))
    alpha = np.log(1.0 + C_D ** -3) / np.log(2.0)
    c = 1.0 / (1.0 + C_D ** -3)
    mR = float(mass[d_start < R].sum())
    mr = float(mass[d_start < r].sum())
    ok = mR >= c * (R / r) ** alpha * mr - 1e-15
    return ok, {"C_D": C_D, "alpha": alpha, "c": c,
                "mass_R": mR, "mass_r": mr}
