"""Critical exponent of the combinatorial modulus.

Sweeps aggregate per-annulus modulus bounds into a table indexed by
(exponent, separation); a tail-window fit classifies each exponent's table
row as decaying or not, and bisection on the exponent squeezes the
transition into a bracket.  Everything at finite depth is a desk-scale
stand-in for the scale-to-zero limit: the classification carries an honest
Inconclusive outcome, and the sampling policy is part of the output record.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._errors import (
    BracketInvalid,
    BudgetExceeded,
    DepthExceeded,
    InsufficientData,
)
from .filling import Filling, Vertex, build_filling
from .modulus import PathFamily, annulus_family, compute_modulus
from .spaces import MetricSpace, build_nets

__all__ = [
    "SamplePolicy",
    "DecayConfig",
    "ModulusTable",
    "Classification",
    "CEEstimate",
    "FamilyCache",
    "modulus_sweep",
    "classify_decay",
    "estimate_CE",
    "consistency_check",
    "ConsistencyReport",
]


@dataclass(frozen=True)
class SamplePolicy:
    """Deterministic vertex sampling for sweeps: up to `vertex_budget` base
    vertices per level, taken with a fixed stride, at every admissible level."""

    vertex_budget: int = 3
    include_level_zero: bool = True
    solver_tol: float = 0.02
    solver_max_iter: int = 120

    def level_slots(self, size: int) -> np.ndarray:
        if size <= self.vertex_budget:
            return np.arange(size)
        return np.unique(np.linspace(0, size - 1, self.vertex_budget).astype(int))


@dataclass(frozen=True)
class DecayConfig:
    """Tail-window decay thresholds.

    At least `min_entries` consecutive k rows must exist, but the slope fit
    runs on the deepest `window` of them: the first separations sit in a
    ramp-up regime (single-source families) and the last one at a given
    depth can be starved of interior sinks, so three deep values classify
    more honestly than four that straddle regimes.
    """

    theta_dec: float = 0.8
    eps_slope: float = 0.02
    floor: float = 1e-6
    window: int = 3
    min_entries: int = 4


@dataclass
class ModulusTable:
    L: float
    entries: dict = field(default_factory=dict)  # (p, k) -> entry dict
    sampling: dict = field(default_factory=dict)

    def ks_for(self, p: float) -> list[int]:
        return sorted(k for (pp, k) in self.entries if pp == p)

    def values_for(self, p: float) -> np.ndarray:
        return np.array([self.entries[(p, k)]["sup_value"]
                         for k in self.ks_for(p)])

    def merge(self, other: "ModulusTable") -> None:
        self.entries.update(other.entries)

    def monotonicity_violations(self, slack: float = 0.05) -> list:
        """Table rows should not increase in p at fixed k (densities can be
        clamped below 1); solver slop above `slack` is reported."""
        out = []
        ps = sorted({pp for (pp, _) in self.entries})
        ks = sorted({k for (_, k) in self.entries})
        for k in ks:
            have = [p for p in ps if (p, k) in self.entries]
            for p1, p2 in zip(have, have[1:]):
                v1 = self.entries[(p1, k)]["sup_value"]
                v2 = self.entries[(p2, k)]["sup_value"]
                if v2 > v1 * (1 + slack) + 1e-12:
                    out.append((k, p1, p2, v1, v2))
        return out


class FamilyCache:
    """Shared annulus families and warm-start paths across exponent probes.

    Family construction and the path constraints are exponent independent,
    so bisection re-solves warm instead of rebuilding."""

    def __init__(self, filling: Filling, L: float):
        self.filling = filling
        self.L = L
        self.families: dict = {}
        self.warm: dict = {}

    def family(self, v: Vertex, k: int) -> PathFamily:
        key = (v.level, v.net_index, k)
        fam = self.families.get(key)
        if fam is None:
            fam = annulus_family(self.filling, v, k, self.L)
            self.families[key] = fam
        return fam

    def warm_paths(self, v: Vertex, k: int):
        return self.warm.get((v.level, v.net_index, k))

    def store(self, v: Vertex, k: int, paths) -> None:
        if paths:
            self.warm[(v.level, v.net_index, k)] = paths


def modulus_sweep(filling: Filling, p: float, k_range, L: float,
                  policy: SamplePolicy | None = None,
                  cache: FamilyCache | None = None) -> ModulusTable:
    """Sup over sampled base vertices of certified modulus upper bounds,
    one table row per separation k."""
    policy = policy or SamplePolicy()
    if cache is None:
        cache = FamilyCache(filling, L)
    table = ModulusTable(L=L, sampling={
        "policy": policy, "a": filling.a, "lambda": filling.lam,
        "depth": filling.depth})
    for k in k_range:
        if k > filling.depth:
            raise DepthExceeded(f"k={k} exceeds depth {filling.depth}")
        per_vertex = []
        levels_used = []
        n_lo = 0 if policy.include_level_zero else 1
        for n in range(n_lo, filling.depth - k + 1):
            levels_used.append(n)
            for slot in policy.level_slots(filling.level_size(n)):
                v = filling.vertex(n, int(slot))
                fam = cache.family(v, k)
                res = compute_modulus(
                    fam, p, tol=policy.solver_tol,
                    max_iter=policy.solver_max_iter,
                    warm_paths=cache.warm_paths(v, k))
                cache.store(v, k, getattr(res, "active_paths", None))
                per_vertex.append((v, res.upper, res.lower, res.status))
        sup_value = max((u for (_, u, _, _) in per_vertex), default=0.0)
        table.entries[(p, k)] = {
            "sup_value": float(sup_value),
            "per_vertex": per_vertex,
            "levels": levels_used,
        }
    return table


@dataclass(frozen=True)
class Classification:
    kind: str  # Decaying | NonDecaying | Inconclusive
    ratio: float | None = None
    slope: float | None = None
    window: tuple = ()


def classify_decay(table: ModulusTable, p: float,
                   cfg: DecayConfig | None = None) -> Classification:
    """Least-squares slope of log sup-modulus over the tail window of k.

    Decaying when the fitted per-step ratio is at most theta_dec (an exact
    zero tail is Decaying(0)); NonDecaying when the slope is essentially
    flat and the values sit above the floor; otherwise Inconclusive.
    """
    cfg = cfg or DecayConfig()
    ks = table.ks_for(p)
    if len(ks) < cfg.min_entries:
        raise InsufficientData(
            f"need {cfg.min_entries} consecutive k entries, have {len(ks)}")
    ks = ks[-cfg.window:]
    vals = np.array([table.entries[(p, k)]["sup_value"] for k in ks])
    if vals[-1] <= cfg.floor:
        return Classification("Decaying", ratio=0.0, window=tuple(ks))
    fit_vals = np.maximum(vals, cfg.floor)
    slope = float(np.polyfit(ks, np.log(fit_vals), 1)[0])
    ratio = float(np.exp(slope))
    if slope <= np.log(cfg.theta_dec):
        return Classification("Decaying", ratio=ratio, slope=slope,
                              window=tuple(ks))
    if slope >= -cfg.eps_slope and vals.min() >= cfg.floor:
        return Classification("NonDecaying", ratio=ratio, slope=slope,
                              window=tuple(ks))
    return Classification("Inconclusive", ratio=ratio, slope=slope,
                          window=tuple(ks))


@dataclass
class CEEstimate:
    p_low: float
    p_high: float
    decay_diagnostics: dict
    params: dict
    table: ModulusTable
    inconclusive_ps: list = field(default_factory=list)

    @property
    def bracket(self) -> tuple[float, float]:
        return (self.p_low, self.p_high)


def estimate_CE(filling: Filling, L: float, p_bracket: tuple[float, float],
                tol_p: float, k_range, policy: SamplePolicy | None = None,
                decay_cfg: DecayConfig | None = None,
                max_steps: int = 28,
                cache: FamilyCache | None = None) -> CEEstimate:
    """Bisection on the exponent between non-decaying and decaying sweeps.

    If even the lower bracket end decays, the bracket collapses downward
    with p_low = 0 (scale counting never decays at exponent zero).
    Inconclusive probes move the probe interval up, conservatively, without
    claiming a non-decay certificate; they are recorded.
    """
    policy = policy or SamplePolicy()
    decay_cfg = decay_cfg or DecayConfig()
    cache = cache or FamilyCache(filling, L)
    table = ModulusTable(L=L)
    diagnostics: dict = {}
    inconclusive: list[float] = []

    def probe(p: float) -> Classification:
        sub = modulus_sweep(filling, p, k_range, L, policy, cache)
        table.merge(sub)
        c = classify_decay(sub, p, decay_cfg)
        diagnostics[p] = c
        return c

    p_lo, p_hi = p_bracket
    if not 0 < p_lo < p_hi:
        raise BracketInvalid(f"bad bracket {p_bracket}")
    c_lo = probe(p_lo)
    c_hi = probe(p_hi)
    if c_hi.kind != "Decaying":
        p_hi_wide = 2.0 * p_hi
        c_hi = probe(p_hi_wide)
        if c_hi.kind != "Decaying":
            raise BracketInvalid(
                f"no decay at p={p_hi} or {p_hi_wide}; widen the bracket")
        p_hi = p_hi_wide

    if c_lo.kind == "Decaying":
        lo, hi = 0.0, p_lo
        p_low, p_high = 0.0, p_lo
    else:
        lo, hi = p_lo, p_hi
        p_low, p_high = p_lo, p_hi
        if c_lo.kind == "Inconclusive":
            inconclusive.append(p_lo)
            p_low = 0.0

    steps = 0
    while hi - lo > tol_p:
        steps += 1
        if steps > max_steps:
            raise BudgetExceeded(
                f"bisection used {max_steps} probes without reaching tol_p")
        mid = 0.5 * (lo + hi)
        c = probe(mid)
        if c.kind == "Decaying":
            hi = mid
            p_high = min(p_high, mid)
        elif c.kind == "NonDecaying":
            lo = mid
            p_low = max(p_low, mid)
        else:
            inconclusive.append(mid)
            lo = mid
    params = {"a": filling.a, "lambda": filling.lam, "L": L,
              "depth": filling.depth, "k_range": list(k_range),
              "tol_p": tol_p, "policy": policy, "decay": decay_cfg}
    return CEEstimate(p_low=float(p_low), p_high=float(p_high),
                      decay_diagnostics=diagnostics, params=params,
                      table=table, inconclusive_ps=inconclusive)


@dataclass
class ConsistencyReport:
    estimates: list
    overlaps: list
    passed: bool


def consistency_check(space: MetricSpace, param_list: list[dict],
                      slack: float = 0.25) -> ConsistencyReport:
    """Run the full estimation once per parameter set and test whether the
    brackets pairwise intersect after inflating each by +- slack.

    Each entry needs keys a, lam, L, depth, k_range, p_bracket, tol_p and
    optionally policy.
    """
    if len(param_list) < 2:
        raise BracketInvalid("consistency check needs at least two parameter sets")
    estimates = []
    for prm in param_list:
        if not prm["a"] >= prm["lam"] >= 6:
            raise BracketInvalid("each parameter set needs a >= lambda >= 6")
        nets = build_nets(space, prm["a"], prm["depth"])
        filling = build_filling(nets, prm["lam"])
        est = estimate_CE(filling, prm["L"], prm["p_bracket"], prm["tol_p"],
                          prm["k_range"], policy=prm.get("policy"),
                          decay_cfg=prm.get("decay_cfg"))
        estimates.append(est)
    overlaps = []
    passed = True
    for i in range(len(estimates)):
        for j in range(i + 1, len(estimates)):
            lo = max(estimates[i].p_low - slack, estimates[j].p_low - slack)
            hi = min(estimates[i].p_high + slack, estimates[j].p_high + slack)
            ok = lo <= hi
            overlaps.append((i, j, ok))
            passed = passed and ok
    return ConsistencyReport(estimates=estimates, overlaps=overlaps,
                             passed=passed)
