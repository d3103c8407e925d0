"""Weight functions on a filling, genealogy products, and hypothesis checks.

A weight assignment maps every filling vertex to a positive value; the
genealogy product pi multiplies the weights along the ancestor chain from
the root.  The checkers certify the bounded-ratio hypotheses (uniform
bounds, horizontal comparability, horizontal escape length, child mass
decay) and their simplified sources, and the sigma-to-rho construction
turns an admissible-density-style input into a weight satisfying all of
them with explicit constants.

Two printed-summand quirks of the source conditions are resolved here the
evident way: the escape-path and child-mass sums run over the path / child
variable (sigma(w), not sigma(v)).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from ._errors import (
    HypothesisFailure,
    NotHorizontal,
    PostconditionFailure,
    UncertifiedParams,
)
from ._graphs import VertexWeightedGraph, min_edge_weight_path
from .filling import Filling, Vertex

__all__ = [
    "WeightAssignment",
    "HypothesisReport",
    "CertifiedParams",
    "constant_weights",
    "weights_from_function",
    "genealogy_pi",
    "check_H1",
    "check_H2",
    "check_H3prime",
    "check_H4",
    "check_H4_tilde",
    "check_S1",
    "check_S2",
    "rho_star",
    "pi_star",
    "horizontal_length",
    "hat_tau",
    "hat_ell_1",
    "build_rho_from_sigma",
    "sigma_levels_from_function",
    "escape_sets",
    "weights_to_json",
    "weights_from_json_doc",
]


@dataclass(frozen=True)
class CertifiedParams:
    eta_minus: float | None = None
    eta_plus: float | None = None
    K0: float | None = None
    p: float | None = None


@dataclass(frozen=True)
class HypothesisReport:
    hypothesis: str
    passed: bool
    witness: object = None
    constants: dict = field(default_factory=dict)
    notes: str = ""


class WeightAssignment:
    """Per-vertex weights rho with memoized genealogy products pi.

    Values must be positive; the (0,1) range is certified by the H1 check
    rather than enforced here, so that out-of-range fixtures can be built
    and reported on.
    """

    def __init__(self, filling: Filling, rho_levels: list[np.ndarray],
                 params: CertifiedParams | None = None):
        if len(rho_levels) != filling.depth + 1:
            raise ValueError("need one weight array per filling level")
        self.filling = filling
        self.rho_levels = [np.asarray(rl, dtype=np.float64) for rl in rho_levels]
        for k, rl in enumerate(self.rho_levels):
            if rl.size != filling.level_size(k):
                raise ValueError(f"level {k} weight array has wrong size")
            if not (rl > 0).all():
                raise ValueError("weights must be positive")
        self.params = params or CertifiedParams()
        self._pi = None
        self._rho_star = None
        self._pi_star = None

    @property
    def pi_levels(self) -> list[np.ndarray]:
        if self._pi is None:
            pis = [self.rho_levels[0].copy()]
            for k in range(1, self.filling.depth + 1):
                pis.append(self.rho_levels[k] * pis[k - 1][self.filling.parent_slot[k]])
            self._pi = pis
        return self._pi

    def rho(self, v: Vertex) -> float:
        return float(self.rho_levels[v.level][self.filling.slot_of(v)])

    def pi(self, v: Vertex) -> float:
        return float(self.pi_levels[v.level][self.filling.slot_of(v)])

    def _star(self, levels: list[np.ndarray]) -> list[np.ndarray]:
        out = []
        for k, vals in enumerate(levels):
            indptr, indices = self.filling.horiz[k]
            res = vals.copy()
            for s in range(vals.size):
                nb = indices[indptr[s]:indptr[s + 1]]
                if nb.size:
                    res[s] = min(res[s], vals[nb].min())
            out.append(res)
        return out

    @property
    def rho_star_levels(self) -> list[np.ndarray]:
        if self._rho_star is None:
            self._rho_star = self._star(self.rho_levels)
        return self._rho_star

    @property
    def pi_star_levels(self) -> list[np.ndarray]:
        if self._pi_star is None:
            self._pi_star = self._star(self.pi_levels)
        return self._pi_star

    def certify(self, p: float | None = None) -> "WeightAssignment":
        """Attach the tightest H1/H2 constants (and optionally p) in place."""
        h1 = check_H1(self)
        h2 = check_H2(self)
        if not h1.passed:
            raise HypothesisFailure(f"H1 fails at {h1.witness}")
        self.params = CertifiedParams(
            eta_minus=h1.constants["eta_minus"],
            eta_plus=h1.constants["eta_plus"],
            K0=h2.constants["K0"], p=p if p is not None else self.params.p)
        return self


def constant_weights(filling: Filling, c: float) -> WeightAssignment:
    return WeightAssignment(
        filling, [np.full(filling.level_size(k), float(c))
                  for k in range(filling.depth + 1)])


def weights_from_function(filling: Filling, fn) -> WeightAssignment:
    levels = []
    for k in range(filling.depth + 1):
        levels.append(np.array([fn(filling.vertex(k, s))
                                for s in range(filling.level_size(k))]))
    return WeightAssignment(filling, levels)


def genealogy_pi(weights: WeightAssignment, v: Vertex) -> float:
    """Product of rho along the ancestor chain from the root through v."""
    return weights.pi(v)


def rho_star(weights: WeightAssignment, v: Vertex) -> float:
    """Min of rho over the closed horizontal neighborhood of v."""
    return float(weights.rho_star_levels[v.level][weights.filling.slot_of(v)])


def pi_star(weights: WeightAssignment, v: Vertex) -> float:
    return float(weights.pi_star_levels[v.level][weights.filling.slot_of(v)])


# ---------------------------------------------------------------------------
# Hypothesis checkers (pure: same input, same report)
# ---------------------------------------------------------------------------


def check_H1(weights: WeightAssignment) -> HypothesisReport:
    """Tightest uniform bounds eta- <= rho <= eta+; passes iff they land in
    (0, 1)."""
    lo, hi = np.inf, -np.inf
    witness = None
    for k, rl in enumerate(weights.rho_levels):
        lo = min(lo, float(rl.min()))
        hi = max(hi, float(rl.max()))
        bad = np.nonzero(rl >= 1.0)[0]
        if bad.size and witness is None:
            witness = weights.filling.vertex(k, int(bad[0]))
    passed = 0.0 < lo <= hi < 1.0
    return HypothesisReport("H1", passed, witness if not passed else None,
                            {"eta_minus": lo, "eta_plus": hi})


def check_H2(weights: WeightAssignment) -> HypothesisReport:
    """Tightest horizontal comparability constant for pi; always finite on a
    finite filling, so the report's value is the content."""
    K0 = 1.0
    worst = None
    for k, piv in enumerate(weights.pi_levels):
        indptr, indices = weights.filling.horiz[k]
        for s in range(piv.size):
            nb = indices[indptr[s]:indptr[s + 1]]
            if nb.size:
                ratio = float((piv[s] / piv[nb]).max())
                if ratio > K0:
                    K0 = ratio
                    worst = (weights.filling.vertex(k, s), k)
    return HypothesisReport("H2", True, None, {"K0": K0},
                            notes=f"attained near {worst}" if worst else "no horizontal edges")


def check_H4(weights: WeightAssignment, p: float) -> HypothesisReport:
    """Child mass decay: sum over children of rho^p stays below 1 at every
    vertex (the one-generation form, which propagates to all generations)."""
    if p <= 0:
        raise ValueError("p must be positive")
    f = weights.filling
    worst_slack, witness = -np.inf, None
    for k in range(f.depth):
        child_rho = weights.rho_levels[k + 1]
        sums = np.zeros(f.level_size(k))
        np.add.at(sums, f.parent_slot[k + 1], child_rho ** p)
        slack = sums - 1.0
        s = int(np.argmax(slack))
        if slack[s] > worst_slack:
            worst_slack = float(slack[s])
            witness = f.vertex(k, s)
    passed = worst_slack <= 1e-12
    return HypothesisReport("H4", passed, witness if not passed else None,
                            {"p": p, "worst_slack": worst_slack})


def check_H4_tilde(weights: WeightAssignment, p: float) -> HypothesisReport:
    """Two-sided child mass comparability; reports the tightest constant."""
    f = weights.filling
    C = 1.0
    for k in range(f.depth):
        child_rho = weights.rho_levels[k + 1]
        sums = np.zeros(f.level_size(k))
        np.add.at(sums, f.parent_slot[k + 1], child_rho ** p)
        C = max(C, float(sums.max()), float(1.0 / sums.min()))
    return HypothesisReport("H4~", True, None, {"p": p, "C": C})


def escape_sets(filling: Filling, v: Vertex):
    """Start and escape slot sets of the level-(level+1) horizontal family:
    paths start with base point in B_v and end outside 2*B_v."""
    k = v.level
    if k + 1 > filling.depth:
        return None
    pts = filling.levels[k + 1]
    d = filling.space.dist_to(v.net_index, pts)
    r = filling.a ** (-k)
    sources = np.nonzero(d < r)[0]
    sinks = np.nonzero(d >= 2.0 * r)[0]
    return sources, sinks


def _level_edge_costs(filling: Filling, k: int, node_vals: np.ndarray):
    indptr, indices = filling.horiz[k]
    deg = np.diff(indptr)
    tails = np.repeat(np.arange(filling.level_size(k)), deg)
    return np.minimum(node_vals[tails], node_vals[indices])


def check_H3prime(weights: WeightAssignment, max_level: int | None = None,
                  vertex_budget: int | None = None) -> HypothesisReport:
    """Horizontal escape length: every level-(k+1) path from B_v to outside
    2*B_v has pairwise-min rho* length at least 1.

    Empty escape families pass vacuously (logged in the notes).
    """
    f = weights.filling
    kmax = f.depth - 1 if max_level is None else min(max_level, f.depth - 1)
    worst = (np.inf, None, None)
    vacuous = 0
    checked = 0
    for k in range(1, kmax + 1):
        star = weights.rho_star_levels[k + 1]
        costs = _level_edge_costs(f, k + 1, star)
        indptr, indices = f.horiz[k + 1]
        slots = range(f.level_size(k))
        if vertex_budget is not None and f.level_size(k) > vertex_budget:
            stride = f.level_size(k) // vertex_budget + 1
            slots = range(0, f.level_size(k), stride)
        for s in slots:
            v = f.vertex(k, s)
            se = escape_sets(f, v)
            if se is None:
                continue
            sources, sinks = se
            if sources.size == 0 or sinks.size == 0:
                vacuous += 1
                continue
            val, path = min_edge_weight_path(indptr, indices, costs, sources, sinks)
            checked += 1
            if val == np.inf:
                vacuous += 1
                continue
            if val < worst[0]:
                worst = (val, v, path)
    passed = worst[0] >= 1.0 or checked == 0
    witness = None
    if not passed:
        _, v, path = worst
        witness = (v, [weights.filling.vertex(v.level + 1, int(s)) for s in path])
    return HypothesisReport(
        "H3'", passed, witness,
        {"min_escape_length": worst[0] if checked else np.inf},
        notes=f"{vacuous} vacuous families, {checked} checked")


def check_S1(sigma_levels: list[np.ndarray], filling: Filling,
             max_level: int | None = None) -> HypothesisReport:
    """Escape paths carry total sigma mass at least 1 (summand sigma(w))."""
    kmax = filling.depth - 1 if max_level is None else min(max_level, filling.depth - 1)
    worst = (np.inf, None, None)
    checked = vacuous = 0
    for k in range(0, kmax + 1):
        vals = np.asarray(sigma_levels[k + 1], dtype=np.float64)
        indptr, indices = filling.horiz[k + 1]
        for s in range(filling.level_size(k)):
            v = filling.vertex(k, s)
            se = escape_sets(filling, v)
            if se is None:
                continue
            sources, sinks = se
            if sources.size == 0 or sinks.size == 0:
                vacuous += 1
                continue
            g = VertexWeightedGraph(indptr, indices, sources)
            val, path = g.min_path(vals, sinks)
            checked += 1
            if val == np.inf:
                vacuous += 1
                continue
            if val < worst[0]:
                worst = (val, v, path)
    passed = worst[0] >= 1.0 or checked == 0
    witness = None if passed else (worst[1], worst[2])
    return HypothesisReport("S1", passed, witness,
                            {"min_escape_mass": worst[0] if checked else np.inf},
                            notes=f"{vacuous} vacuous, {checked} checked")


def check_S2(sigma_levels: list[np.ndarray], filling: Filling, p: float,
             eta0: float) -> HypothesisReport:
    """Per-vertex child sigma^p mass stays below eta0 (summand sigma(w))."""
    worst, witness = -np.inf, None
    for k in range(filling.depth):
        vals = np.asarray(sigma_levels[k + 1], dtype=np.float64)
        sums = np.zeros(filling.level_size(k))
        np.add.at(sums, filling.parent_slot[k + 1], vals ** p)
        s = int(np.argmax(sums))
        if sums[s] > worst:
            worst, witness = float(sums[s]), filling.vertex(k, s)
    passed = worst <= eta0 * (1 + 1e-12)
    return HypothesisReport("S2", passed, witness if not passed else None,
                            {"eta0": eta0, "worst_child_mass": max(worst, 0.0)})


# ---------------------------------------------------------------------------
# Lengths
# ---------------------------------------------------------------------------


def _require_d2_step(filling: Filling, u: Vertex, v: Vertex) -> str:
    """Classify a consecutive pair as 'horizontal' or 'vertical' D2 edge."""
    if u.level == v.level:
        su, sv = filling.slot_of(u), filling.slot_of(v)
        if sv in filling.horiz_neighbors(u.level, su):
            return "horizontal"
        raise NotHorizontal(f"{u} and {v} share no horizontal edge")
    if abs(u.level - v.level) == 1:
        child = u if u.level > v.level else v
        parent = v if child is u else u
        if filling.parent(child) == parent:
            return "vertical"
    raise NotHorizontal(f"{u} -> {v} is not a D2 edge")


def horizontal_length(weights: WeightAssignment, path: list[Vertex]) -> float:
    """Sum over consecutive horizontal edges of min(rho*, rho*)."""
    if len(path) < 2:
        return 0.0
    f = weights.filling
    total = 0.0
    for u, v in zip(path, path[1:]):
        if u.level != v.level or _require_d2_step(f, u, v) != "horizontal":
            raise NotHorizontal(f"{u} -> {v} is not horizontal")
        total += min(rho_star(weights, u), rho_star(weights, v))
    return total


def hat_tau(values: np.ndarray, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Twice the max of `values` over the closed 2-hop graph neighborhood."""
    def nb_max(x):
        out = x.copy()
        for s in range(x.size):
            nb = indices[indptr[s]:indptr[s + 1]]
            if nb.size:
                out[s] = max(out[s], x[nb].max())
        return out

    vals = np.asarray(values, dtype=np.float64)
    return 2.0 * nb_max(nb_max(vals))


def hat_ell_1(weights: WeightAssignment, path: list[Vertex]) -> float:
    """Mixed path length: horizontal edges cost min(pi*, pi*), a parent-child
    edge costs K0 / eta- times pi* of the child."""
    prm = weights.params
    if prm.K0 is None or prm.eta_minus is None:
        raise UncertifiedParams("hat_ell_1 needs certified (K0, eta-)")
    f = weights.filling
    total = 0.0
    for u, v in zip(path, path[1:]):
        kind = _require_d2_step(f, u, v)
        if kind == "horizontal":
            total += min(pi_star(weights, u), pi_star(weights, v))
        else:
            child = u if u.level > v.level else v
            total += prm.K0 / prm.eta_minus * pi_star(weights, child)
    return total


# ---------------------------------------------------------------------------
# sigma -> rho construction
# ---------------------------------------------------------------------------


def sigma_levels_from_function(filling: Filling, fn) -> list[np.ndarray]:
    return [np.array([float(fn(filling.vertex(k, s)))
                      for s in range(filling.level_size(k))])
            for k in range(filling.depth + 1)]


def default_eta0(filling: Filling, p: float) -> float:
    """Closed-form child-mass budget wired from the observed max horizontal
    degree M2: 2^(p+1) (M2^2+1) (M2+1)^3 eta0 = 2^-p."""
    M2 = max(filling.max_horizontal_degree) if filling.max_horizontal_degree else 0
    return 2.0 ** (-p) / (2.0 ** (p + 1) * (M2 ** 2 + 1) * (M2 + 1) ** 3)


def build_rho_from_sigma(filling: Filling, sigma_levels: list[np.ndarray],
                         p: float, eta0: float | None = None) -> WeightAssignment:
    """Lift an escape-admissible sigma to a weight rho with certified
    constants.

    Checks S1 and S2 up front, then builds rho level by level: tau thickens
    sigma by the uniform floor, tau-hat takes the doubled 2-hop max, and each
    level is smoothed so that horizontal pi ratios never exceed 1/eta-.  The
    returned weights satisfy rho >= tau-hat, the horizontal comparability
    with K0 = 1/eta-, the local upper bound by neighboring tau-hat, uniform
    bounds eta- <= rho <= 1/2, and the child mass decay at exponent p; all
    are re-verified and a violation raises PostconditionFailure.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if eta0 is None:
        eta0 = default_eta0(filling, p)
    M1 = max((int(np.bincount(filling.parent_slot[k]).max())
              for k in range(1, filling.depth + 1)), default=1)
    eta_minus = (eta0 / M1) ** (1.0 / p)

    s1 = check_S1(sigma_levels, filling)
    if not s1.passed:
        raise HypothesisFailure(f"S1 fails: {s1.constants}, witness {s1.witness}")
    s2 = check_S2(sigma_levels, filling, p, eta0)
    if not s2.passed:
        raise HypothesisFailure(f"S2 fails: {s2.constants}, witness {s2.witness}")

    tau_hat = []
    for k in range(filling.depth + 1):
        sig = np.asarray(sigma_levels[k], dtype=np.float64)
        tau = (sig ** p + eta_minus ** p) ** (1.0 / p)
        indptr, indices = filling.horiz[k]
        tau_hat.append(hat_tau(tau, indptr, indices))

    K = 1.0 / eta_minus
    rho_levels = [tau_hat[0].copy()]
    pi0 = rho_levels[0].copy()
    for k in range(filling.depth):
        ps = filling.parent_slot[k + 1]
        pi1 = tau_hat[k + 1] * pi0[ps]
        indptr, indices = filling.horiz[k + 1]
        pi_hat = pi1.copy()
        for s in range(pi1.size):
            nb = indices[indptr[s]:indptr[s + 1]]
            cap = pi1[s] if nb.size == 0 else max(pi1[s], pi1[nb].max())
            pi_hat[s] = max(pi1[s], cap / K)
        rho_levels.append(pi_hat / pi0[ps])
        pi0 = pi_hat

    out = WeightAssignment(filling, rho_levels,
                           CertifiedParams(eta_minus=eta_minus, eta_plus=0.5,
                                           K0=K, p=p))
    _verify_construction(out, tau_hat, eta_minus, K, p)
    return out


def _verify_construction(w: WeightAssignment, tau_hat, eta_minus, K, p):
    f = w.filling
    tol = 1e-9
    for k in range(f.depth + 1):
        rl = w.rho_levels[k]
        if not (rl >= tau_hat[k] * (1 - tol)).all():
            raise PostconditionFailure(f"rho < tau_hat at level {k}")
        indptr, indices = f.horiz[k]
        for s in range(rl.size):
            nb = indices[indptr[s]:indptr[s + 1]]
            cap = tau_hat[k][s] if nb.size == 0 else max(
                tau_hat[k][s], tau_hat[k][nb].max())
            if rl[s] > cap * (1 + tol):
                raise PostconditionFailure(
                    f"rho exceeds neighborhood tau_hat at {f.vertex(k, s)}")
        piv = w.pi_levels[k]
        for s in range(rl.size):
            nb = indices[indptr[s]:indptr[s + 1]]
            if nb.size and (piv[s] / piv[nb]).max() > K * (1 + tol):
                raise PostconditionFailure(f"pi ratio above K0 at {f.vertex(k, s)}")
        if not ((rl >= eta_minus * (1 - tol)).all() and (rl <= 0.5 * (1 + tol)).all()):
            raise PostconditionFailure(f"H1 bounds violated at level {k}")
    for k in range(f.depth):
        sums = np.zeros(f.level_size(k))
        np.add.at(sums, f.parent_slot[k + 1], w.rho_levels[k + 1] ** p)
        if sums.max() > 2.0 ** (-p) * (1 + tol):
            raise PostconditionFailure("child rho^p mass above 2^-p")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def weights_to_json(weights: WeightAssignment) -> str:
    """JSON map "(level,index)" -> decimal string, stable ordering."""
    doc = {}
    f = weights.filling
    for k in range(f.depth + 1):
        for s in range(f.level_size(k)):
            v = f.vertex(k, s)
            doc[f"({v.level},{v.net_index})"] = repr(
                float(weights.rho_levels[k][s]))
    return json.dumps({"weights": doc}, sort_keys=True, indent=1)


def weights_from_json_doc(filling: Filling, doc: dict) -> WeightAssignment:
    table = doc["weights"]
    if "constant" in doc:
        return constant_weights(filling, float(doc["constant"]))
    levels = []
    for k in range(filling.depth + 1):
        vals = np.empty(filling.level_size(k))
        for s in range(filling.level_size(k)):
            v = filling.vertex(k, s)
            vals[s] = float(table[f"({v.level},{v.net_index})"])
        levels.append(vals)
    return WeightAssignment(filling, levels)
