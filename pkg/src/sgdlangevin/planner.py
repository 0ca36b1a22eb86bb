"""Non-asymptotic W2 bounds for constant-step LMC and their inversion into
(h, b, K) schedules for a target accuracy epsilon.

SGD schedules rely on the identity h^2 n(n-b)/b = 2h when h = 2b/(n(n-b)):
idealized-noise SGD with that pairing *is* LMC on f = sum g_i, so the LMC
bounds apply with m = n m_g, M = n M_g, L = n L_g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InfeasiblePlan, InvalidArgument, UnsupportedTarget

SLACK = 1e-12
THEOREMS = ("lmc_first_order", "lmc_second_order", "sgd_first_order", "sgd_second_order")


@dataclass(frozen=True)
class Condition:
    name: str
    lhs: float
    rhs: float
    relation: str = "<="

    @property
    def passed(self) -> bool:
        tol = SLACK * max(abs(self.lhs), abs(self.rhs))
        if self.relation in ("<=", "<"):
            return self.lhs <= self.rhs + tol
        return self.lhs >= self.rhs - tol

    def to_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "relation": self.relation, "pass": self.passed}


@dataclass
class Plan:
    theorem: str
    epsilon: float
    h: float
    h_eff: float
    b: int
    K: int
    conditions: list = field(default_factory=list)
    b_real: float | None = None
    budget_bound: float | None = None
    bound_value: float | None = None
    notes: list = field(default_factory=list)

    @property
    def budget(self) -> int:
        return self.K * self.b

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.conditions)

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "h": self.h,
            "h_eff": self.h_eff,
            "b": self.b,
            "K": self.K,
            "budget": self.budget,
            "epsilon": self.epsilon,
            "b_real": self.b_real,
            "budget_bound": self.budget_bound,
            "bound_value": self.bound_value,
            "conditions": [c.to_dict() for c in self.conditions],
            "notes": list(self.notes),
        }


def _positive(**kw):
    for name, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise InvalidArgument(f"{name} must be positive and finite, got {v}")


# ---------------------------------------------------------------- bounds


def lmc_bound_first_order_terms(h, K, W0, m, M, p):
    """(contraction term, noise term) of the first-order LMC bound."""
    _positive(m=m, M=M, p=p)
    if not 0 < h < 2.0 / M:
        raise InvalidArgument(f"need 0 < h < 2/M = {2.0 / M}, got h={h}")
    if W0 < 0 or K < 0:
        raise InvalidArgument("need W0 >= 0 and K >= 0")
    root = math.sqrt(h * p)
    if h <= 2.0 / (m + M):
        return (1.0 - m * h) ** K * W0, 1.65 * (M / m) * root
    return (M * h - 1.0) ** K * W0, 1.65 * M * h / (2.0 - M * h) * root


def lmc_bound_first_order(h, K, W0, m, M, p) -> float:
    c, noise = lmc_bound_first_order_terms(h, K, W0, m, M, p)
    return c + noise


def _second_order_terms(h, K, W0, m, M, L, p):
    return ((1.0 - m * h) ** K * W0,
            L * h * p / (2.0 * m),
            11.0 * M**1.5 * h * math.sqrt(p) / (5.0 * m))


def lmc_bound_second_order_terms(h, K, W0, m, M, L, p):
    """(contraction, Hessian-Lipschitz, smoothness) terms of the second-order bound."""
    _positive(m=m, M=M, p=p)
    if L is None or L < 0:
        raise InvalidArgument(f"need L >= 0, got {L}")
    if not 0 < h < 2.0 / (m + M):
        raise InvalidArgument(f"need 0 < h < 2/(m+M) = {2.0 / (m + M)}, got h={h}")
    if W0 < 0 or K < 0:
        raise InvalidArgument("need W0 >= 0 and K >= 0")
    return _second_order_terms(h, K, W0, m, M, L, p)


def lmc_bound_second_order(h, K, W0, m, M, L, p) -> float:
    return sum(lmc_bound_second_order_terms(h, K, W0, m, M, L, p))


def w0_upper_bound(f_at_theta0, m, p) -> float:
    """Bound on W2(delta_theta0, pi) for a nonnegative potential."""
    if f_at_theta0 < 0:
        raise InvalidArgument(f"potential must be nonnegative at theta0, got {f_at_theta0}")
    _positive(m=m, p=p)
    return math.sqrt(p / m) + math.sqrt(2.0 * f_at_theta0 / m)


# ---------------------------------------------------------------- planning


def _iterations(Q, rate, notes):
    """ceil(log(Q) / rate), with K = 1 when Q <= 1."""
    if Q <= 1:
        notes.append(f"Q = {Q:.6g} <= 1: target accuracy is looser than the initial distance; K = 1")
        return 1
    return max(1, math.ceil(math.log(Q) / rate))


def _make_sound(K, bound_of, contraction, W0, noise, epsilon, notes):
    """Smallest K' >= K with bound_of(K') <= epsilon (noise already below epsilon)."""
    if bound_of(K) <= epsilon * (1 + SLACK) or W0 == 0:
        return K
    room = epsilon - noise
    if room <= 0 or contraction >= 1:
        return K
    if contraction <= 0:
        target = K + 1
    else:
        target = math.ceil(math.log(W0 / room) / -math.log(contraction))
    new_K = max(K + 1, target)
    while bound_of(new_K) > epsilon * (1 + SLACK):
        new_K += 1
    notes.append(f"K raised from {K} to {new_K} so the bound with the W0 upper bound is <= epsilon")
    return new_K


def _batch(h, n, notes):
    b_real = h * n * n / (2.0 + h * n)
    b_int = max(1, math.floor(b_real * (1 + SLACK)))
    h_eff = 2.0 * b_int / (n * (n - b_int))
    if b_int != b_real:
        notes.append(f"batch size rounded down from {b_real:.6g} to {b_int}; h_eff = 2b/(n(n-b))")
    return b_real, b_int, h_eff


def plan_lmc(epsilon, m, M, p, f_at_theta0) -> Plan:
    """Full-gradient LMC schedule splitting epsilon evenly between the two bound terms."""
    _positive(epsilon=epsilon, m=m, M=M, p=p)
    if M < m:
        raise InvalidArgument(f"need M >= m, got m={m}, M={M}")
    notes = []
    cap_split = 2.0 / (m + M)
    cap_noise = m * m * epsilon**2 / (11.0 * M * M * p)
    h = min(cap_split, cap_noise)
    Q = (2.0 * f_at_theta0 + m * p) / (0.5 * m * epsilon)
    K = _iterations(Q, m * h, notes)
    W0 = w0_upper_bound(f_at_theta0, m, p)
    _, noise = lmc_bound_first_order_terms(h, 0, W0, m, M, p)
    K = _make_sound(K, lambda k: lmc_bound_first_order(h, k, W0, m, M, p),
                    1.0 - m * h, W0, noise, epsilon, notes)
    value = lmc_bound_first_order(h, K, W0, m, M, p)
    conditions = [
        Condition("h <= 2/(m+M)", h, cap_split),
        Condition("h <= m^2 eps^2/(11 M^2 p)", h, cap_noise),
        Condition("h*K >= log(Q)/m", h * K, math.log(Q) / m if Q > 1 else 0.0, ">="),
        Condition("bound(h, K, W0) <= eps", value, epsilon),
    ]
    return Plan("lmc_first_order", epsilon, h, h, 1, K, conditions,
                bound_value=value, notes=notes)


def _require(conditions, theorem):
    failed = [c for c in conditions if not c.passed]
    if failed:
        names = "; ".join(f"{c.name} ({c.lhs:.6g} {c.relation} {c.rhs:.6g} fails)" for c in failed)
        raise InfeasiblePlan(f"{theorem}: {names}", conditions)


def sgd_first_order_budget_bound(epsilon, n, p, kappa, m_g, f_at_theta0) -> float:
    """Right-hand side of the Kb condition of the first-order SGD schedule."""
    Qp = (2.0 * f_at_theta0 + m_g * p) / (0.1 * m_g * epsilon)
    return 4.0 * p * kappa**2 * n * math.log(Qp) / (m_g * (8.0 * p * kappa**2 + epsilon**2 * n))


def sgd_second_order_budget_bound(epsilon, n, p, kappa, m_g, M_g, L_g, f_at_theta0) -> float:
    S = math.sqrt(p * max(p, n))
    c = kappa * L_g * math.sqrt(M_g) * S
    Qpp = (2.0 * f_at_theta0 + m_g * p) / (0.3 * m_g * epsilon)
    return 4.0 * n * c * math.log(Qpp) / (m_g * (8.0 * c + n * epsilon))


def plan_sgd_first_order(epsilon, target, f_at_theta0) -> Plan:
    """Idealized-noise SGD schedule with h = eps^2/(4 kappa^2 p), b = hn^2/(2+hn)."""
    _positive(epsilon=epsilon)
    if f_at_theta0 < 0:
        raise InvalidArgument("f(theta0) must be nonnegative")
    n, p, m_g, M_g, kappa = target.n, target.dim, target.m_g, target.M_g, target.kappa
    window = [
        Condition("n >= 9", n, 9, ">="),
        Condition("eps >= 3*kappa*sqrt(p)/n", epsilon, 3 * kappa * math.sqrt(p) / n, ">="),
        Condition("eps <= 2*kappa*sqrt(p)/sqrt(n*M_g)", epsilon, 2 * kappa * math.sqrt(p) / math.sqrt(n * M_g)),
    ]
    _require(window, "sgd_first_order")
    notes = []
    h = epsilon**2 / (4.0 * kappa**2 * p)
    b_real, b, h_eff = _batch(h, n, notes)
    Qp = (2.0 * f_at_theta0 + m_g * p) / (0.1 * m_g * epsilon)
    K = _iterations(Qp, m_g * n * h_eff, notes)
    m, M = n * m_g, n * M_g
    W0 = w0_upper_bound(f_at_theta0, m, p)
    _, noise = lmc_bound_first_order_terms(h_eff, 0, W0, m, M, p)
    K = _make_sound(K, lambda k: lmc_bound_first_order(h_eff, k, W0, m, M, p),
                    1.0 - m * h_eff, W0, noise, epsilon, notes)
    value = lmc_bound_first_order(h_eff, K, W0, m, M, p)
    conditions = window + [
        Condition("b_real >= 1", b_real, 1.0, ">="),
        Condition("h_eff <= 1/(n*M_g)", h_eff, 1.0 / (n * M_g)),
        Condition("bound(h_eff, K, W0) <= eps", value, epsilon),
    ]
    _require(conditions, "sgd_first_order")
    return Plan("sgd_first_order", epsilon, h, h_eff, b, K, conditions, b_real=b_real,
                budget_bound=sgd_first_order_budget_bound(epsilon, n, p, kappa, m_g, f_at_theta0),
                bound_value=value, notes=notes)


def plan_sgd_second_order(epsilon, target, f_at_theta0) -> Plan:
    """Idealized-noise SGD schedule using Hessian-Lipschitz smoothness."""
    _positive(epsilon=epsilon)
    if f_at_theta0 < 0:
        raise InvalidArgument("f(theta0) must be nonnegative")
    L_g = target.L_g
    if L_g is None:
        raise UnsupportedTarget("unsupported-target: target declares no Hessian-Lipschitz constant L_g")
    n, p, m_g, M_g, kappa = target.n, target.dim, target.m_g, target.M_g, target.kappa
    S = math.sqrt(p * max(p, n))
    constants = [
        Condition("L_g >= 1", L_g, 1.0, ">="),
        Condition("M_g >= 1", M_g, 1.0, ">="),
        Condition("kappa >= 1", kappa, 1.0, ">="),
        Condition("n >= 2", n, 2, ">="),
    ]
    if L_g <= 0 or n < 2:
        _require(constants, "sgd_second_order")
    scaled = epsilon / (4.0 * kappa * L_g * math.sqrt(M_g))
    window = constants + [
        Condition("eps/(4*kappa*L_g*sqrt(M_g)) >= 2*sqrt(p*max(p,n))/(n(n-1))",
                  scaled, 2 * S / (n * (n - 1)), ">="),
        Condition("eps/(4*kappa*L_g*sqrt(M_g)) <= sqrt(p*max(p,n))/(M_g*n)", scaled, S / (M_g * n)),
    ]
    _require(window, "sgd_second_order")
    notes = []
    h = epsilon / (4.0 * kappa * L_g * math.sqrt(M_g) * S)
    b_real, b, h_eff = _batch(h, n, notes)
    Qpp = (2.0 * f_at_theta0 + m_g * p) / (0.3 * m_g * epsilon)
    K = _iterations(Qpp, m_g * n * h_eff, notes)
    m, M, L = n * m_g, n * M_g, n * L_g
    W0 = w0_upper_bound(f_at_theta0, m, p)
    _, t2, t3 = _second_order_terms(h_eff, 0, W0, m, M, L, p)
    K = _make_sound(K, lambda k: sum(_second_order_terms(h_eff, k, W0, m, M, L, p)),
                    1.0 - m * h_eff, W0, t2 + t3, epsilon, notes)
    value = sum(_second_order_terms(h_eff, K, W0, m, M, L, p))
    conditions = window + [
        Condition("b_real >= 1", b_real, 1.0, ">="),
        Condition("h_eff < 2/(m+M)", h_eff, 2.0 / (m + M), "<"),
        Condition("bound(h_eff, K, W0) <= eps", value, epsilon),
    ]
    _require(conditions, "sgd_second_order")
    return Plan("sgd_second_order", epsilon, h, h_eff, b, K, conditions, b_real=b_real,
                budget_bound=sgd_second_order_budget_bound(epsilon, n, p, kappa, m_g, M_g, L_g, f_at_theta0),
                bound_value=value, notes=notes)


SGD_PLANNERS = {"sgd_first_order": plan_sgd_first_order, "sgd_second_order": plan_sgd_second_order}


def candidate_plans(epsilon, target, f_at_theta0):
    """Try every SGD theorem; returns {theorem: Plan or exception}."""
    out = {}
    for name, planner in SGD_PLANNERS.items():
        try:
            out[name] = planner(epsilon, target, f_at_theta0)
        except (InfeasiblePlan, UnsupportedTarget) as exc:
            out[name] = exc
    return out


def best_plan(epsilon, target, f_at_theta0) -> Plan:
    """The valid SGD plan with the smallest budget K*b (ties go to first order)."""
    results = candidate_plans(epsilon, target, f_at_theta0)
    plans = [r for r in results.values() if isinstance(r, Plan)]
    if not plans:
        conditions, reasons = [], []
        for name, exc in results.items():
            reasons.append(str(exc))
            conditions.extend(getattr(exc, "conditions", []))
        raise InfeasiblePlan("no valid plan: " + " | ".join(reasons), conditions)
    # dict order puts sgd_first_order first; min() keeps the first of equals
    return min(plans, key=lambda pl: pl.budget)
