"""Derived constants and the sufficient conditions built from them.

Every check is reported with its numeric value and a signed margin so that
callers can see how close a system is to losing a guarantee.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import ImpulseFamily, NetworkSpec, TimeStructure, impulse_lipschitz_on_box

__all__ = [
    "DerivedConstants",
    "HypothesisEntry",
    "HypothesisReport",
    "derive_constants",
    "check_hypotheses",
    "h3_quantity",
    "h4_quantity",
    "decay_margin",
]


@dataclass(frozen=True)
class DerivedConstants:
    k1: float
    k2: float
    k3: float
    k4: float
    mu: float
    gamma: float
    lambda_: float | None
    R_const: float | None
    alpha1: float | None
    alpha2: float | None
    h_bound: float | None
    # inputs the formulas were evaluated with
    ell: float
    theta_bar: float
    tau_under: float
    p: int
    p_period: int
    omega: float | None
    m: int
    sum_abs_d: float
    notes: tuple = field(default_factory=tuple)

    @property
    def h3(self) -> float:
        return h3_quantity(self)

    @property
    def h4(self) -> float:
        return h4_quantity(self)

    @property
    def picard_factor(self) -> float:
        """Contraction factor ``(k1 + k2) theta_bar + ell p`` of the local iteration."""
        return (self.k1 + self.k2) * self.theta_bar + self.ell * self.p

    def to_dict(self):
        out = asdict(self)
        out["lambda"] = out.pop("lambda_")
        out["notes"] = list(self.notes)
        return out


def h3_quantity(dc) -> float:
    tb, ell, p = dc.theta_bar, dc.ell, dc.p
    return ((dc.k1 + 2 * dc.k2) * tb + ell * p) * (1 + ell) ** p * math.exp(dc.k1 * tb)


def h4_quantity(dc) -> float:
    tb, ell, p = dc.theta_bar, dc.ell, dc.p
    return dc.k2 * tb + (dc.k1 * tb + ell * p) * (1 + dc.k2 * tb) * (1 + ell) ** p * math.exp(dc.k1 * tb)


def decay_margin(dc, tau_under: float) -> float:
    """``gamma - mu - lambda k2 - ln(1 + ell) / tau_under``; needs lambda."""
    if dc.lambda_ is None:
        raise ValueError("lambda is undefined")
    jump = math.log1p(dc.ell) / tau_under if dc.ell else 0.0
    return dc.gamma - dc.mu - dc.lambda_ * dc.k2 - jump


def derive_constants(spec: NetworkSpec, ts: TimeStructure, imp: ImpulseFamily) -> DerivedConstants:
    spec.require_consistent()
    absB, absC = np.abs(spec.B), np.abs(spec.C)
    colB, colC = absB.sum(axis=0), absC.sum(axis=0)
    Lf, Lg = spec.lip_f(), spec.lip_g()
    f0 = np.abs([act(0.0) for act in spec.f])
    g0 = np.abs([act(0.0) for act in spec.g])

    k1 = float(np.max(spec.a + Lf * colB))
    k2 = float(np.max(Lg * colC))
    k3 = imp.max_abs_at_zero()
    k4 = float(np.max(colB * f0 + colC * g0))
    mu = float(np.max(Lf * colB))
    gamma = float(np.min(spec.a))
    ell = imp.ell
    tb, p = ts.theta_bar, ts.p
    p_period = ts.tau_period if ts.tau_periodic else p
    notes = []

    partial = dict(k1=k1, k2=k2, theta_bar=tb, ell=ell, p=p)
    h4 = h4_quantity(_Ns(**partial))
    lam = 1.0 / (1.0 - h4) if h4 < 1.0 else None
    if lam is None:
        notes.append(f"lambda undefined: H4 quantity {h4:.6g} >= 1")

    R = alpha1 = alpha2 = h_bound = None
    sum_abs_d = float(np.abs(spec.d).sum())
    if ts.omega is None:
        notes.append("omega missing: R, alpha1, alpha2 unset")
    else:
        w = ts.omega
        R = 1.0 / (-math.expm1(-gamma * w))
        alpha2 = R * (w * sum_abs_d + w * spec.m * k4 + spec.m * p_period * k3)
        if lam is not None:
            alpha1 = R * (w * (mu + lam * k2) + ell * p_period)
            if alpha1 < 1.0:
                h_bound = alpha2 / (1.0 - alpha1)
    return DerivedConstants(
        k1=k1, k2=k2, k3=k3, k4=k4, mu=mu, gamma=gamma, lambda_=lam, R_const=R,
        alpha1=alpha1, alpha2=alpha2, h_bound=h_bound, ell=ell, theta_bar=tb,
        tau_under=ts.tau_under, p=p, p_period=p_period, omega=ts.omega, m=spec.m,
        sum_abs_d=sum_abs_d, notes=tuple(notes),
    )


@dataclass(frozen=True)
class _Ns:
    k1: float
    k2: float
    theta_bar: float
    ell: float
    p: int


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

_STRICT = {"<": True, ">": True, "<=": False, ">=": False}


@dataclass(frozen=True)
class HypothesisEntry:
    name: str
    value: float | None
    threshold: float
    relation: str
    margin: float | None
    passed: bool
    detail: str = ""

    def to_dict(self):
        return asdict(self)


def _entry(name, value, threshold, relation, detail=""):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return HypothesisEntry(name, None, threshold, relation, None, False, detail)
    value = float(value)
    if relation in ("<", "<="):
        margin = threshold - value
    else:
        margin = value - threshold
    passed = margin > 0 if _STRICT[relation] else margin >= 0
    return HypothesisEntry(name, value, threshold, relation, margin, bool(passed), detail)


@dataclass(frozen=True)
class HypothesisReport:
    constants: DerivedConstants
    entries: tuple
    flags: dict

    def __getitem__(self, name) -> HypothesisEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self):
        return [e.name for e in self.entries]

    def to_dict(self):
        return {
            "constants": self.constants.to_dict(),
            "entries": [e.to_dict() for e in self.entries],
            "flags": dict(self.flags),
        }


def check_hypotheses(spec: NetworkSpec, ts: TimeStructure, imp: ImpulseFamily,
                     x_star=None, tol: float = 1e-8, box=None) -> HypothesisReport:
    """Evaluate H1-H7, the equilibrium condition and condition (A).

    ``box`` is the operating box on which H2 is checked; without it only
    globally Lipschitz impulse maps can pass.  Condition (A) is evaluated only
    when ``x_star`` is given.
    """
    dc = derive_constants(spec, ts, imp)
    entries = []

    ratios = [act.true_lipschitz() / act.lipschitz if act.lipschitz > 0 else
              (0.0 if act.true_lipschitz() == 0 else math.inf)
              for act in (*spec.f, *spec.g)]
    entries.append(_entry("H1", max(ratios), 1.0, "<=",
                          "max true/declared activation Lipschitz ratio"))

    quad = any(mp.kind == "centered-quadratic" for row in imp.maps for mp in row)
    if quad and box is None:
        entries.append(_entry("H2", None, 1.0, "<=", "centered-quadratic maps need an operating box"))
    else:
        lip = impulse_lipschitz_on_box(imp, box)
        ratio = lip / dc.ell if dc.ell > 0 else (0.0 if lip == 0 else math.inf)
        entries.append(_entry("H2", ratio, 1.0, "<=", "impulse Lipschitz on box / declared ell"))

    entries.append(_entry("H3", dc.h3, 1.0, "<"))
    entries.append(_entry("H3-implied", dc.picard_factor, 1.0, "<",
                          "(k1+k2) theta_bar + ell p"))
    entries.append(_entry("H4", dc.h4, 1.0, "<"))
    h5 = decay_margin(dc, dc.tau_under) if dc.lambda_ is not None else None
    entries.append(_entry("H5", h5, 0.0, ">", "" if h5 is not None else "lambda undefined"))

    h6_ok, h6_detail = _h6(ts, imp)
    entries.append(_entry("H6", 1.0 if h6_ok else 0.0, 0.5, ">", h6_detail))
    entries.append(_entry("H7", dc.alpha1, 1.0, "<",
                          "" if dc.alpha1 is not None else "needs omega and lambda"))

    colB, colC = np.abs(spec.B).sum(axis=0), np.abs(spec.C).sum(axis=0)
    eq_margin = float(np.min(spec.a - (spec.lip_f() * colB + spec.lip_g() * colC)))
    entries.append(_entry("equilibrium-margin", eq_margin, 0.0, ">",
                          "min_i a_i - L^f_i sum|b_ji| - L^g_i sum|c_ji|"))

    cond_a = None
    if x_star is not None:
        dev = impulse_deviation(np.asarray(x_star, dtype=float), imp)
        cond_entry = _entry("condition_A", dev, tol, "<=", "max |I_ik(x*_i)|")
        entries.append(cond_entry)
        cond_a = cond_entry.passed

    by = {e.name: e.passed for e in entries}
    existence = by["H1"] and by["H2"] and by["H3"]
    flags = {
        "existence_unique": existence,
        "lambda_valid": by["H4"],
        "global_stability": existence and by["H4"] and by["H5"],
        "periodic_exists": existence and by["H6"] and by["H7"],
        "equilibrium_unique": by["H1"] and by["equilibrium-margin"],
        "condition_A": cond_a,
    }
    return HypothesisReport(dc, tuple(entries), flags)


def impulse_deviation(x_star, imp: ImpulseFamily) -> float:
    """``max_{i, k in one period} |I_ik(x*_i)|``."""
    return max(float(np.max(np.abs(imp(k, x_star)))) for k in range(imp.period_p))


def _h6(ts: TimeStructure, imp: ImpulseFamily):
    if ts.omega is None:
        return False, "omega not set"
    if not (ts.theta_periodic and ts.tau_periodic):
        return False, "theta and tau both need periodic extension rules"
    bad = [c for c, _ in ts.structure_issues() if "periodic" in c or "period-block" in c]
    if bad:
        return False, ", ".join(bad)
    if ts.tau_period % imp.period_p:
        return False, f"impulse period {imp.period_p} does not divide tau period {ts.tau_period}"
    return True, f"p={ts.tau_period}, p1={ts.theta_period}, omega={ts.omega}"
