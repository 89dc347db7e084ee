"""Domain types for impulsive recurrent networks with piecewise constant delay.

The network is

    x_i' = -a_i x_i + sum_j b_ij f_j(x_j(t)) + sum_j c_ij g_j(x_j(beta(t))) + d_i,
    x_i(tau_k) - x_i(tau_k^-) = I_ik(x_i(tau_k^-)),

where ``beta(t) = theta_k`` on ``[theta_k, theta_{k+1})``.  All types here are
immutable once built; every function is pure.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "ActivationSpec",
    "ImpulseMap",
    "ImpulseFamily",
    "NetworkSpec",
    "TimeStructure",
    "Trajectory",
    "ValidationReport",
    "beta",
    "rhs",
    "validate",
]

# Relative slack used when comparing a declared Lipschitz constant with the true one.
_LIP_RTOL = 1e-12
_EVENT_TOL = 1e-12


def _frozen_array(values, ndim=None, name="array"):
    arr = np.array(values, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActivationSpec:
    """One activation function from a small parametric family.

    ``scaled-tanh`` evaluates ``gain * tanh(slope * x)``.  ``piecewise-linear``
    interpolates linearly between sorted ``breakpoints`` ``((x0, y0), ...)``
    and is held constant outside them.
    """

    kind: str
    gain: float = 1.0
    slope: float = 1.0
    breakpoints: tuple = ()
    lipschitz: float | None = None

    KINDS = ("scaled-tanh", "piecewise-linear")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown activation kind {self.kind!r}")
        if self.kind == "piecewise-linear":
            pts = tuple((float(x), float(y)) for x, y in self.breakpoints)
            if len(pts) < 2:
                raise ValidationError("piecewise-linear activation needs at least two breakpoints")
            if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
                raise ValidationError("piecewise-linear breakpoints must be strictly increasing in x")
            object.__setattr__(self, "breakpoints", pts)
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", self.true_lipschitz())
        object.__setattr__(self, "lipschitz", float(self.lipschitz))

    @classmethod
    def tanh(cls, gain=1.0, slope=1.0, lipschitz=None):
        return cls("scaled-tanh", gain=float(gain), slope=float(slope), lipschitz=lipschitz)

    @classmethod
    def piecewise_linear(cls, breakpoints, lipschitz=None):
        return cls("piecewise-linear", breakpoints=tuple(breakpoints), lipschitz=lipschitz)

    def __call__(self, x):
        if self.kind == "scaled-tanh":
            return self.gain * np.tanh(self.slope * np.asarray(x, dtype=float))
        xs, ys = zip(*self.breakpoints)
        return np.interp(x, xs, ys)

    def true_lipschitz(self) -> float:
        """Smallest valid global Lipschitz constant of the function."""
        if self.kind == "scaled-tanh":
            return abs(self.gain * self.slope)
        return max(abs((y1 - y0) / (x1 - x0))
                   for (x0, y0), (x1, y1) in zip(self.breakpoints, self.breakpoints[1:]))

    def lipschitz_ok(self) -> bool:
        true = self.true_lipschitz()
        return self.lipschitz >= true * (1.0 - _LIP_RTOL) - 1e-300


# ---------------------------------------------------------------------------
# impulses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImpulseMap:
    """Scalar jump map ``I(u)``.

    ``affine``: ``slope * u + offset``; ``centered-quadratic``:
    ``scale * (u - center)**2``; ``zero``: identically 0.
    """

    kind: str
    slope: float = 0.0
    offset: float = 0.0
    center: float = 0.0
    scale: float = 0.0

    KINDS = ("affine", "centered-quadratic", "zero")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown impulse kind {self.kind!r}")

    @classmethod
    def affine(cls, slope, offset=0.0):
        return cls("affine", slope=float(slope), offset=float(offset))

    @classmethod
    def quadratic(cls, center, scale):
        return cls("centered-quadratic", center=float(center), scale=float(scale))

    @classmethod
    def zero(cls):
        return cls("zero")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "affine":
            return self.slope * u + self.offset
        if self.kind == "centered-quadratic":
            return self.scale * (u - self.center) ** 2
        return np.zeros_like(u)

    def lipschitz_on(self, lo=-math.inf, hi=math.inf) -> float:
        """Lipschitz constant of the map restricted to ``[lo, hi]``."""
        if self.kind == "affine":
            return abs(self.slope)
        if self.kind == "zero":
            return 0.0
        reach = max(abs(lo - self.center), abs(hi - self.center))
        return 2.0 * abs(self.scale) * reach


@dataclass(frozen=True)
class ImpulseFamily:
    """Jump maps ``I_ik`` stored as one row of ``m`` maps per impulse index.

    Indices are cyclic: ``I_k = maps[k mod period_p]``.  A single row gives the
    same jump at every impulse moment.
    """

    maps: tuple
    ell: float

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.maps)
        if not rows:
            raise ValidationError("impulse family needs at least one row of maps")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValidationError("every impulse row must have one map per unit")
        object.__setattr__(self, "maps", rows)
        object.__setattr__(self, "ell", float(self.ell))

    @classmethod
    def zero(cls, m):
        return cls(((ImpulseMap.zero(),) * m,), ell=0.0)

    @classmethod
    def uniform(cls, row, ell):
        return cls((tuple(row),), ell=ell)

    @property
    def period_p(self) -> int:
        return len(self.maps)

    @property
    def m(self) -> int:
        return len(self.maps[0])

    def row(self, k: int):
        return self.maps[k % self.period_p]

    def __call__(self, k: int, x):
        """Vector of jumps ``(I_1k(x_1), ..., I_mk(x_m))``."""
        x = np.asarray(x, dtype=float)
        return np.array([mp(xi) for mp, xi in zip(self.row(k), x)], dtype=float)

    @cached_property
    def is_zero(self) -> bool:
        return all(mp.kind == "zero" for row in self.maps for mp in row)

    def max_abs_at_zero(self) -> float:
        """``max_{k in one period} max_i |I_ik(0)|``."""
        return max(abs(float(mp(0.0))) for row in self.maps for mp in row)


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """Parameters of the recurrent network.

    Construction only normalises types; invariants (positivity of ``a``,
    consistent dimensions) are reported by :func:`validate`.
    """

    a: np.ndarray
    B: np.ndarray
    C: np.ndarray
    d: np.ndarray
    f: tuple
    g: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen_array(self.a, 1, "a"))
        object.__setattr__(self, "B", _frozen_array(self.B, 2, "B"))
        object.__setattr__(self, "C", _frozen_array(self.C, 2, "C"))
        object.__setattr__(self, "d", _frozen_array(self.d, 1, "d"))
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "g", tuple(self.g))

    @property
    def m(self) -> int:
        return len(self.a)

    def dimension_issues(self) -> list[str]:
        m = self.m
        bad = []
        if self.B.shape != (m, m):
            bad.append(f"B has shape {self.B.shape}, expected {(m, m)}")
        if self.C.shape != (m, m):
            bad.append(f"C has shape {self.C.shape}, expected {(m, m)}")
        if self.d.shape != (m,):
            bad.append(f"d has length {self.d.size}, expected {m}")
        if len(self.f) != m:
            bad.append(f"{len(self.f)} f activations for {m} units")
        if len(self.g) != m:
            bad.append(f"{len(self.g)} g activations for {m} units")
        return bad

    def require_consistent(self):
        bad = self.dimension_issues()
        if bad:
            raise ValidationError("; ".join(bad))

    @cached_property
    def _tanh_params(self):
        # (gain, slope) arrays when every activation is a scaled tanh, else None
        out = []
        for acts in (self.f, self.g):
            if all(act.kind == "scaled-tanh" for act in acts):
                out.append((np.array([act.gain for act in acts]),
                            np.array([act.slope for act in acts])))
            else:
                out.append(None)
        return tuple(out)

    def _apply(self, acts, params, x):
        x = np.asarray(x, dtype=float)
        if params is not None:
            gain, slope = params
            return gain * np.tanh(slope * x)
        out = np.empty_like(x)
        for j, act in enumerate(acts):
            out[..., j] = act(x[..., j])
        return out

    def f_values(self, x):
        """``f_j(x_j)`` along the last axis of ``x``."""
        return self._apply(self.f, self._tanh_params[0], x)

    def g_values(self, x):
        """``g_j(x_j)`` along the last axis of ``x``."""
        return self._apply(self.g, self._tanh_params[1], x)

    def lip_f(self):
        return np.array([act.lipschitz for act in self.f])

    def lip_g(self):
        return np.array([act.lipschitz for act in self.g])


def rhs(t, x, x_frozen, spec: NetworkSpec):
    """Right-hand side of the flow with the delayed argument frozen.

    ``x_frozen`` is the state at ``beta(t)``.  Works on a single state or on
    stacks of states along the leading axes.
    """
    x = np.asarray(x, dtype=float)
    x_frozen = np.asarray(x_frozen, dtype=float)
    m = spec.m
    if x.shape[-1:] != (m,) or x_frozen.shape[-1:] != (m,):
        raise ValidationError(f"state vectors must have length {m}")
    spec.require_consistent()
    return (-spec.a * x + spec.f_values(x) @ spec.B.T
            + spec.g_values(x_frozen) @ spec.C.T + spec.d)


# ---------------------------------------------------------------------------
# time structure
# ---------------------------------------------------------------------------

def _seq_value(prefix, period, omega, k):
    if k < 0:
        raise DomainError(f"sequence index {k} is negative")
    n = len(prefix)
    if k < n:
        return prefix[k]
    if period is None or omega is None:
        raise DomainError(f"index {k} beyond the stored prefix of length {n}")
    q = (k - n) // period + 1
    return prefix[k - q * period] + q * omega


def _seq_floor_index(prefix, period, omega, t):
    """Largest k with value_k <= t; -1 when t precedes the sequence."""
    n = len(prefix)
    if n == 0 or t < prefix[0]:
        return -1
    if t < prefix[-1] or period is None or omega is None:
        return bisect.bisect_right(prefix, t) - 1
    start = n - period
    q = max(0, math.floor((t - prefix[start]) / omega))
    k = start + q * period
    # local correction absorbs rounding in the floor above
    while _seq_value(prefix, period, omega, k) > t:
        k -= 1
    while _seq_value(prefix, period, omega, k + 1) <= t:
        k += 1
    return k


@dataclass(frozen=True)
class TimeStructure:
    """Switch moments ``theta_k`` and impulse moments ``tau_k``.

    Each sequence is an explicit prefix, optionally extended by the periodic
    rule ``s_{k+period} = s_k + omega``.  A non-periodic ``tau`` prefix is the
    complete (finite) list of impulse moments; a non-periodic ``theta`` prefix
    limits the horizon on which ``beta`` is defined.
    """

    theta_prefix: tuple
    tau_prefix: tuple = ()
    theta_period: int | None = None
    tau_period: int | None = None
    omega: float | None = None
    theta_bar_given: float | None = None
    tau_under_given: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta_prefix", tuple(float(v) for v in self.theta_prefix))
        object.__setattr__(self, "tau_prefix", tuple(float(v) for v in self.tau_prefix))
        if not self.theta_prefix:
            raise ValidationError("theta needs at least one element")
        for name, prefix, period in (("theta", self.theta_prefix, self.theta_period),
                                     ("tau", self.tau_prefix, self.tau_period)):
            if period is not None:
                if self.omega is None:
                    raise ValidationError(f"{name} period given without omega")
                if period < 1 or period > len(prefix):
                    raise ValidationError(f"{name} period must be in 1..len(prefix)")
        if self.omega is not None:
            object.__setattr__(self, "omega", float(self.omega))
            if not self.omega > 0:
                raise ValidationError("omega must be positive")

    @classmethod
    def periodic(cls, theta, tau, omega, theta_bar=None, tau_under=None):
        """One period of each sequence, extended with period ``omega``."""
        theta, tau = tuple(theta), tuple(tau)
        return cls(theta, tau, len(theta), len(tau) if tau else None, omega,
                   theta_bar, tau_under)

    # sequence access -----------------------------------------------------

    def theta(self, k: int) -> float:
        return _seq_value(self.theta_prefix, self.theta_period, self.omega, k)

    def tau(self, k: int) -> float:
        return _seq_value(self.tau_prefix, self.tau_period, self.omega, k)

    @property
    def theta_periodic(self) -> bool:
        return self.theta_period is not None

    @property
    def tau_periodic(self) -> bool:
        return self.tau_period is not None

    @property
    def p1(self) -> int | None:
        return self.theta_period

    def theta_index(self, t: float) -> int:
        """Index k with ``theta_k <= t < theta_{k+1}``."""
        k = _seq_floor_index(self.theta_prefix, self.theta_period, self.omega, t)
        if k < 0:
            raise DomainError(f"t={t} precedes theta_0={self.theta_prefix[0]}")
        if not self.theta_periodic and k >= len(self.theta_prefix) - 1:
            raise DomainError(f"t={t} beyond the represented theta range")
        return k

    def tau_count_upto(self, t: float, inclusive: bool) -> int:
        """Number of tau_k below ``t`` (``<= t`` when ``inclusive``)."""
        if not self.tau_prefix:
            return 0
        if inclusive:
            k = _seq_floor_index(self.tau_prefix, self.tau_period, self.omega, t)
            return k + 1
        # count of tau_k < t
        k = _seq_floor_index(self.tau_prefix, self.tau_period, self.omega, t)
        while k >= 0 and self.tau(k) >= t:
            k -= 1
        return k + 1

    def taus_between(self, t0: float, t1: float, closed_right=False):
        """``[(k, tau_k)]`` with ``t0 <= tau_k < t1`` (``<= t1`` if closed_right)."""
        lo = self.tau_count_upto(t0, inclusive=False)
        hi = self.tau_count_upto(t1, inclusive=closed_right)
        return [(k, self.tau(k)) for k in range(lo, hi)]

    def thetas_between(self, t0: float, t1: float, closed_right=False):
        """``[(k, theta_k)]`` with ``t0 <= theta_k < t1`` (``<= t1`` if closed_right)."""
        k = _seq_floor_index(self.theta_prefix, self.theta_period, self.omega, t0)
        if k < 0 or self.theta(k) < t0:
            k += 1
        out = []
        n = len(self.theta_prefix)
        while self.theta_periodic or k < n:
            v = self.theta(k)
            if v > t1 or (v == t1 and not closed_right):
                break
            out.append((k, v))
            k += 1
        return out

    # derived bounds -------------------------------------------------------

    def _horizon(self) -> float:
        """End of a window on which every periodic pattern has been seen twice."""
        ends = [self.theta_prefix[-1]]
        if self.tau_prefix:
            ends.append(self.tau_prefix[-1])
        extra = 2.0 * self.omega if self.omega is not None else 0.0
        return max(ends) + extra

    def _gaps(self, which):
        prefix = self.theta_prefix if which == "theta" else self.tau_prefix
        period = self.theta_period if which == "theta" else self.tau_period
        get = self.theta if which == "theta" else self.tau
        count = len(prefix) + (period or 0)
        vals = [get(k) for k in range(count)]
        return np.diff(vals)

    @cached_property
    def theta_bar_actual(self) -> float:
        gaps = self._gaps("theta")
        return float(gaps.max()) if gaps.size else math.inf

    @cached_property
    def tau_under_actual(self) -> float:
        gaps = self._gaps("tau")
        return float(gaps.min()) if gaps.size else math.inf

    @property
    def theta_bar(self) -> float:
        return self.theta_bar_given if self.theta_bar_given is not None else self.theta_bar_actual

    @property
    def tau_under(self) -> float:
        return self.tau_under_given if self.tau_under_given is not None else self.tau_under_actual

    def _theta_intervals(self):
        """Covered ``(theta_k, theta_{k+1})`` pairs used for global checks."""
        if not self.theta_periodic:
            return list(zip(self.theta_prefix, self.theta_prefix[1:]))
        out = []
        k = 0
        hz = self._horizon()
        while self.theta(k) < hz:
            out.append((self.theta(k), self.theta(k + 1)))
            k += 1
        return out

    @cached_property
    def impulse_counts(self) -> tuple:
        """``p_k``: number of tau strictly inside each covered theta interval."""
        counts = []
        for lo, hi in self._theta_intervals():
            inside = [t for _, t in self.taus_between(lo, hi, closed_right=True)
                      if lo < t < hi]
            counts.append(len(inside))
        return tuple(counts)

    @property
    def p(self) -> int:
        """Maximum number of impulses inside one theta interval."""
        return max(self.impulse_counts, default=0)

    def taus_per_period(self) -> int:
        return self.tau_period if self.tau_periodic else 0

    def structure_issues(self) -> list[tuple[str, str]]:
        issues = []
        th, ta = self.theta_prefix, self.tau_prefix
        if any(b <= a for a, b in zip(th, th[1:])):
            issues.append(("theta-not-increasing", "theta prefix must be strictly increasing"))
        if any(b <= a for a, b in zip(ta, ta[1:])):
            issues.append(("tau-not-increasing", "tau prefix must be strictly increasing"))
        for name, prefix, period in (("theta", th, self.theta_period),
                                     ("tau", ta, self.tau_period)):
            if period is None:
                continue
            for k in range(len(prefix) - period):
                if not math.isclose(prefix[k + period], prefix[k] + self.omega,
                                    rel_tol=1e-12, abs_tol=1e-12):
                    issues.append((f"{name}-periodic-extension-inconsistent",
                                   f"{name}[{k + period}] != {name}[{k}] + omega"))
                    break
            if period is not None and len(prefix) >= period:
                block = prefix[len(prefix) - period:]
                if block[-1] >= block[0] + self.omega:
                    issues.append((f"{name}-period-block-too-long",
                                   f"one period of {name} spans more than omega"))
        if issues:
            return issues
        if self.theta_bar_given is not None and self.theta_bar_actual > self.theta_bar_given * (1 + 1e-12):
            issues.append(("theta-gap-exceeds-bar",
                           f"max theta gap {self.theta_bar_actual} > theta_bar {self.theta_bar_given}"))
        if self.tau_under_given is not None and self.tau_under_actual < self.tau_under_given * (1 - 1e-12):
            issues.append(("tau-gap-below-under",
                           f"min tau gap {self.tau_under_actual} < tau_under {self.tau_under_given}"))
        hz = self._horizon()
        start = min(th[0], ta[0]) if ta else hz
        for _, tk in self.taus_between(start, hz, closed_right=True):
            j = _seq_floor_index(self.theta_prefix, self.theta_period, self.omega, tk)
            near = []
            if j >= 0:
                near.append(self.theta(j))
            try:
                near.append(self.theta(j + 1))
            except DomainError:
                pass
            if any(abs(tk - v) <= _EVENT_TOL * max(1.0, abs(tk)) for v in near):
                issues.append(("tau-theta-intersection", f"tau={tk} coincides with a theta point"))
                break
        return issues


def beta(t: float, ts: TimeStructure) -> float:
    """Identification function: ``theta_k`` for ``theta_k <= t < theta_{k+1}``."""
    return ts.theta(ts.theta_index(t))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    issues: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.issues

    @property
    def codes(self) -> list[str]:
        return [code for code, _ in self.issues]

    def __contains__(self, code):
        return code in self.codes

    def to_dict(self):
        return {"ok": self.ok, "issues": [{"code": c, "message": msg} for c, msg in self.issues]}


def impulse_lipschitz_on_box(imp: ImpulseFamily, box) -> float:
    """Largest Lipschitz constant of any ``I_ik`` on the unit's box interval."""
    worst = 0.0
    for row in imp.maps:
        for i, mp in enumerate(row):
            lo, hi = box[i] if box is not None else (-math.inf, math.inf)
            worst = max(worst, mp.lipschitz_on(lo, hi))
    return worst


def validate(spec: NetworkSpec, ts: TimeStructure, imp: ImpulseFamily,
             box: Sequence[tuple[float, float]] | None = None) -> ValidationReport:
    """Collect every violated structural invariant of the model triple."""
    issues = []
    dims = spec.dimension_issues()
    issues.extend(("dimension-mismatch", msg) for msg in dims)
    if imp.m != spec.m:
        issues.append(("dimension-mismatch", f"impulse rows have {imp.m} maps for {spec.m} units"))
    if np.any(spec.a <= 0):
        issues.append(("nonpositive-decay-rate", f"decay rates must be positive, got {spec.a.tolist()}"))
    for name, acts in (("f", spec.f), ("g", spec.g)):
        for j, act in enumerate(acts):
            if not act.lipschitz_ok():
                issues.append(("activation-lipschitz-invalid",
                               f"{name}[{j}] declares L={act.lipschitz} < {act.true_lipschitz()}"))
    issues.extend(ts.structure_issues())
    if box is not None and len(box) != imp.m:
        issues.append(("dimension-mismatch", "box must give one interval per unit"))
    else:
        needs_box = any(mp.kind == "centered-quadratic" for row in imp.maps for mp in row)
        if needs_box and box is None:
            issues.append(("impulse-lipschitz-needs-box",
                           "centered-quadratic maps are Lipschitz only on a bounded box"))
        else:
            lip = impulse_lipschitz_on_box(imp, box)
            if imp.ell < lip * (1.0 - _LIP_RTOL):
                issues.append(("impulse-lipschitz-invalid",
                               f"declared ell={imp.ell} < {lip} on the box"))
    return ValidationReport(tuple(issues))


def as_box(box: Iterable | None):
    if box is None:
        return None
    return tuple((float(lo), float(hi)) for lo, hi in box)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

INTERIOR = "interior"
SWITCH = "switch"
IMPULSE_LEFT = "impulse-left"
IMPULSE_RIGHT = "impulse-right"
TAGS = (INTERIOR, SWITCH, IMPULSE_LEFT, IMPULSE_RIGHT)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled right-continuous solution.

    Every impulse moment appears twice: an ``impulse-left`` row holding
    ``x(tau_k^-)`` followed by an ``impulse-right`` row holding ``x(tau_k)``.
    """

    times: np.ndarray
    states: np.ndarray
    tags: tuple
    t0: float
    spec: NetworkSpec | None = None
    ts: TimeStructure | None = None
    imp: ImpulseFamily | None = None

    def __post_init__(self):
        times = _frozen_array(self.times, 1, "times")
        states = _frozen_array(self.states, 2, "states")
        if states.shape[0] != times.shape[0] or len(self.tags) != times.shape[0]:
            raise ValidationError("times, states and tags must have equal length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "tags", tuple(self.tags))

    def __len__(self):
        return self.times.shape[0]

    @property
    def m(self) -> int:
        return self.states.shape[1]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def mask(self, tag):
        return np.array([t == tag for t in self.tags])

    def impulse_pairs(self):
        """``[(t, left, right)]`` for every recorded impulse."""
        out = []
        for n, tag in enumerate(self.tags):
            if tag == IMPULSE_LEFT:
                out.append((float(self.times[n]), self.states[n], self.states[n + 1]))
        return out

    def state_at(self, t: float) -> np.ndarray:
        """Right-continuous value at a sample time (last row with that time)."""
        idx = np.flatnonzero(np.abs(self.times - t) <= _EVENT_TOL * max(1.0, abs(t)))
        if idx.size == 0:
            raise DomainError(f"no sample at t={t}")
        return self.states[idx[-1]]
