"""Periodic solutions as fixed points of the Green's-function operator.

Periodic functions on ``[0, omega]`` are represented on an event-aligned grid:
every switch and impulse moment of one period is a breakpoint, each segment
between breakpoints is refined uniformly, and the two end nodes of adjacent
segments are stored separately.  At an impulse moment these two nodes are
the left limit and the jumped value; at a switch moment they coincide.

The operator is

    (F phi)_i(t) = int_0^omega G_i(t, s) [sum_j b_ij f_j(phi_j(s))
                     + sum_j c_ij g_j(phi_j(beta(s))) + d_i] ds
                   + sum_k G_i(t, tau_k) I_ik(phi_i(tau_k^-)).

The integral is evaluated panel by panel with the exponential kernel
integrated exactly against the linear interpolant of the bracket, i.e. a
trapezoid rule whose weights absorb the kernel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DomainError, NonConvergenceError
from .hypotheses import check_hypotheses
from .model import (IMPULSE_LEFT, IMPULSE_RIGHT, INTERIOR, SWITCH, ImpulseFamily,
                    NetworkSpec, TimeStructure, Trajectory)

__all__ = ["greens_function", "GridLayout", "PeriodicGrid", "GreenOperator", "apply_F",
           "find_periodic", "poincare_check", "PeriodicResult"]

log = logging.getLogger(__name__)

_SNAP = 1e-9


def greens_function(t: float, s: float, omega: float, a_i: float) -> float:
    """Periodic Green's function of ``d/dt + a_i`` on ``[0, omega]``."""
    if not (0.0 <= t <= omega and 0.0 <= s <= omega):
        raise DomainError(f"t={t}, s={s} must lie in [0, {omega}]")
    if not a_i > 0:
        raise DomainError("a_i must be positive")
    pref = 1.0 / (-math.expm1(-a_i * omega))
    if s <= t:
        return pref * math.exp(-a_i * (t - s))
    return pref * math.exp(-a_i * (omega + t - s))


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridLayout:
    omega: float
    breaks: np.ndarray        # segment breakpoints 0 = e_0 < ... < e_J = omega
    offsets: np.ndarray       # first node index of each segment, plus total
    times: np.ndarray
    tags: tuple
    beta_node: np.ndarray     # node holding phi(beta(s)) for every node
    jumps: tuple              # (left node index, global impulse index k)

    @classmethod
    def build(cls, ts: TimeStructure, h_grid: float | None = None) -> "GridLayout":
        if ts.omega is None:
            raise ConfigurationError("omega-required: periodic solutions need the period omega")
        if not ts.theta_periodic or (ts.tau_prefix and not ts.tau_periodic):
            raise ConfigurationError("theta and tau must both be periodic in omega")
        w = ts.omega
        h_grid = w / 200.0 if h_grid is None else float(h_grid)
        thetas = [v for _, v in ts.thetas_between(0.0, w, closed_right=True)]
        taus = ts.taus_between(0.0, w, closed_right=True) if ts.tau_prefix else []
        for _, tk in taus:
            if tk <= _SNAP or tk >= w - _SNAP:
                raise ConfigurationError("an impulse moment at a multiple of omega is not supported; "
                                         "shift the time origin")
        tau_at = {tk: k for k, tk in taus}
        breaks = sorted({0.0, w, *[v for v in thetas if 0.0 <= v <= w], *tau_at})
        theta_set = set(thetas)
        first_theta = [v for v in thetas if v < w]
        if not first_theta:
            raise ConfigurationError("no switch moment inside one period")

        times, tags, offsets, seg_start = [], [], [], []
        for j, (s0, s1) in enumerate(zip(breaks, breaks[1:])):
            n = max(1, math.ceil((s1 - s0) / h_grid - 1e-9))
            seg = s0 + (s1 - s0) * np.arange(n + 1) / n
            seg[0], seg[-1] = s0, s1
            offsets.append(len(times))
            times.extend(seg.tolist())
            seg_tags = [INTERIOR] * (n + 1)
            seg_tags[0] = IMPULSE_RIGHT if s0 in tau_at else (SWITCH if s0 in theta_set else INTERIOR)
            seg_tags[-1] = IMPULSE_LEFT if s1 in tau_at else (SWITCH if s1 in theta_set else INTERIOR)
            tags.extend(seg_tags)
            seg_start.append(s0)
        offsets.append(len(times))
        offsets = np.array(offsets)

        # phi(theta) is read at the start node of the segment beginning at theta
        theta_node = {v: int(offsets[j]) for j, v in enumerate(breaks[:-1]) if v in theta_set}
        if 0.0 in theta_set:
            theta_node.setdefault(0.0, 0)
        ordered = sorted(theta_node)
        beta_node = np.empty(len(times), dtype=int)
        for j, s0 in enumerate(seg_start):
            prior = [v for v in ordered if v <= s0 + _SNAP]
            v = prior[-1] if prior else ordered[-1]  # wraps to the previous period
            beta_node[offsets[j]:offsets[j + 1]] = theta_node[v]

        jumps = []
        for j, s1 in enumerate(breaks[1:]):
            if s1 in tau_at:
                jumps.append((int(offsets[j + 1] - 1), tau_at[s1]))
        return cls(w, np.array(breaks), offsets, np.array(times), tuple(tags), beta_node, tuple(jumps))

    @property
    def n_nodes(self) -> int:
        return self.times.size

    @cached_property
    def panels(self):
        """Start node index of every panel (consecutive nodes inside one segment)."""
        starts = [np.arange(self.offsets[j], self.offsets[j + 1] - 1)
                  for j in range(len(self.offsets) - 1)]
        return np.concatenate(starts)

    def locate(self, t, side="right"):
        """Node pair and weight for reading a grid function at times ``t`` (mod omega)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self.omega
        tm = np.mod(t, w)
        tm = np.where(np.abs(tm - w) <= _SNAP, 0.0, tm)
        # snap onto breakpoints so that the side convention decides the segment
        idx = np.clip(np.searchsorted(self.breaks, tm), 0, len(self.breaks) - 1)
        near = np.abs(self.breaks[idx] - tm) <= _SNAP
        tm = np.where(near, self.breaks[idx], tm)
        if side == "right":
            seg = np.searchsorted(self.breaks, tm, side="right") - 1
        else:
            seg = np.searchsorted(self.breaks, tm, side="left") - 1
            tm = np.where(seg < 0, w, tm)
            seg = np.where(seg < 0, len(self.breaks) - 2, seg)
        seg = np.clip(seg, 0, len(self.breaks) - 2)
        s0, s1 = self.breaks[seg], self.breaks[seg + 1]
        n = self.offsets[seg + 1] - self.offsets[seg] - 1
        pos = (tm - s0) / (s1 - s0) * n
        i = np.clip(np.floor(pos).astype(int), 0, n - 1)
        frac = pos - i
        lo = self.offsets[seg] + i
        return lo, lo + 1, frac


@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    layout: GridLayout
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != self.layout.n_nodes:
            raise DomainError("grid values must have one row per node")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, layout: GridLayout, x):
        x = np.asarray(x, dtype=float)
        return cls(layout, np.tile(x, (layout.n_nodes, 1)))

    @property
    def times(self):
        return self.layout.times

    @property
    def tags(self):
        return self.layout.tags

    @property
    def omega(self):
        return self.layout.omega

    def value_at(self, t, side="right"):
        """Linear interpolation at ``t`` taken modulo omega."""
        lo, hi, frac = self.layout.locate(t, side)
        out = (1 - frac)[:, None] * self.values[lo] + frac[:, None] * self.values[hi]
        return out[0] if np.ndim(t) == 0 else out

    def sample(self, times, tags):
        """Values at trajectory sample times; ``impulse-left`` rows read the left limit."""
        times = np.asarray(times, dtype=float)
        left = np.array([tag == IMPULSE_LEFT for tag in tags], dtype=bool)
        out = np.empty((times.size, self.values.shape[1]))
        if (~left).any():
            out[~left] = self.value_at(times[~left], "right").reshape(-1, self.values.shape[1])
        if left.any():
            out[left] = self.value_at(times[left], "left").reshape(-1, self.values.shape[1])
        return out

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values).sum(axis=1)))

    def distance(self, other: "PeriodicGrid") -> float:
        return float(np.max(np.abs(self.values - other.values).sum(axis=1)))

    def export_rows(self):
        """Rows ``(t, x, tag)``, dropping the duplicated node at switch moments."""
        rows = []
        for n, (t, tag) in enumerate(zip(self.times, self.tags)):
            if n > 0 and tag == SWITCH and self.tags[n - 1] == SWITCH and self.times[n - 1] == t:
                continue
            rows.append((float(t), self.values[n], tag))
        return rows

    def as_trajectory(self) -> Trajectory:
        rows = self.export_rows()
        return Trajectory([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows], 0.0)


# ---------------------------------------------------------------------------
# operator
# ---------------------------------------------------------------------------

def _panel_weights(u, H):
    """Exact weights of ``int_0^H e^{a v} (linear interpolant) dv`` for the two end values."""
    small = np.abs(u) < 1e-3
    us = np.where(small, 1.0, u)
    eu = np.exp(us)
    w0 = np.where(small, 0.5 + u / 6 + u ** 2 / 24 + u ** 3 / 120, (np.expm1(us) - us) / us ** 2)
    w1 = np.where(small, 0.5 + u / 3 + u ** 2 / 8 + u ** 3 / 30, (us * eu - np.expm1(us)) / us ** 2)
    return H * w0, H * w1


class GreenOperator:
    """Discretised operator ``F`` on a fixed :class:`GridLayout`."""

    def __init__(self, layout: GridLayout, spec: NetworkSpec, imp: ImpulseFamily):
        spec.require_consistent()
        self.layout, self.spec, self.imp = layout, spec, imp
        t = layout.times
        w = layout.omega
        q = layout.panels
        s0, s1 = t[q], t[q + 1]
        H = s1 - s0
        N = layout.n_nodes
        node = np.arange(N)[:, None]
        left = (q[None, :] + 1) <= node   # panel lies before the target node
        self.W = []
        self.G_imp = []
        jump_nodes = np.array([j for j, _ in layout.jumps], dtype=int)
        jump_times = t[jump_nodes] if jump_nodes.size else np.zeros(0)
        for a in spec.a:
            pref = 1.0 / (-math.expm1(-a * w))
            lag = np.where(left, t[:, None] - s0[None, :], w + t[:, None] - s0[None, :])
            K = pref * np.exp(-a * lag)
            w0, w1 = _panel_weights(a * H, H)
            Wi = np.zeros((N, N))
            np.add.at(Wi, (slice(None), q), K * w0[None, :])
            np.add.at(Wi, (slice(None), q + 1), K * w1[None, :])
            self.W.append(Wi)
            if jump_nodes.size:
                after = node > jump_nodes[None, :]
                lagj = np.where(after, t[:, None] - jump_times[None, :],
                                w + t[:, None] - jump_times[None, :])
                self.G_imp.append(pref * np.exp(-a * lagj))
            else:
                self.G_imp.append(np.zeros((N, 0)))

    def bracket(self, values):
        spec = self.spec
        frozen = values[self.layout.beta_node]
        return spec.f_values(values) @ spec.B.T + spec.g_values(frozen) @ spec.C.T + spec.d

    def jump_values(self, values):
        out = np.zeros((len(self.layout.jumps), self.spec.m))
        for n, (node, k) in enumerate(self.layout.jumps):
            out[n] = self.imp(k, values[node])
        return out

    def __call__(self, phi: PeriodicGrid) -> PeriodicGrid:
        vals = phi.values
        h = self.bracket(vals)
        J = self.jump_values(vals)
        out = np.empty_like(vals)
        for i in range(self.spec.m):
            out[:, i] = self.W[i] @ h[:, i] + self.G_imp[i] @ J[:, i]
        return PeriodicGrid(self.layout, out)


def apply_F(phi: PeriodicGrid, spec: NetworkSpec, ts: TimeStructure, imp: ImpulseFamily) -> PeriodicGrid:
    """One application of the Green's-function operator to ``phi``."""
    if ts.omega is None:
        raise ConfigurationError("omega-required")
    return GreenOperator(phi.layout, spec, imp)(phi)


# ---------------------------------------------------------------------------
# fixed point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicResult:
    phi_star: PeriodicGrid
    iterations: int
    final_delta: float
    alpha1_observed: float
    h_bound: float | None
    ratios: tuple
    alpha1: float | None
    certified: bool

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "final_delta": self.final_delta,
            "alpha1_observed": self.alpha1_observed,
            "alpha1": self.alpha1,
            "h_bound": self.h_bound,
            "certified": self.certified,
            "ratios": list(self.ratios),
            "phi_star_norm": self.phi_star.sup_norm(),
            "poincare_defect": float(np.abs(self.phi_star.values[-1] - self.phi_star.values[0]).sum()),
        }


def find_periodic(spec: NetworkSpec, ts: TimeStructure, imp: ImpulseFamily,
                  h_grid: float | None = None, tol: float = 1e-9, max_sweeps: int = 500,
                  box=None) -> PeriodicResult:
    """Iterate ``phi <- F phi`` from ``phi = d/a`` until the sweep change is below ``tol``."""
    if ts.omega is None:
        raise ConfigurationError("omega-required: periodic solutions need the period omega")
    report = check_hypotheses(spec, ts, imp, box=box)
    certified = bool(report["H6"].passed and report["H7"].passed)
    if not certified:
        log.warning("H6/H7 do not both hold; iterating without a contraction certificate")
    layout = GridLayout.build(ts, h_grid)
    op = GreenOperator(layout, spec, imp)
    phi = PeriodicGrid.constant(layout, spec.d / spec.a)
    deltas, ratios = [], []
    for it in range(1, max_sweeps + 1):
        new = op(phi)
        delta = new.distance(phi)
        if not math.isfinite(delta):
            raise NonConvergenceError("operator iteration diverged", last=phi, delta=delta)
        floor = 1e-13 * max(1.0, new.sup_norm())
        if deltas and deltas[-1] > floor and delta > floor:
            ratios.append(delta / deltas[-1])
        deltas.append(delta)
        phi = new
        if delta < tol:
            break
    else:
        last = ratios[-1] if ratios else None
        raise NonConvergenceError(f"no periodic fixed point after {max_sweeps} sweeps "
                                  f"(last ratio {last})", last=phi, delta=delta, ratio=last)
    return PeriodicResult(
        phi_star=phi, iterations=it, final_delta=delta,
        alpha1_observed=max(ratios, default=0.0), h_bound=report.constants.h_bound,
        ratios=tuple(ratios), alpha1=report.constants.alpha1, certified=certified,
    )


def poincare_check(obj, omega: float, tol: float = 1e-6, t: float | None = None):
    """Return ``(ok, defect)`` with ``defect = ||x(t + omega) - x(t)||_1``.

    ``obj`` is a :class:`PeriodicGrid` (checked on ``[0, omega]``) or a
    :class:`Trajectory` (checked from ``t``, default its start).
    """
    if isinstance(obj, PeriodicGrid):
        if not math.isclose(obj.omega, omega, rel_tol=1e-12):
            raise DomainError("grid period differs from omega")
        defect = float(np.abs(obj.values[-1] - obj.values[0]).sum())
        return defect <= tol, defect
    if isinstance(obj, Trajectory):
        start = obj.t0 if t is None else t
        if start + omega > obj.t_end + 1e-12 or start < obj.times[0] - 1e-12:
            raise DomainError(f"trajectory does not cover [{start}, {start + omega}]")
        defect = float(np.abs(obj.state_at(start + omega) - obj.state_at(start)).sum())
        return defect <= tol, defect
    raise DomainError(f"cannot check periodicity of {type(obj).__name__}")
