"""Numerical verification of the decay bound and the lambda-comparison inequality.

All distances use the 1-norm ``||u|| = sum_i |u_i|``.  The reference is
either a constant state (the equilibrium) or a converged periodic grid,
which is read modulo omega with the side chosen from the sample tags.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LambdaUndefinedError
from .hypotheses import DerivedConstants, decay_margin, impulse_deviation
from .model import SWITCH, TimeStructure, Trajectory
from .periodic import PeriodicGrid

__all__ = ["StabilityReport", "LambdaCheck", "decay_exponent", "verify_decay",
           "verify_lambda_inequality", "reference_values"]

log = logging.getLogger(__name__)

_EVENT_TOL = 1e-9


@dataclass(frozen=True)
class StabilityReport:
    sigma: float
    bound_violations: list
    lambda_violations: list
    converged: bool
    final_distance: float
    initial_distance: float = 0.0
    slack: float = 0.05
    distances: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return not self.bound_violations and not self.lambda_violations

    def to_dict(self):
        return {
            "sigma": self.sigma,
            "slack": self.slack,
            "initial_distance": self.initial_distance,
            "final_distance": self.final_distance,
            "converged": self.converged,
            "bound_violations": [list(map(float, v)) for v in self.bound_violations],
            "lambda_violations": [list(map(float, v)) for v in self.lambda_violations],
        }


class LambdaCheck(list):
    """Violation list of the lambda inequality; ``skipped`` carries a notice when not evaluated."""

    def __init__(self, items=(), skipped: str | None = None, checked: int = 0):
        super().__init__(items)
        self.skipped = skipped
        self.checked = checked


def decay_exponent(dc: DerivedConstants, ts: TimeStructure) -> float:
    """``sigma = gamma - mu - lambda k2 - ln(1 + ell) / tau_under``."""
    if dc.lambda_ is None:
        raise LambdaUndefinedError("lambda-undefined: the H4 quantity is not below 1")
    return decay_margin(dc, ts.tau_under)


def reference_values(traj: Trajectory, reference, ts: TimeStructure | None = None) -> np.ndarray:
    """Reference state at every sample of ``traj``."""
    if isinstance(reference, PeriodicGrid):
        if ts is not None and ts.omega is not None and not math.isclose(reference.omega, ts.omega,
                                                                        rel_tol=1e-12):
            raise DomainError("periodic reference has a different period than the time structure")
        return reference.sample(traj.times, traj.tags)
    ref = np.asarray(reference, dtype=float)
    if ref.shape != (traj.m,):
        raise DomainError(f"reference must be an {traj.m}-vector or a periodic grid")
    return np.broadcast_to(ref, traj.states.shape)


def _distances(traj, reference, ts):
    return np.abs(traj.states - reference_values(traj, reference, ts)).sum(axis=1)


def verify_decay(traj: Trajectory, reference, dc: DerivedConstants, ts: TimeStructure,
                 slack: float = 0.05, converge_tol: float = 1e-6) -> StabilityReport:
    """Check ``||x(t) - ref(t)|| <= (1 + slack) e^{-sigma (t - t0)} ||x(t0) - ref(t0)||`` at every sample."""
    sigma = decay_exponent(dc, ts)
    dist = _distances(traj, reference, ts)
    y0 = float(dist[0])
    bound = (1.0 + slack) * np.exp(-sigma * (traj.times - traj.times[0])) * y0
    bad = np.flatnonzero(dist > bound)
    violations = [(float(traj.times[n]), float(dist[n]), float(bound[n])) for n in bad]
    final = float(dist[-1])
    return StabilityReport(sigma=sigma, bound_violations=violations, lambda_violations=[],
                           converged=final < converge_tol, final_distance=final,
                           initial_distance=y0, slack=slack, distances=dist)


def verify_lambda_inequality(traj: Trajectory, reference, dc: DerivedConstants,
                             ts: TimeStructure, rtol: float = 1e-9) -> LambdaCheck:
    """Check ``||y(beta(t))|| <= lambda ||y(t)||`` with ``y = x - ref`` at every sample.

    Samples whose switch moment ``beta(t)`` precedes the trajectory start are
    not checked.  For a constant reference the check only makes sense when
    every jump vanishes there; otherwise it is skipped with a notice.
    """
    if dc.lambda_ is None:
        raise LambdaUndefinedError("lambda-undefined: the H4 quantity is not below 1")
    lam = dc.lambda_
    if not isinstance(reference, PeriodicGrid) and traj.imp is not None:
        dev = impulse_deviation(np.asarray(reference, dtype=float), traj.imp)
        if dev > 1e-8:
            note = f"reference is not a zero of the impulse maps (max |I| = {dev:.3g}); check skipped"
            log.warning(note)
            return LambdaCheck(skipped=note)

    dist = _distances(traj, reference, ts)
    times = traj.times
    # switch samples: tagged rows plus the start when it sits on a switch moment
    switch_idx = [n for n, tag in enumerate(traj.tags) if tag == SWITCH]
    t0 = float(times[0])
    k0 = ts.theta_index(t0)
    if abs(ts.theta(k0) - t0) <= _EVENT_TOL and (not switch_idx or times[switch_idx[0]] > t0 + _EVENT_TOL):
        switch_idx.insert(0, 0)
    if not switch_idx:
        return LambdaCheck()
    # last row at each switch time holds the right-continuous value
    sw_times = times[switch_idx]
    sw_vals = dist[switch_idx]
    pos = np.searchsorted(sw_times, times + _EVENT_TOL, side="right") - 1
    valid = np.flatnonzero(pos >= 0)
    yb = sw_vals[pos[valid]]
    rhs = lam * dist[valid]
    bad = yb > rhs * (1.0 + rtol)
    out = [(float(times[n]), float(a), float(b)) for n, a, b in zip(valid[bad], yb[bad], rhs[bad])]
    return LambdaCheck(out, checked=int(valid.size))
