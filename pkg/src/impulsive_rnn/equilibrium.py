"""Equilibria of the network and the zero-impulse condition (A)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError
from .hypotheses import impulse_deviation
from .model import ImpulseFamily, NetworkSpec, rhs

__all__ = ["EquilibriumResult", "solve_equilibrium", "check_condition_A",
           "algebraic_residual", "contraction_bound"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EquilibriumResult:
    x_star: np.ndarray
    residual: float
    iterations: int
    contraction_factor: float
    contraction_bound: float
    guaranteed: bool
    in_Omega: bool | None = None
    impulse_magnitude: float | None = None

    def to_dict(self):
        return {
            "x_star": self.x_star.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "contraction_factor": self.contraction_factor,
            "contraction_bound": self.contraction_bound,
            "guaranteed": self.guaranteed,
            "in_Omega": self.in_Omega,
            "impulse_magnitude": self.impulse_magnitude,
        }


def algebraic_residual(x, spec: NetworkSpec) -> float:
    """Sup norm of ``-a x + B f(x) + C g(x) + d``."""
    return float(np.max(np.abs(rhs(0.0, x, x, spec))))


def contraction_bound(spec: NetworkSpec) -> float:
    """Sup-norm Lipschitz factor of the fixed-point map, ``max_i (...) / a_i``."""
    colB = np.abs(spec.B).sum(axis=0)
    colC = np.abs(spec.C).sum(axis=0)
    return float(np.max((spec.lip_f() * colB + spec.lip_g() * colC) / spec.a))


def _fixed_point_map(x, spec):
    return (spec.B @ spec.f_values(x) + spec.C @ spec.g_values(x) + spec.d) / spec.a


def solve_equilibrium(spec: NetworkSpec, tol: float = 1e-12, max_iter: int = 10_000,
                      x_init=None, imp: ImpulseFamily | None = None,
                      damping: float = 1.0, omega_tol: float = 1e-8) -> EquilibriumResult:
    """Picard iteration on ``x_i = (sum_j b_ij f_j + sum_j c_ij g_j + d_i) / a_i``.

    Converges when the sup-norm step drops below ``tol``.  The Lipschitz
    margin condition ``a_i > L^f_i sum_j|b_ji| + L^g_i sum_j|c_ji|`` makes the
    map a contraction; when it fails the solver still runs and the result is
    flagged ``guaranteed=False``.  With ``imp`` given, membership of the
    result in the impulse zero set is reported as well.
    """
    spec.require_consistent()
    colB = np.abs(spec.B).sum(axis=0)
    colC = np.abs(spec.C).sum(axis=0)
    guaranteed = bool(np.all(spec.a > spec.lip_f() * colB + spec.lip_g() * colC))
    if not guaranteed:
        log.warning("equilibrium uniqueness condition fails; fixed point is not certified")
    bound = contraction_bound(spec)

    x = spec.d / spec.a if x_init is None else np.array(x_init, dtype=float)
    steps = []
    for it in range(1, max_iter + 1):
        x_new = (1.0 - damping) * x + damping * _fixed_point_map(x, spec)
        step = float(np.max(np.abs(x_new - x)))
        if not np.all(np.isfinite(x_new)):
            raise NonConvergenceError("equilibrium iteration produced non-finite values",
                                      last=x, delta=step)
        steps.append(step)
        x = x_new
        if step < tol:
            break
    else:
        raise NonConvergenceError(f"no convergence in {max_iter} iterations (last step {step:.3g})",
                                  last=x, delta=step)

    ratios = [b / a for a, b in zip(steps, steps[1:]) if a > 1e3 * np.finfo(float).eps]
    factor = max(ratios[2:] if len(ratios) > 3 else ratios, default=0.0)
    x.setflags(write=False)
    in_omega = dev = None
    if imp is not None:
        in_omega, dev = check_condition_A(x, imp, omega_tol)
    return EquilibriumResult(
        x_star=x, residual=algebraic_residual(x, spec), iterations=it,
        contraction_factor=float(factor), contraction_bound=bound, guaranteed=guaranteed,
        in_Omega=in_omega, impulse_magnitude=dev,
    )


def check_condition_A(x_star, imp: ImpulseFamily, tol: float = 1e-8):
    """Whether every jump vanishes at ``x_star``; returns ``(ok, max |I_ik(x*_i)|)``."""
    dev = impulse_deviation(np.asarray(x_star, dtype=float), imp)
    return dev <= tol, dev
