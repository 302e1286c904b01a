"""Locating non-hyperbolic periodic orbits and classifying the bifurcation.

The augmented system for a p-cycle losing hyperbolicity is

    F(x_j, x_{j+1 mod p}, alpha) = 0,   j = 0..p-1
    (-1)^p prod_j F_x^j / F_y^j = sign                (sign = +1 or -1)

solved by Newton in the p + 1 unknowns ``(x_0, ..., x_{p-1}, alpha)``. The
pitchfork variant appends ``d_xx f^p = 0`` and is solved in the
least-squares sense.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import deriv, oracle
from .errors import (
    ConvergenceError,
    EvaluationDomainError,
    InconsistentSystemError,
    MinimalityError,
    SingularError,
)
from .model import ImplicitMap
from .orbit import (
    DISTINCT_TOL,
    FY_FLOOR,
    MAX_HALVINGS,
    ORBIT_TOL,
    Orbit,
    make_orbit,
    minimal_period,
)

HYPERBOLICITY_TOL = 1e-8
PITCHFORK_TOL = 1e-8
T_ZERO = 1e-6
T_NONZERO = 1e-6

KINDS = ("fold", "transcritical", "pitchfork", "flip", "degenerate")


@dataclass(frozen=True)
class BifurcationCandidate:
    orbit: Orbit
    sign: int
    augmented_residual: float
    iterations: int = 0


def _augmented_residual(m: ImplicitMap, z: np.ndarray, sign: int) -> np.ndarray:
    p = len(z) - 1
    pts, alpha = z[:p], z[p]
    F, Fx, Fy = m.fn("F"), m.fn("Fx"), m.fn("Fy")
    r = np.empty(p + 1)
    prod = 1.0
    for j in range(p):
        x, y = pts[j], pts[(j + 1) % p]
        r[j] = F(x, y, alpha)
        prod *= Fx(x, y, alpha) / Fy(x, y, alpha)
    r[p] = (-1) ** p * prod - sign
    return r


def _augmented_jacobian(m: ImplicitMap, z: np.ndarray) -> np.ndarray:
    """Exact Jacobian of the augmented system w.r.t. ``(x_0..x_{p-1}, alpha)``.

    The last row differentiates ``(-1)^p prod nu_j`` with every x_j treated as
    an independent unknown.
    """
    p = len(z) - 1
    pts, alpha = z[:p], z[p]
    J = np.zeros((p + 1, p + 1))
    nus, dnu = [], []
    for j in range(p):
        k = (j + 1) % p
        t = m.evaluate_all(pts[j], pts[k], alpha)
        J[j, j] += t["Fx"]
        J[j, k] += t["Fy"]
        J[j, p] = t["Fa"]
        fy2 = t["Fy"] ** 2
        nus.append(t["Fx"] / t["Fy"])
        dnu.append((
            (t["Fxx"] * t["Fy"] - t["Fx"] * t["Fxy"]) / fy2,   # first slot
            (t["Fxy"] * t["Fy"] - t["Fx"] * t["Fyy"]) / fy2,   # second slot
            (t["Fxa"] * t["Fy"] - t["Fx"] * t["Fya"]) / fy2,   # parameter
        ))
    sgn = (-1) ** p
    for j in range(p):
        others = 1.0
        for i in range(p):
            if i != j:
                others *= nus[i]
        k = (j + 1) % p
        J[p, j] += sgn * others * dnu[j][0]
        J[p, k] += sgn * others * dnu[j][1]
        J[p, p] += sgn * others * dnu[j][2]
    return J


def _finish(m, z, sign, iterations, allow_degenerate, distinct_tol, what):
    p = len(z) - 1
    pts, alpha = z[:p], float(z[p])
    collapsed = minimal_period(list(pts), distinct_tol) < p
    if collapsed and not allow_degenerate:
        raise MinimalityError(f"{what} collapsed to a lower period")
    orbit = make_orbit(m, pts, alpha, degenerate=collapsed, iterations=iterations,
                       notes=("collapsed to lower period",) if collapsed else ())
    if orbit.min_Fy <= FY_FLOOR:
        raise SingularError(f"|Fy| = {orbit.min_Fy:.3g} at the {what} is below the floor")
    r = _augmented_residual(m, z, sign)
    return BifurcationCandidate(orbit, sign, float(np.max(np.abs(r))), iterations)


def solve_bifurcation(m: ImplicitMap, p: int, sign: int, seed: Sequence[float],
                      max_iter: int = 60, orbit_tol: float = ORBIT_TOL,
                      hyp_tol: float = 1e-12, allow_degenerate: bool = False,
                      distinct_tol: float = DISTINCT_TOL) -> BifurcationCandidate:
    """Solve for a p-cycle with ``d_x f^p = sign``.

    Args:
        seed: ``p`` orbit points followed by the parameter guess.
        allow_degenerate: return a solution whose true period divides ``p``
            (flagged ``orbit.degenerate``) instead of raising.

    Raises:
        ConvergenceError: Newton failed to converge.
        SingularError: singular augmented Jacobian, or ``|Fy|`` vanishes.
        MinimalityError: collapse to a lower period.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if len(seed) != p + 1:
        raise ValueError(f"seed must hold {p} points and alpha")
    z = np.array(seed, dtype=float)
    try:
        r = _augmented_residual(m, z, sign)
    except (EvaluationDomainError, ZeroDivisionError) as err:
        raise ConvergenceError(f"augmented residual undefined at seed: {err}") from err

    def done(r):
        return np.max(np.abs(r[:p])) <= orbit_tol and abs(r[p]) <= hyp_tol

    it = 0
    while not done(r):
        if it >= max_iter:
            raise ConvergenceError(
                f"bifurcation solve did not converge (residual {np.max(np.abs(r)):.3g})")
        J = _augmented_jacobian(m, z)
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e14:
            raise SingularError("singular augmented Jacobian")
        dz = np.linalg.solve(J, r)
        norm = np.linalg.norm(r)
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            z_new = z - lam * dz
            try:
                r_new = _augmented_residual(m, z_new, sign)
                if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) < norm:
                    break
            except (EvaluationDomainError, ZeroDivisionError):
                pass
            lam *= 0.5
        else:
            if np.max(np.abs(r[:p])) <= 10 * orbit_tol and abs(r[p]) <= HYPERBOLICITY_TOL:
                break  # rounding floor reached
            raise ConvergenceError("line search failed in bifurcation solve")
        z, r = z_new, r_new
        it += 1
    z, r, extra = _polish(lambda v: _augmented_residual(m, v, sign),
                          lambda v: _augmented_jacobian(m, v), z, r, np.linalg.solve)
    return _finish(m, z, sign, it + extra, allow_degenerate, distinct_tol, "bifurcation point")


def _polish(residual, jacobian, z, r, solve, max_steps=60):
    """Keep taking Newton steps while they reduce the residual norm.

    Near a singular root (transcritical points make the augmented Jacobian
    singular) the residual tolerance alone leaves the unknowns only
    square-root accurate; continued Newton halves the error per step.
    """
    steps = 0
    norm = np.linalg.norm(r)
    while steps < max_steps and norm > 0.0:
        try:
            J = jacobian(z)
            dz = solve(J, r)
            z_new = z - dz
            r_new = residual(z_new)
        except (np.linalg.LinAlgError, EvaluationDomainError, ZeroDivisionError):
            break
        new_norm = np.linalg.norm(r_new)
        if not np.all(np.isfinite(r_new)) or not new_norm < norm:
            break
        z, r, norm = z_new, r_new, new_norm
        steps += 1
    return z, r, steps


# ---------------------------------------------------------------------------
# pitchfork: over-determined system


def _second_derivative(m: ImplicitMap, z: np.ndarray) -> float:
    p = len(z) - 1
    tab = deriv.step_table(m, z[:p], z[p])
    return deriv._partial_d2(tab, deriv._partial_d1(tab))[-1]


def _pitchfork_residual(m, z):
    r = _augmented_residual(m, z, 1)
    return np.append(r, _second_derivative(m, z))


def _pitchfork_jacobian(m, z):
    p = len(z) - 1
    J = np.zeros((p + 2, p + 1))
    J[: p + 1] = _augmented_jacobian(m, z)
    # d2 row by central differences (needs third-order mixed partials otherwise)
    for k in range(p + 1):
        h = 1e-6 * max(1.0, abs(z[k]))
        zp, zm = z.copy(), z.copy()
        zp[k] += h
        zm[k] -= h
        J[p + 1, k] = (_second_derivative(m, zp) - _second_derivative(m, zm)) / (2 * h)
    return J


def solve_pitchfork(m: ImplicitMap, p: int, seed: Sequence[float], max_iter: int = 60,
                    tol: float = PITCHFORK_TOL, orbit_tol: float = ORBIT_TOL,
                    distinct_tol: float = DISTINCT_TOL) -> BifurcationCandidate:
    """Gauss-Newton on orbit equations + ``d_x f^p = 1`` + ``d_xx f^p = 0``.

    The system has one more equation than unknowns; it is consistent for
    maps with the right symmetry.

    Raises:
        InconsistentSystemError: the least-squares residual stalls above ``tol``.
        MinimalityError: collapse to a lower period.
        SingularError: ``|Fy|`` or some ``|F_x|`` vanishes along the orbit.
    """
    if len(seed) != p + 1:
        raise ValueError(f"seed must hold {p} points and alpha")
    z = np.array(seed, dtype=float)
    try:
        r = _pitchfork_residual(m, z)
    except (EvaluationDomainError, ZeroDivisionError) as err:
        raise ConvergenceError(f"pitchfork residual undefined at seed: {err}") from err

    it = 0
    while True:
        converged = np.max(np.abs(r)) <= tol and np.max(np.abs(r[:p])) <= orbit_tol
        if converged or it >= max_iter:
            break
        J = _pitchfork_jacobian(m, z)
        dz = np.linalg.lstsq(J, r, rcond=None)[0]
        norm = np.linalg.norm(r)
        lam = 1.0
        improved = False
        for _ in range(MAX_HALVINGS + 1):
            z_new = z - lam * dz
            try:
                r_new = _pitchfork_residual(m, z_new)
                if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) < norm:
                    improved = True
                    break
            except (EvaluationDomainError, ZeroDivisionError):
                pass
            lam *= 0.5
        if not improved:
            break
        z, r = z_new, r_new
        it += 1

    if np.max(np.abs(r)) <= tol:
        z, r, extra = _polish(lambda v: _pitchfork_residual(m, v),
                              lambda v: _pitchfork_jacobian(m, v), z, r,
                              lambda J, b: np.linalg.lstsq(J, b, rcond=None)[0])
        it += extra
    floor = float(np.max(np.abs(r)))
    if floor > tol or np.max(np.abs(r[:p])) > orbit_tol:
        raise InconsistentSystemError(
            f"pitchfork system residual stalls at {floor:.3g}; the map likely lacks the "
            f"symmetry that makes the over-determined system solvable", floor)
    return _finish(m, z, 1, it, False, distinct_tol, "pitchfork point")


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Condition:
    """One condition value with its zero / non-zero tests."""

    name: str
    value: float
    zero_threshold: float
    nonzero_threshold: float

    @property
    def is_zero(self) -> bool:
        return abs(self.value) <= self.zero_threshold

    @property
    def is_nonzero(self) -> bool:
        return abs(self.value) > self.nonzero_threshold

    def as_dict(self) -> dict:
        return {"value": self.value, "zero_threshold": self.zero_threshold,
                "nonzero_threshold": self.nonzero_threshold,
                "is_zero": self.is_zero, "is_nonzero": self.is_nonzero}


@dataclass(frozen=True)
class BifurcationReport:
    candidate: BifurcationCandidate
    kind: str
    conditions: Dict[str, Condition]
    bundle: deriv.DerivativeBundle
    warnings: Tuple[str, ...] = field(default=())

    def requirements(self) -> Dict[str, str]:
        """Which conditions the reported kind needs to be zero / non-zero."""
        return REQUIREMENTS.get(self.kind, {})


REQUIREMENTS = {
    "fold": {"d_alpha": "nonzero", "d2": "nonzero"},
    "transcritical": {"d_alpha": "zero", "d2": "nonzero", "d_alpha_x": "nonzero"},
    "pitchfork": {"d_alpha": "zero", "d2": "zero", "d3": "nonzero", "d_alpha_x": "nonzero"},
    "flip": {"genericity": "nonzero", "d_alpha_x": "nonzero"},
}


def decide_kind(sign: int, conditions: Dict[str, Condition]) -> str:
    """Decision tree over the recorded zero / non-zero flags."""
    for kind in (("fold", "transcritical", "pitchfork") if sign == 1 else ("flip",)):
        need = REQUIREMENTS[kind]
        ok = all(conditions[name].is_zero if req == "zero" else conditions[name].is_nonzero
                 for name, req in need.items())
        if ok:
            return kind
    return "degenerate"


def classify(m: ImplicitMap, c: BifurcationCandidate, t_zero: float = T_ZERO,
             t_nonzero: float = T_NONZERO,
             policy: oracle.FdPolicy = oracle.FdPolicy()) -> BifurcationReport:
    """Evaluate the condition values on f^p at the candidate and pick a kind."""
    if t_zero > t_nonzero:
        raise ValueError("zero threshold must not exceed the non-zero threshold")
    b = deriv.derivative_bundle(m, c.orbit, policy)
    values = {
        "d_alpha": b.d_alpha,
        "d2": b.d2,
        "d_alpha_x": b.d_alpha_x,
        "d3": b.d3,
        "genericity": b.genericity,
    }
    conditions = {k: Condition(k, float(v), t_zero, t_nonzero) for k, v in values.items()}
    notes = []
    for cond in conditions.values():
        if not cond.is_zero and not cond.is_nonzero:
            notes.append(f"{cond.name} = {cond.value:.3g} lies between the thresholds")
    if b.analytic_fallback:
        notes.append("F_x vanishes on the orbit; d2/d3 taken from the finite-difference oracle")
    if c.orbit.degenerate:
        notes.append("candidate orbit is degenerate (lower true period)")
    kind = decide_kind(c.sign, conditions)
    for n in notes:
        warnings.warn(n, RuntimeWarning, stacklevel=2)
    return BifurcationReport(c, kind, conditions, b, tuple(notes))


def rotate_candidate(m: ImplicitMap, c: BifurcationCandidate, k: int) -> BifurcationCandidate:
    o = c.orbit
    pts = o.points[k:] + o.points[:k]
    return BifurcationCandidate(make_orbit(m, pts, o.alpha, degenerate=o.degenerate),
                                c.sign, c.augmented_residual, c.iterations)


def seeds_from_orbit(points: Sequence[float], alpha: float) -> List[float]:
    return [*map(float, points), float(alpha)]
