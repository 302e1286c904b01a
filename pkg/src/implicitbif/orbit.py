"""Implicit stepping, trajectories and periodic orbits of F(x_n, x_{n+1}, alpha) = 0."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .errors import (
    ConvergenceError,
    EvaluationDomainError,
    MinimalityError,
    SingularError,
)
from .model import ImplicitMap

ORBIT_TOL = 1e-12
FY_FLOOR = 1e-10
DISTINCT_TOL = 1e-8
MAX_ITER = 50
MAX_HALVINGS = 20


@dataclass(frozen=True)
class Orbit:
    """A p-cycle ``x_0 .. x_{p-1}`` at parameter ``alpha``.

    ``residual`` is ``max_j |F(x_j, x_{j+1 mod p}, alpha)|`` and ``min_Fy`` the
    smallest ``|Fy|`` over the same pairs. ``degenerate`` marks solutions whose
    Jacobian is singular or whose true period is smaller than ``period``.
    """

    points: tuple
    period: int
    alpha: float
    residual: float
    min_Fy: float
    degenerate: bool = False
    iterations: int = 0
    notes: tuple = field(default=(), compare=False)

    def pairs(self):
        p = self.period
        return [(self.points[j], self.points[(j + 1) % p]) for j in range(p)]

    def rotated(self, k: int) -> "Orbit":
        pts = self.points[k:] + self.points[:k]
        return Orbit(pts, self.period, self.alpha, self.residual, self.min_Fy,
                     self.degenerate, self.iterations, self.notes)


def orbit_diagnostics(m: ImplicitMap, points: Sequence[float], alpha: float):
    """Return ``(residual, min_Fy)`` of the cyclic system at ``points``."""
    p = len(points)
    F, Fy = m.fn("F"), m.fn("Fy")
    res, mfy = 0.0, math.inf
    for j in range(p):
        x, y = points[j], points[(j + 1) % p]
        res = max(res, abs(F(x, y, alpha)))
        mfy = min(mfy, abs(Fy(x, y, alpha)))
    return res, mfy


def make_orbit(m: ImplicitMap, points: Sequence[float], alpha: float, **kw) -> Orbit:
    """Wrap already-solved points in an :class:`Orbit` (no solving, no checks)."""
    pts = tuple(float(v) for v in points)
    res, mfy = orbit_diagnostics(m, pts, alpha)
    return Orbit(pts, len(pts), float(alpha), res, mfy, **kw)


def minimal_period(points: Sequence[float], tol: float = DISTINCT_TOL) -> int:
    """Smallest divisor d of ``len(points)`` for which the cycle repeats with shift d."""
    p = len(points)
    for d in range(1, p):
        if p % d:
            continue
        if max(abs(points[j] - points[(j + d) % p]) for j in range(p)) <= tol:
            return d
    return p


# ---------------------------------------------------------------------------
# one implicit step


def implicit_step(m: ImplicitMap, x: float, alpha: float, y_guess: float,
                  tol: float = ORBIT_TOL, max_iter: int = MAX_ITER,
                  fy_floor: float = FY_FLOOR) -> float:
    """Solve ``F(x, y, alpha) = 0`` for ``y`` by damped Newton from ``y_guess``.

    The returned root is the one Newton reaches from the guess, i.e. the branch
    of the implicit function through the neighbourhood of ``y_guess``.

    Raises:
        SingularError: ``|Fy| < fy_floor`` at an iterate.
        ConvergenceError: residual still above ``tol`` after ``max_iter`` steps.
    """
    if not math.isfinite(y_guess):
        raise ValueError("y_guess must be finite")
    F, Fy = m.fn("F"), m.fn("Fy")
    y = float(y_guess)
    try:
        r = F(x, y, alpha)
        for _ in range(max_iter):
            if abs(r) <= tol:
                # one polishing step; keep it only if it does not hurt
                d = Fy(x, y, alpha)
                if abs(d) >= fy_floor:
                    y2 = y - r / d
                    r2 = F(x, y2, alpha)
                    if abs(r2) <= abs(r):
                        return y2
                return y
            d = Fy(x, y, alpha)
            if abs(d) < fy_floor:
                raise SingularError(f"|Fy| = {abs(d):.3g} below floor at y = {y!r}")
            step = r / d
            lam = 1.0
            for _ in range(MAX_HALVINGS + 1):
                y_new = y - lam * step
                try:
                    r_new = F(x, y_new, alpha)
                except EvaluationDomainError:
                    r_new = math.inf
                if abs(r_new) < abs(r):
                    break
                lam *= 0.5
            y, r = y_new, r_new
            if not math.isfinite(r):
                break
    except EvaluationDomainError as err:
        raise ConvergenceError(f"evaluation failed during implicit step: {err}") from err
    raise ConvergenceError(f"implicit step from x = {x!r} did not converge (|F| = {abs(r):.3g})")


GuessPolicy = Union[str, Callable[[int, List[float]], float]]


def iterate(m: ImplicitMap, x0: float, alpha: float, n: int,
            guess_policy: GuessPolicy = "previous", **step_kw) -> List[float]:
    """Trajectory ``[x_0, ..., x_n]`` by successive implicit steps.

    ``guess_policy`` is ``"previous"`` (seed each solve with the current
    point, which follows the branch by continuation) or a callable
    ``(k, history) -> guess`` for step ``k``.

    Raises:
        ConvergenceError, SingularError: from the failing step; the message
            carries its index.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    traj = [float(x0)]
    for k in range(n):
        if guess_policy == "previous":
            guess = traj[-1]
        else:
            guess = guess_policy(k, traj)
        try:
            traj.append(implicit_step(m, traj[-1], alpha, guess, **step_kw))
        except (ConvergenceError, SingularError) as err:
            err.args = (f"step {k}: {err}",)
            err.index = k
            raise
    return traj


# ---------------------------------------------------------------------------
# periodic orbits


def cyclic_residual(m: ImplicitMap, points, alpha) -> np.ndarray:
    p = len(points)
    F = m.fn("F")
    return np.array([F(points[j], points[(j + 1) % p], alpha) for j in range(p)])


def cyclic_jacobian(m: ImplicitMap, points, alpha) -> np.ndarray:
    """Cyclic bidiagonal Jacobian of the residual: Fx on the diagonal, Fy next to it."""
    p = len(points)
    Fx, Fy = m.fn("Fx"), m.fn("Fy")
    J = np.zeros((p, p))
    for j in range(p):
        x, y = points[j], points[(j + 1) % p]
        J[j, j] += Fx(x, y, alpha)
        J[j, (j + 1) % p] += Fy(x, y, alpha)
    return J


def _singular(J: np.ndarray) -> bool:
    return bool(not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e14)


def solve_periodic_orbit(m: ImplicitMap, p: int, alpha: float, seed: Sequence[float],
                         tol: float = ORBIT_TOL, max_iter: int = MAX_ITER,
                         fy_floor: float = FY_FLOOR,
                         distinct_tol: float = DISTINCT_TOL) -> Orbit:
    """Newton on ``R_j = F(x_j, x_{(j+1) mod p}, alpha)``, j = 0..p-1.

    A seed that already satisfies the system is returned as is; if the
    Jacobian there is singular the orbit is flagged ``degenerate``.

    Raises:
        ConvergenceError: no convergence within ``max_iter`` iterations.
        SingularError: singular Newton Jacobian, or ``|Fy|`` below the floor
            at the solution.
        MinimalityError: the solution has a smaller true period.
    """
    if p < 1:
        raise ValueError("period must be positive")
    if len(seed) != p:
        raise ValueError(f"seed has {len(seed)} points, period is {p}")
    x = np.array(seed, dtype=float)
    alpha = float(alpha)
    try:
        r = cyclic_residual(m, x, alpha)
    except EvaluationDomainError as err:
        raise ConvergenceError(f"residual undefined at seed: {err}") from err
    it = 0
    while np.max(np.abs(r)) > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"periodic orbit did not converge (residual {np.max(np.abs(r)):.3g})")
        J = cyclic_jacobian(m, x, alpha)
        if _singular(J):
            raise SingularError("singular Newton Jacobian in periodic orbit solve")
        dx = np.linalg.solve(J, r)
        norm = np.linalg.norm(r)
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            x_new = x - lam * dx
            try:
                r_new = cyclic_residual(m, x_new, alpha)
                if np.linalg.norm(r_new) < norm:
                    break
            except EvaluationDomainError:
                pass
            lam *= 0.5
        else:
            raise ConvergenceError("line search failed in periodic orbit solve")
        x, r = x_new, r_new
        it += 1
    # polish once towards machine precision
    J = cyclic_jacobian(m, x, alpha)
    degenerate = _singular(J)
    if not degenerate:
        x_pol = x - np.linalg.solve(J, r)
        try:
            r_pol = cyclic_residual(m, x_pol, alpha)
            if np.max(np.abs(r_pol)) <= np.max(np.abs(r)):
                x = x_pol
        except EvaluationDomainError:
            pass

    orbit = make_orbit(m, x, alpha, degenerate=degenerate, iterations=it)
    if orbit.min_Fy <= fy_floor:
        raise SingularError(f"|Fy| = {orbit.min_Fy:.3g} at the orbit is below the floor")
    q = minimal_period(orbit.points, distinct_tol)
    if q < p:
        raise MinimalityError(f"orbit has true period {q}, requested {p}")
    return orbit


def same_cycle(a: Sequence[float], b: Sequence[float], tol: float = 1e-6) -> bool:
    """True when ``b`` is a cyclic rotation of ``a`` up to ``tol``."""
    if len(a) != len(b):
        return False
    p = len(a)
    return any(max(abs(a[j] - b[(j + k) % p]) for j in range(p)) < tol for k in range(p))


def point_set_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Hausdorff distance between two finite point sets."""
    d1 = max(min(abs(u - v) for v in b) for u in a)
    d2 = max(min(abs(u - v) for v in a) for u in b)
    return max(d1, d2)


MULTISTART_RNG_SEED = 20160101


def seed_grid(domain, p: int, density: int = 32, max_starts: Optional[int] = None,
              rng_seed: int = MULTISTART_RNG_SEED) -> List[tuple]:
    """Uniform grid seeds in ``domain^p``.

    At most ``density ** min(p, 2)`` seeds are produced; larger grids are
    subsampled with a fixed-seed RNG so results are reproducible.
    """
    lo, hi = domain
    axis = np.linspace(lo, hi, density)
    cap = max_starts if max_starts is not None else density ** min(p, 2)
    total = density ** p
    if total <= cap:
        return [tuple(s) for s in itertools.product(axis, repeat=p)]
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(total, size=cap, replace=False)
    idx.sort()
    seeds = []
    for flat in idx:
        digits = []
        for _ in range(p):
            flat, d = divmod(int(flat), density)
            digits.append(axis[d])
        seeds.append(tuple(digits))
    return seeds


def find_periodic_orbits(m: ImplicitMap, p: int, alpha: float, density: int = 32,
                         domain=None, max_starts: Optional[int] = None,
                         dedup_tol: float = 1e-6,
                         rng_seed: int = MULTISTART_RNG_SEED) -> List[Orbit]:
    """Multistart search for p-cycles; duplicates up to rotation are dropped."""
    domain = domain or m.domain_hint
    found: List[Orbit] = []
    for s in seed_grid(domain, p, density, max_starts, rng_seed):
        try:
            o = solve_periodic_orbit(m, p, alpha, s)
        except (ConvergenceError, SingularError, MinimalityError):
            continue
        if o.degenerate:
            continue
        if any(same_cycle(o.points, f.points, dedup_tol) for f in found):
            continue
        found.append(o)
    found.sort(key=lambda o: min(o.points))
    return found
