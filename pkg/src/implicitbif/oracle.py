"""Finite-difference oracle for derivatives of the p-fold composition.

The composition ``x -> f^p(x, alpha)`` is evaluated by actually solving the
implicit steps, each root solve seeded from the matching point of the
unperturbed orbit. Central differences are then sharpened by Richardson
extrapolation. Nothing here uses the closed-form orbit formulas, so the
results are an independent check on :mod:`implicitbif.deriv`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import BranchEscapeError, ConvergenceError, SingularError
from .model import ImplicitMap
from .orbit import Orbit, implicit_step

WHICH = ("d1", "d2", "d3", "d_alpha", "d_alpha_x")

# relative base steps per quantity; truncation vs. root-solve noise balance
DEFAULT_STEPS = {
    "d1": 1e-3,
    "d2": 2e-3,
    "d3": 2e-2,
    "d_alpha": 1e-3,
    "d_alpha_x": 2e-3,
}


@dataclass(frozen=True)
class FdPolicy:
    """Step policy for the oracle.

    Attributes:
        base_step: first step size, multiplied by ``max(1, |x_0|)`` (or
            ``max(1, |alpha|)`` for parameter steps). ``None`` picks a
            per-quantity default from ``DEFAULT_STEPS``.
        richardson_levels: number of step halvings, each followed by one
            extrapolation sweep.
        search: extra halvings of the base step tried by the plateau
            search; 0 uses the base step only.
    """

    base_step: Optional[float] = None
    richardson_levels: int = 2
    search: int = 4

    def __post_init__(self):
        if self.base_step is not None and not self.base_step > 0:
            raise ValueError("base_step must be positive")
        if self.richardson_levels < 1:
            raise ValueError("richardson_levels must be >= 1")
        if self.search < 0:
            raise ValueError("search must be >= 0")

    def step(self, which: str, scale: float) -> float:
        base = DEFAULT_STEPS[which] if self.base_step is None else self.base_step
        return base * max(1.0, abs(scale))


def richardson(values: Sequence[float], order: int = 2, ratio: float = 2.0) -> float:
    """Extrapolate approximations taken at steps h, h/r, h/r^2, ...

    The error is assumed to expand in powers ``h^order, h^(2 order), ...``
    (``order=2`` for symmetric stencils).
    """
    table = list(values)
    n = len(table)
    for level in range(1, n):
        factor = ratio ** (order * level)
        table = [(factor * table[k + 1] - table[k]) / (factor - 1.0) for k in range(len(table) - 1)]
    return table[0]


def _stencil(f: Callable[[float], float], x: float, h: float, order: int) -> float:
    if order == 1:
        return (f(x + h) - f(x - h)) / (2.0 * h)
    if order == 2:
        return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    if order == 3:
        return (f(x + 2 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2 * h)) / (2.0 * h ** 3)
    raise ValueError("order must be 1, 2 or 3")


def central_derivative(f: Callable[[float], float], x: float, order: int, h: float,
                       levels: int = 2, search: int = 0) -> float:
    """Richardson-extrapolated central difference of a scalar function.

    With ``search > 0`` the extrapolation is repeated from base steps
    ``h, h/2, ..., h/2^search`` and the estimate where two consecutive
    results agree best is returned (truncation error shrinks with the step
    while root-solve noise grows, so the agreement has a plateau).
    """
    stencils = [_stencil(f, x, h / 2 ** k, order) for k in range(levels + search + 1)]
    estimates = [richardson(stencils[k:k + levels + 1]) for k in range(search + 1)]
    return _plateau(estimates)


def _plateau(estimates):
    if len(estimates) == 1:
        return estimates[0]
    gaps = [abs(estimates[k + 1] - estimates[k]) for k in range(len(estimates) - 1)]
    k = min(range(len(gaps)), key=gaps.__getitem__)
    return 0.5 * (estimates[k] + estimates[k + 1])


def compose(m: ImplicitMap, o: Orbit, x: float, alpha: float, offset=None) -> float:
    """``f^p(x, alpha)`` along the branch of ``o``.

    Raises:
        BranchEscapeError: a root solve fails; ``offset`` identifies the
            perturbation that caused it.
    """
    p = o.period
    cur = x
    for j in range(p):
        try:
            cur = implicit_step(m, cur, alpha, o.points[(j + 1) % p])
        except (ConvergenceError, SingularError) as err:
            raise BranchEscapeError(
                f"root solve {j} diverged under perturbation {offset!r}: {err}", offset) from err
    return cur


def fd(m: ImplicitMap, o: Orbit, which: str, policy: FdPolicy = FdPolicy()) -> float:
    """Finite-difference estimate of a derivative of f^p at the orbit.

    ``which`` is one of ``d1``, ``d2``, ``d3`` (x-derivatives), ``d_alpha``
    or ``d_alpha_x`` (mixed).
    """
    if which not in WHICH:
        raise ValueError(f"unknown quantity {which!r}")
    x0, a0 = o.points[0], o.alpha
    levels = policy.richardson_levels

    if which in ("d1", "d2", "d3"):
        order = int(which[1])

        def g(x):
            return compose(m, o, x, a0, offset=("x", x - x0))

        return central_derivative(g, x0, order, policy.step(which, x0), levels, policy.search)

    if which == "d_alpha":
        def g(a):
            return compose(m, o, x0, a, offset=("alpha", a - a0))

        return central_derivative(g, a0, 1, policy.step(which, a0), levels, policy.search)

    hx = policy.step(which, x0)
    ha = policy.step(which, a0)
    approx = []
    for k in range(levels + policy.search + 1):
        sx, sa = hx / 2 ** k, ha / 2 ** k
        vals = {}
        for i in (1, -1):
            for j in (1, -1):
                vals[i, j] = compose(m, o, x0 + i * sx, a0 + j * sa,
                                     offset=("x,alpha", i * sx, j * sa))
        approx.append((vals[1, 1] - vals[1, -1] - vals[-1, 1] + vals[-1, -1]) / (4.0 * sx * sa))
    return _plateau([richardson(approx[k:k + levels + 1]) for k in range(policy.search + 1)])
