"""Implicit maps built from one-step ODE integrators, with the step size h in
the parameter slot alpha.

For ``x' = G(x)``:

* backward Euler ``F = y - x - alpha G(y)``
* trapezoid ``F = y - x - (alpha / 2)(G(y) + G(x))``
* forward Euler ``F = y - x - alpha G(x)`` (explicit; used for reduction tests)

The method-specific condition formulas below work from G and G' only, so they
serve as an independent cross-check on the generic orbit formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

from . import expr as ex
from .model import ImplicitMap, build_map
from .orbit import Orbit

METHODS = ("backward_euler", "trapezoid", "forward_euler")


@dataclass(frozen=True)
class OdeModel:
    """Right-hand side ``G(x)`` of an autonomous scalar ODE."""

    G: ex.Expression
    name: str = "ode"

    def __post_init__(self):
        extra = ex.variables(self.G) - {"x"}
        if extra:
            raise ValueError(f"G may only use x, found {sorted(extra)}")

    @classmethod
    def from_text(cls, text: str, name: str = "ode") -> "OdeModel":
        return cls(ex.parse(text), name)

    def funcs(self) -> Tuple[Callable[[float], float], Callable[[float], float]]:
        """Fast callables for G and G'."""
        g = ex.compile_expr(self.G)
        dg = ex.compile_expr(ex.differentiate(self.G, "x"))
        return (lambda v: g(v, 0.0, 0.0)), (lambda v: dg(v, 0.0, 0.0))


def _at_y(G):
    return ex.substitute(G, {"x": ex.Var("y")})


def _h():
    return ex.Var("alpha")


def backward_euler_map(ode: OdeModel, domain_hint=None) -> ImplicitMap:
    F = ex.sub(ex.sub(ex.Var("y"), ex.Var("x")), ex.mul(_h(), _at_y(ode.G)))
    return build_map(F, f"{ode.name} (backward Euler)", domain_hint)


def trapezoid_map(ode: OdeModel, domain_hint=None) -> ImplicitMap:
    avg = ex.add(_at_y(ode.G), ode.G)
    F = ex.sub(ex.sub(ex.Var("y"), ex.Var("x")), ex.mul(ex.div(_h(), ex.Num(2.0)), avg))
    return build_map(F, f"{ode.name} (trapezoid)", domain_hint)


def forward_euler_map(ode: OdeModel, domain_hint=None) -> ImplicitMap:
    F = ex.sub(ex.sub(ex.Var("y"), ex.Var("x")), ex.mul(_h(), ode.G))
    return build_map(F, f"{ode.name} (forward Euler)", domain_hint)


def method_map(ode: OdeModel, method: str, domain_hint=None) -> ImplicitMap:
    builders = {"backward_euler": backward_euler_map, "trapezoid": trapezoid_map,
                "forward_euler": forward_euler_map}
    if method not in builders:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return builders[method](ode, domain_hint)


def _points(orbit) -> Sequence[float]:
    return orbit.points if isinstance(orbit, Orbit) else list(orbit)


def _h_of(orbit, h: Optional[float]) -> float:
    if h is None:
        if not isinstance(orbit, Orbit):
            raise ValueError("h is required when the orbit is a bare point list")
        return orbit.alpha
    return float(h)


# ---------------------------------------------------------------------------
# backward Euler


def euler_nonhyperbolicity(ode: OdeModel, orbit, h: Optional[float] = None) -> float:
    """``prod_j (1 - h G'(x_j))``; non-hyperbolic when it equals +-1.

    Since each step has ``dy/dx = 1 / (1 - h G'(y))`` this product is the
    reciprocal of ``d_x f^p``; the two coincide exactly at +-1.
    """
    _, dg = ode.funcs()
    h = _h_of(orbit, h)
    prod = 1.0
    for v in _points(orbit):
        prod *= 1.0 - h * dg(v)
    return prod


def euler_transversality(ode: OdeModel, orbit, h: Optional[float] = None) -> float:
    """``d_h f^p(x_0)`` for backward Euler.

    ``sum_{j=1}^{p} G(x_j) prod_{i=j}^{p} 1 / (1 - h G'(x_i))`` with
    ``x_p = x_0``.
    """
    g, dg = ode.funcs()
    h = _h_of(orbit, h)
    pts = list(_points(orbit))
    p = len(pts)
    xs = pts[1:] + pts[:1]          # x_1 .. x_p
    inv = [1.0 / (1.0 - h * dg(v)) for v in xs]
    terms = []
    for j in range(p):
        t = g(xs[j])
        for i in range(j, p):
            t *= inv[i]
        terms.append(t)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# trapezoid


def trapezoid_nonhyperbolicity(ode: OdeModel, orbit, h: Optional[float] = None) -> float:
    """``prod_j (1 + h/2 G'(x_j)) / (1 - h/2 G'(x_j))``, equal to ``d_x f^p``."""
    _, dg = ode.funcs()
    h = _h_of(orbit, h)
    prod = 1.0
    for v in _points(orbit):
        s = 0.5 * h * dg(v)
        prod *= (1.0 + s) / (1.0 - s)
    return prod


def trapezoid_transversality(ode: OdeModel, orbit, h: Optional[float] = None) -> float:
    """``d_h f^p(x_0)`` for the trapezoid rule.

    ``(1/2) sum_j (G_j + G_{j+1}) / (1 - h/2 G'_{j+1})
    prod_{i>j} (1 + h/2 G'_i) / (1 - h/2 G'_{i+1})`` with ``x_p = x_0``.
    """
    g, dg = ode.funcs()
    h = _h_of(orbit, h)
    pts = list(_points(orbit))
    p = len(pts)
    G = [g(pts[j % p]) for j in range(p + 1)]
    D = [dg(pts[j % p]) for j in range(p + 1)]
    terms = []
    for j in range(p):
        t = 0.5 * (G[j] + G[j + 1]) / (1.0 - 0.5 * h * D[j + 1])
        for i in range(j + 1, p):
            t *= (1.0 + 0.5 * h * D[i]) / (1.0 - 0.5 * h * D[i + 1])
        terms.append(t)
    return math.fsum(terms)
