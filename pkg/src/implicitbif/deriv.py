"""Closed-form derivatives of f^p along an orbit of an implicit map.

With ``F^j`` the partials of F evaluated at ``(x_j, x_{j+1}, alpha)`` and
``nu_j = F_x^j / F_y^j``:

* ``d_x f^j = (-1)^j prod_{i<j} nu_i``
* ``d_alpha f^j = (-1)^j sum_{k<j} (-1)^k (F_alpha^k / F_y^k) prod_{k<i<j} nu_i``
* ``d_xx f^j = d_x f^j sum_{i<j} Q_i / F_x^i d_x f^i``,
  ``Q_i = F_xx^i - 2 F_xy^i nu_i + F_yy^i nu_i^2``

and a four-group expression for the third derivative. Sums use compensated
summation (``math.fsum``) in index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from . import oracle
from .errors import PreconditionError, SingularError
from .model import ImplicitMap
from .orbit import Orbit

FX_FLOOR = 1e-12
BIFURCATION_TOL = 1e-6


class FormulaSingularity(SingularError):
    """Some F_x^j along the orbit vanishes, so the closed forms divide by zero."""


@dataclass(frozen=True)
class DerivativeBundle:
    d1: float
    d_alpha: float
    d2: float
    d_alpha_x: Optional[float]
    d3: float
    schwarzian: Optional[float]
    nu: List[float]
    partial_d1: List[float]
    partial_d2: Optional[List[float]]
    partial_dalpha: List[float]
    analytic_fallback: bool = False
    # quantities that came from the finite-difference oracle
    oracle_fields: Tuple[str, ...] = field(default=())

    @property
    def genericity(self) -> float:
        return 0.5 * self.d2 ** 2 + self.d3 / 3.0

    def as_dict(self) -> dict:
        return {
            "d1": self.d1, "d_alpha": self.d_alpha, "d2": self.d2,
            "d_alpha_x": self.d_alpha_x, "d3": self.d3, "schwarzian": self.schwarzian,
            "genericity": self.genericity, "nu": list(self.nu),
            "partial_d1": list(self.partial_d1),
            "partial_d2": None if self.partial_d2 is None else list(self.partial_d2),
            "partial_dalpha": list(self.partial_dalpha),
            "analytic_fallback": self.analytic_fallback,
            "oracle_fields": list(self.oracle_fields),
        }


def step_table(m: ImplicitMap, points, alpha) -> List[dict]:
    """Partials of F at each consecutive pair ``(x_j, x_{j+1 mod p})``."""
    p = len(points)
    return [m.evaluate_all(points[j], points[(j + 1) % p], alpha) for j in range(p)]


def _table(m, o):
    return step_table(m, o.points, o.alpha)


def _nu(tab):
    return [t["Fx"] / t["Fy"] for t in tab]


def _check_fx(tab, floor=FX_FLOOR):
    for j, t in enumerate(tab):
        if abs(t["Fx"]) < floor:
            raise FormulaSingularity(f"|F_x| = {abs(t['Fx']):.3g} at orbit step {j}")


def _q(t, nu):
    return t["Fxx"] - 2.0 * t["Fxy"] * nu + t["Fyy"] * nu * nu


# ---------------------------------------------------------------------------
# table-level formulas (points need not be an exact orbit)


def _partial_d1(tab) -> List[float]:
    out = [1.0]
    for nu in _nu(tab):
        out.append(-nu * out[-1])
    return out


def _d1_closed(tab) -> float:
    prod = 1.0
    for t in tab:
        prod *= t["Fx"] / t["Fy"]
    return (-1) ** len(tab) * prod


def _partial_dalpha(tab) -> List[float]:
    nu = _nu(tab)
    out = [0.0]
    for j in range(1, len(tab) + 1):
        terms = []
        for k in range(j):
            term = (-1) ** k * tab[k]["Fa"] / tab[k]["Fy"]
            for i in range(k + 1, j):
                term *= nu[i]
            terms.append(term)
        out.append((-1) ** j * math.fsum(terms))
    return out


def _partial_d2(tab, pd1) -> List[float]:
    _check_fx(tab)
    nu = _nu(tab)
    out = [0.0]
    terms = []
    for j in range(len(tab)):
        terms.append(_q(tab[j], nu[j]) / tab[j]["Fx"] * pd1[j])
        out.append(pd1[j + 1] * math.fsum(terms))
    return out


def _d3_closed(tab, pd1, pd2) -> float:
    _check_fx(tab)
    p = len(tab)
    nu = _nu(tab)
    g2, g3, g4 = [], [], []
    for j in range(p):
        t, v = tab[j], nu[j]
        fx = t["Fx"]
        g2.append(_q(t, v) / fx * pd2[j])
        c = t["Fxxx"] - 3.0 * t["Fxxy"] * v + 3.0 * t["Fxyy"] * v ** 2 - t["Fyyy"] * v ** 3
        g3.append(c / fx * pd1[j] ** 2)
        e = (-t["Fxx"] ** 2 + t["Fxx"] * t["Fxy"] * v
             + (t["Fxx"] * t["Fyy"] + 2.0 * t["Fxy"] ** 2) * v ** 2
             - 5.0 * t["Fxy"] * t["Fyy"] * v ** 3 + 2.0 * t["Fyy"] ** 2 * v ** 4)
        g4.append(e * (pd1[j] / fx) ** 2)
    d1p = pd1[p]
    return pd2[p] ** 2 / d1p + d1p * (math.fsum(g2) + math.fsum(g3) + math.fsum(g4))


def _mixed_sum(tab, pda) -> float:
    _check_fx(tab)
    nu = _nu(tab)
    terms = []
    for j, t in enumerate(tab):
        fx, fy = t["Fx"], t["Fy"]
        terms.append(_q(t, nu[j]) / fx * pda[j])
        terms.append((t["Fyy"] / fy - t["Fxy"] / fx) * t["Fa"] / fy)
        terms.append(t["Fxa"] / fx)
        terms.append(-t["Fya"] / fy)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# public per-orbit operations


def d1(m: ImplicitMap, o: Orbit) -> Tuple[float, List[float]]:
    """``d_x f^p(x_0)`` and the list ``d_x f^j(x_0)``, j = 0..p."""
    tab = _table(m, o)
    return _d1_closed(tab), _partial_d1(tab)


def d_alpha(m: ImplicitMap, o: Orbit) -> Tuple[float, List[float]]:
    """``d_alpha f^p(x_0)`` and the list ``d_alpha f^j``, j = 0..p."""
    pda = _partial_dalpha(_table(m, o))
    return pda[-1], pda


def d2(m: ImplicitMap, o: Orbit) -> Tuple[float, List[float]]:
    """Second x-derivative of f^p and the list for every f^j.

    Raises:
        FormulaSingularity: some ``F_x^j`` vanishes along the orbit.
    """
    tab = _table(m, o)
    pd2 = _partial_d2(tab, _partial_d1(tab))
    return pd2[-1], pd2


def d3(m: ImplicitMap, o: Orbit) -> float:
    """Third x-derivative of f^p.

    Raises:
        FormulaSingularity: some ``F_x^j`` vanishes along the orbit.
    """
    tab = _table(m, o)
    pd1 = _partial_d1(tab)
    return _d3_closed(tab, pd1, _partial_d2(tab, pd1))


def d_alpha_x(m: ImplicitMap, o: Orbit, tol: float = BIFURCATION_TOL) -> float:
    """Mixed derivative ``d_alpha d_x f^p(x_0)`` at a non-hyperbolic orbit.

    Evaluated as ``d_x f^p * sum_j (...)``, which at ``d_x f^p = +-1`` is the
    signed sum form. ``d_alpha f^j`` inside the sum comes from
    :func:`d_alpha`'s partial list.

    Raises:
        PreconditionError: ``| |d_x f^p| - 1 | > tol``.
        FormulaSingularity: some ``F_x^j`` vanishes along the orbit.
    """
    tab = _table(m, o)
    first = _d1_closed(tab)
    if abs(abs(first) - 1.0) > tol:
        raise PreconditionError(
            f"mixed derivative formula needs |d_x f^p| = 1, got {first!r}")
    return first * _mixed_sum(tab, _partial_dalpha(tab))


def schwarzian_from(first: float, second: float, third: float) -> float:
    if first == 0.0:
        raise SingularError("Schwarzian undefined where d_x f^p = 0")
    return third / first - 1.5 * (second / first) ** 2


def schwarzian(m: ImplicitMap, o: Orbit) -> float:
    """``S f^p = d3/d1 - (3/2)(d2/d1)^2`` at ``x_0``."""
    tab = _table(m, o)
    pd1 = _partial_d1(tab)
    pd2 = _partial_d2(tab, pd1)
    return schwarzian_from(pd1[-1], pd2[-1], _d3_closed(tab, pd1, pd2))


def derivative_bundle(m: ImplicitMap, o: Orbit, policy: oracle.FdPolicy = oracle.FdPolicy(),
                      mixed: str = "auto") -> DerivativeBundle:
    """All derivative quantities at ``o``.

    Where the closed forms are singular (``F_x^j = 0``) or, for the mixed
    derivative, not applicable (``|d1| != 1``), the finite-difference oracle
    supplies the value and the field name is listed in ``oracle_fields``.
    ``mixed`` is ``"auto"``, ``"oracle"`` or ``"skip"``.
    """
    tab = _table(m, o)
    nu = _nu(tab)
    pd1 = _partial_d1(tab)
    first = _d1_closed(tab)
    pda = _partial_dalpha(tab)
    from_oracle = []
    try:
        pd2 = _partial_d2(tab, pd1)
        second = pd2[-1]
        third = _d3_closed(tab, pd1, pd2)
        singular = False
    except FormulaSingularity:
        pd2 = None
        second = oracle.fd(m, o, "d2", policy)
        third = oracle.fd(m, o, "d3", policy)
        from_oracle += ["d2", "d3"]
        singular = True

    mixed_val = None
    if mixed == "auto" and not singular and abs(abs(first) - 1.0) <= BIFURCATION_TOL:
        mixed_val = first * _mixed_sum(tab, pda)
    elif mixed != "skip":
        mixed_val = oracle.fd(m, o, "d_alpha_x", policy)
        from_oracle.append("d_alpha_x")

    s = schwarzian_from(first, second, third) if first != 0.0 else None
    return DerivativeBundle(
        d1=first, d_alpha=pda[-1], d2=second, d_alpha_x=mixed_val, d3=third,
        schwarzian=s, nu=nu, partial_d1=pd1, partial_d2=pd2, partial_dalpha=pda,
        analytic_fallback=singular, oracle_fields=tuple(from_oracle),
    )
