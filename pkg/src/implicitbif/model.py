"""Implicit maps F(x, y, alpha) = 0 bundled with the partial derivatives the
orbit formulas need."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Tuple, Union

from . import expr as ex
from .errors import EvaluationDomainError

# multi-index = (order in x, order in y, order in alpha)
PARTIAL_KEYS = {
    "F": (0, 0, 0),
    "Fx": (1, 0, 0),
    "Fy": (0, 1, 0),
    "Fa": (0, 0, 1),
    "Fxx": (2, 0, 0),
    "Fxy": (1, 1, 0),
    "Fyy": (0, 2, 0),
    "Fxa": (1, 0, 1),
    "Fya": (0, 1, 1),
    "Fxxx": (3, 0, 0),
    "Fxxy": (2, 1, 0),
    "Fxyy": (1, 2, 0),
    "Fyyy": (0, 3, 0),
}
KEY_NAMES = {v: k for k, v in PARTIAL_KEYS.items()}
# column order used by ImplicitMap.evaluate_all
PARTIAL_ORDER = tuple(PARTIAL_KEYS)

DEFAULT_DOMAIN = (-10.0, 10.0)

Key = Union[str, Tuple[int, int, int]]


@dataclass(frozen=True)
class ImplicitMap:
    """F together with its 13 symbolic partials.

    ``partials`` maps each multi-index in ``PARTIAL_KEYS`` to an expression;
    ``compiled`` holds matching fast callables ``f(x, y, alpha)``.
    """

    F: ex.Expression
    name: str
    domain_hint: Tuple[float, float]
    partials: Mapping[Tuple[int, int, int], ex.Expression]
    compiled: Mapping[Tuple[int, int, int], Callable] = field(repr=False, compare=False)

    def __call__(self, x, y, alpha):
        return self.compiled[(0, 0, 0)](x, y, alpha)

    def fn(self, key: Key) -> Callable:
        return self.compiled[_as_index(key)]

    def evaluate_all(self, x, y, alpha) -> dict:
        """All 13 partials at one point, keyed by name (``"F"``, ``"Fx"``, ...)."""
        return {name: self.compiled[PARTIAL_KEYS[name]](x, y, alpha) for name in PARTIAL_ORDER}

    @property
    def text(self) -> str:
        return ex.to_text(self.F)


def _as_index(key: Key) -> Tuple[int, int, int]:
    if isinstance(key, str):
        try:
            return PARTIAL_KEYS[key]
        except KeyError:
            raise KeyError(f"unknown partial {key!r}") from None
    key = tuple(key)
    if key not in KEY_NAMES:
        raise KeyError(f"partial {key!r} is not precomputed")
    return key


def build_map(F, name: str = "map", domain_hint: Optional[Tuple[float, float]] = None) -> ImplicitMap:
    """Differentiate ``F`` symbolically and package every partial.

    ``F`` may be an expression or its text form.
    """
    if isinstance(F, str):
        F = ex.parse(F)
    if domain_hint is None:
        domain_hint = DEFAULT_DOMAIN
    lo, hi = map(float, domain_hint)
    if not lo < hi:
        raise ValueError(f"empty domain hint [{lo}, {hi}]")

    partials = {(0, 0, 0): F}
    # build each entry from a lower-order one so shared prefixes are reused
    for idx in sorted(KEY_NAMES, key=sum):
        if idx in partials:
            continue
        for axis, var in enumerate(ex.VARIABLES):
            if idx[axis] == 0:
                continue
            parent = list(idx)
            parent[axis] -= 1
            parent = tuple(parent)
            if parent in partials:
                partials[idx] = ex.differentiate(partials[parent], var)
                break
    compiled = {k: ex.compile_expr(v) for k, v in partials.items()}
    return ImplicitMap(F, name, (lo, hi), partials, compiled)


def eval_partial(m: ImplicitMap, key: Key, b: Mapping[str, float]) -> float:
    """Evaluate one partial at bindings ``b`` (keys ``x``, ``y``, ``alpha``).

    Raises:
        EvaluationDomainError: the expression leaves its domain or overflows.
    """
    v = m.fn(key)(b["x"], b["y"], b["alpha"])
    if not math.isfinite(v):
        raise EvaluationDomainError(f"non-finite value for {key!r}")
    return v
