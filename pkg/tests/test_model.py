import math

import numpy as np
import pytest

from implicitbif.errors import EvaluationDomainError, ExpressionSyntaxError
from implicitbif.model import PARTIAL_KEYS, build_map, eval_partial

EX1 = "y - alpha*x*(1 - x + y^5/100)"


def _points(rng, lo, hi, n):
    return rng.uniform(lo, hi, size=(n, 3))


def test_ex1_fx_matches_reference_form():
    m = build_map(EX1)
    for x, y, a in _points(np.random.default_rng(1), -2, 2, 20):
        want = a * (-1 + 2 * x - y ** 5 / 100)
        assert math.isclose(m.fn("Fx")(x, y, a), want, rel_tol=1e-12, abs_tol=1e-12)


def test_ex4_fyyy_matches_reference_form():
    m = build_map(EX1)
    for x, y, a in _points(np.random.default_rng(2), -2, 2, 20):
        want = -3 * a * x * y ** 2 / 5
        assert math.isclose(m.fn("Fyyy")(x, y, a), want, rel_tol=1e-12, abs_tol=1e-12)


def test_linear_shift_has_no_curvature():
    m = build_map("y - x")
    for key, idx in PARTIAL_KEYS.items():
        if sum(idx) >= 2:
            assert m.partials[idx].value == 0.0


def test_eval_partial_ex1_fy():
    m = build_map(EX1)
    b = {"x": 0.16498, "y": 0.51813, "alpha": 3.75938}
    want = 1 - 3.75938 * 0.16498 * 0.51813 ** 4 / 20
    assert math.isclose(eval_partial(m, "Fy", b), want, rel_tol=1e-12)


def test_eval_partial_fixed_point():
    m = build_map("y - alpha*x*(1 - x)")
    a = 2.5
    x = 1 - 1 / a
    assert abs(eval_partial(m, "F", {"x": x, "y": x, "alpha": a})) <= 1e-12


def test_eval_partial_shift_fx():
    m = build_map("y - x")
    assert eval_partial(m, (1, 0, 0), {"x": 3.0, "y": -1.0, "alpha": 7.0}) == -1.0


def test_eval_partial_domain_error():
    m = build_map("y - ln(x)")
    with pytest.raises(EvaluationDomainError):
        eval_partial(m, "F", {"x": -1.0, "y": 0.0, "alpha": 0.0})


def test_parse_errors_propagate():
    with pytest.raises(ExpressionSyntaxError):
        build_map("y - (x")


def test_default_domain():
    assert build_map("y - x").domain_hint == (-10.0, 10.0)


def test_unknown_partial_key():
    m = build_map("y - x")
    with pytest.raises(KeyError):
        m.fn((4, 0, 0))


@pytest.mark.parametrize("text", [
    EX1,
    "y + x + alpha*x*((x - y^3/100)^2 - 1) - x*((x - y^3/100)^4 - 1)",
    "y - alpha*sin(x*y) - exp(0.1*alpha*y)*cos(x)",
])
def test_all_partials_match_finite_differences(text):
    """Each partial against a central difference of its parent partial."""
    m = build_map(text, domain_hint=(-2, 2))
    rng = np.random.default_rng(3)
    for x, y, a in _points(rng, *m.domain_hint, 100):
        pt = np.array([x, y, a])
        for idx in PARTIAL_KEYS.values():
            if sum(idx) == 0:
                continue
            axis = next(k for k in range(3) if idx[k])
            parent = list(idx)
            parent[axis] -= 1
            f = m.fn(tuple(parent))
            h = 1e-4 * max(1.0, abs(pt[axis]))
            e = np.zeros(3)
            e[axis] = h
            d1 = (f(*(pt + e)) - f(*(pt - e))) / (2 * h)
            d2 = (f(*(pt + e / 2)) - f(*(pt - e / 2))) / h
            fd = (4 * d2 - d1) / 3
            exact = m.fn(idx)(*pt)
            assert math.isclose(exact, fd, rel_tol=1e-6, abs_tol=1e-6), (idx, pt)
