import numpy as np
import pytest

from conftest import HIGH_PRECISION, MISMATCH
from randmaps import random_map
from implicitbif import deriv, oracle
from implicitbif.bifurcation import solve_bifurcation
from implicitbif.errors import PreconditionError
from implicitbif.model import build_map
from implicitbif.orbit import make_orbit, solve_periodic_orbit


def rel_close(a, b, rel, floor=1e-8):
    return abs(a - b) <= rel * max(abs(a), abs(b), floor)


def orbit_of(ex):
    return ex[0], ex[1].orbit


# --- d1 ------------------------------------------------------------------

def test_d1_ex1_is_one(examples):
    m, o = orbit_of(examples["ex1"])
    assert abs(deriv.d1(m, o)[0] - 1.0) <= 1e-6


def test_d1_ex4_is_minus_one(examples):
    m, o = orbit_of(examples["ex4"])
    assert abs(deriv.d1(m, o)[0] + 1.0) <= 1e-6


@pytest.mark.parametrize("a", [0.7, 1.5, 2.5, 2.9])
def test_d1_logistic_fixed_point(a):
    m = build_map("y - alpha*x*(1 - x)")
    o = make_orbit(m, [1 - 1 / a], a)
    assert deriv.d1(m, o)[0] == pytest.approx(2 - a, abs=1e-12)


def test_d1_partial_list(examples):
    m, o = orbit_of(examples["ex1"])
    value, parts = deriv.d1(m, o)
    assert len(parts) == 4 and parts[0] == 1.0 and parts[-1] == value


# --- d_alpha -------------------------------------------------------------

def test_d_alpha_ex1(examples):
    m, o = orbit_of(examples["ex1"])
    assert abs(deriv.d_alpha(m, o)[0] + 0.844) <= 1e-2


def test_d_alpha_ex2_vanishes(examples):
    m, o = orbit_of(examples["ex2"])
    assert abs(deriv.d_alpha(m, o)[0]) <= 1e-8


def test_d_alpha_without_parameter():
    m = build_map("y - x^2 + 1")
    o = solve_periodic_orbit(m, 2, 0.0, [-0.1, -0.9])
    assert deriv.d_alpha(m, o)[0] == 0.0


# --- d2 ------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason=MISMATCH)
def test_d2_ex1_reference(examples):
    m, o = orbit_of(examples["ex1"])
    assert abs(deriv.d2(m, o)[0] - 23.5) <= 0.1


def test_d2_ex1_high_precision(examples):
    m, o = orbit_of(examples["ex1"])
    assert rel_close(deriv.d2(m, o)[0], HIGH_PRECISION["ex1"]["d2"], 1e-6)
    assert rel_close(deriv.d3(m, o), HIGH_PRECISION["ex1"]["d3"], 1e-6)


def test_d2_ex2(examples):
    m, o = orbit_of(examples["ex2"])
    assert abs(deriv.d2(m, o)[0] + 16.79) <= 0.05


def test_d2_linear_is_zero():
    m = build_map("y - 0.5*x")
    o = make_orbit(m, [0.0], 0.0)
    assert deriv.d2(m, o)[0] == 0.0
    assert deriv.d3(m, o) == 0.0


# --- d_alpha_x -----------------------------------------------------------

@pytest.mark.parametrize("which, value, tol", [
    ("ex2", 4.07769, 1e-3),
    ("ex4", 1.45122, 1e-3),
    ("ex3", 4.05, 0.05),
])
def test_d_alpha_x_examples(examples, which, value, tol):
    m, o = orbit_of(examples[which])
    assert abs(deriv.d_alpha_x(m, o) - value) <= tol


def test_d_alpha_x_precondition():
    m = build_map("y - alpha*x*(1 - x)")
    o = make_orbit(m, [0.6], 2.5)
    with pytest.raises(PreconditionError):
        deriv.d_alpha_x(m, o)


# --- d3 / Schwarzian -----------------------------------------------------

def test_d3_ex3(examples):
    m, o = orbit_of(examples["ex3"])
    assert abs(deriv.d3(m, o) + 295.6) <= 1.0


@pytest.mark.xfail(strict=True, reason=MISMATCH)
def test_d3_ex4_reference_genericity(examples):
    m, o = orbit_of(examples["ex4"])
    v = deriv.d3(m, o)
    assert abs(0.5 * deriv.d2(m, o)[0] ** 2 + v / 3 - 1383.1) <= 1.0


def test_d3_ex4_high_precision(examples):
    m, o = orbit_of(examples["ex4"])
    hp = HIGH_PRECISION["ex4"]
    assert rel_close(deriv.d2(m, o)[0], hp["d2"], 1e-6)
    assert rel_close(deriv.d3(m, o), hp["d3"], 1e-6)
    assert rel_close(deriv.derivative_bundle(m, o).genericity, hp["genericity"], 1e-6)


def test_schwarzian_flip_identity(examples):
    m, o = orbit_of(examples["ex4"])
    b = deriv.derivative_bundle(m, o)
    assert rel_close(deriv.schwarzian(m, o), -3 * b.genericity, 1e-9)


@pytest.mark.xfail(strict=True, reason=MISMATCH)
def test_schwarzian_ex4_reference(examples):
    m, o = orbit_of(examples["ex4"])
    assert abs(deriv.schwarzian(m, o) + 3 * 1383.1) <= 3


def test_schwarzian_affine_is_zero():
    m = build_map("y - 2*x - 0.3")
    o = make_orbit(m, [-0.3], 0.0)
    assert deriv.schwarzian(m, o) == 0.0


# --- properties ----------------------------------------------------------

def _analytic(m, o, mixed):
    out = {"d1": deriv.d1(m, o)[0], "d_alpha": deriv.d_alpha(m, o)[0],
           "d2": deriv.d2(m, o)[0], "d3": deriv.d3(m, o)}
    if mixed:
        out["d_alpha_x"] = deriv.d_alpha_x(m, o)
    return out


@pytest.mark.parametrize("seed", range(12))
def test_oracle_equivalence_random_orbits(seed):
    rng = np.random.default_rng(1000 + seed)
    p = 1 + seed % 3
    m, pts, a = random_map(rng, p)
    o = solve_periodic_orbit(m, p, a, pts)
    for which, v in _analytic(m, o, mixed=False).items():
        tol = 1e-4 if which == "d3" else 1e-5
        assert rel_close(v, oracle.fd(m, o, which), tol), which


@pytest.mark.parametrize("seed", range(8))
def test_oracle_equivalence_mixed_at_bifurcation(seed):
    rng = np.random.default_rng(2000 + seed)
    p, sign = 1 + seed % 3, (-1) ** seed
    m, pts, a = random_map(rng, p, sign)
    o = solve_bifurcation(m, p, sign, pts + [a]).orbit
    assert rel_close(deriv.d_alpha_x(m, o), oracle.fd(m, o, "d_alpha_x"), 1e-5)


def _chain(gs, pts):
    """Derivatives of g composed p times via the explicit chain rule."""
    g1, g2, g3 = gs
    D1, D2, D3 = 1.0, 0.0, 0.0
    for x in pts:
        D1, D2, D3 = (g1(x) * D1,
                      g2(x) * D1 ** 2 + g1(x) * D2,
                      g3(x) * D1 ** 3 + 3 * g2(x) * D1 * D2 + g1(x) * D3)
    return D1, D2, D3


@pytest.mark.parametrize("a, p, seed", [(3.2, 2, [0.5, 0.8]), (3.5, 4, [0.38, 0.83, 0.5, 0.87]),
                                        (3.83, 3, [0.16, 0.51, 0.96])])
def test_explicit_reduction(a, p, seed):
    m = build_map("y - alpha*x*(1 - x)")
    o = solve_periodic_orbit(m, p, a, seed)
    gs = (lambda x: a * (1 - 2 * x), lambda x: -2 * a, lambda x: 0.0)
    D1, D2, D3 = _chain(gs, o.points)
    assert rel_close(deriv.d1(m, o)[0], D1, 1e-9)
    assert rel_close(deriv.d2(m, o)[0], D2, 1e-9)
    assert rel_close(deriv.d3(m, o), D3, 1e-9)


def test_explicit_reduction_cubic_terms():
    m = build_map("y - alpha*x + x^3 - 0.2*x^2")
    a = 2.3
    o = solve_periodic_orbit(m, 2, a, [0.9, -1.3])
    gs = (lambda x: a - 3 * x ** 2 + 0.4 * x, lambda x: -6 * x + 0.4, lambda x: -6.0)
    D1, D2, D3 = _chain(gs, o.points)
    assert rel_close(deriv.d1(m, o)[0], D1, 1e-9)
    assert rel_close(deriv.d2(m, o)[0], D2, 1e-9)
    assert rel_close(deriv.d3(m, o), D3, 1e-9)


def test_d1_cyclic_shift_invariance(examples):
    m, o = orbit_of(examples["ex1"])
    ref = deriv.d1(m, o)[0]
    for k in range(1, 3):
        assert abs(deriv.d1(m, o.rotated(k))[0] - ref) <= 1e-12


def test_d1_sign_consistency():
    rng = np.random.default_rng(5)
    for p in (1, 2, 3):
        m, pts, a = random_map(rng, p)
        o = solve_periodic_orbit(m, p, a, pts)
        prod = 1.0
        for x, y in o.pairs():
            t = m.evaluate_all(x, y, a)
            prod *= -t["Fx"] / t["Fy"]
        assert abs(deriv.d1(m, o)[0] - prod) <= 1e-12


def test_fx_zero_falls_back_to_oracle():
    # logistic at alpha = 2: the fixed point 1/2 is the critical point
    m = build_map("y - alpha*x*(1 - x)")
    o = make_orbit(m, [0.5], 2.0)
    with pytest.raises(deriv.FormulaSingularity):
        deriv.d2(m, o)
    b = deriv.derivative_bundle(m, o)
    assert b.analytic_fallback
    assert {"d2", "d3"} <= set(b.oracle_fields)
    assert b.d2 == pytest.approx(-4.0, abs=1e-6)
    assert b.d3 == pytest.approx(0.0, abs=1e-4)


def test_bundle_mixed_away_from_bifurcation_uses_oracle():
    m = build_map("y - alpha*x*(1 - x)")
    o = make_orbit(m, [1 - 1 / 2.5], 2.5)
    b = deriv.derivative_bundle(m, o)
    assert "d_alpha_x" in b.oracle_fields
    # f = a x (1 - x): d_a d_x f = 1 - 2x
    assert b.d_alpha_x == pytest.approx(1 - 2 * o.points[0], rel=1e-6)
