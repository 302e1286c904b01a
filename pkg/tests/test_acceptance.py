"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing criterion still reports its measured values.
"""

import warnings

import numpy as np
import pytest

from randmaps import random_map, random_ode_cycle
from implicitbif import catalog, deriv, diagram, oracle
from implicitbif.bifurcation import classify, solve_bifurcation
from implicitbif.errors import BranchEscapeError
from implicitbif.model import build_map
from implicitbif.numstep import (
    backward_euler_map,
    euler_nonhyperbolicity,
    euler_transversality,
    trapezoid_map,
    trapezoid_nonhyperbolicity,
    trapezoid_transversality,
)
from implicitbif.orbit import solve_periodic_orbit

RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])
    assert ok, detail


def reproduce(which):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return catalog.reproduce(which)


def misses(rep):
    return [f"{r.label} expected={r.expected} got={r.computed!r}" for r in rep.rows if not r.ok]


@pytest.mark.parametrize("n, which", [(1, "ex1"), (2, "ex2"), (3, "ex3"), (4, "ex4"),
                                      (5, "euler")])
def test_worked_example(n, which):
    rep = reproduce(which)
    bad = misses(rep)
    record(n, not bad, f"{which}: {len(rep.rows) - len(bad)}/{len(rep.rows)} rows within "
                       f"tolerance" + (f"; misses: {'; '.join(bad)}" if bad else ""))


def rel_err(a, b, floor=1e-8):
    return abs(a - b) / max(abs(a), abs(b), floor)


def test_oracle_equivalence():
    rng = np.random.default_rng(7)
    worst, fails, n, k = {}, [], 0, 0
    while n < 50:
        p, sign = 1 + k % 3, 1 if k % 2 else -1
        k += 1
        m, pts, a = random_map(rng, p, sign)
        o = solve_bifurcation(m, p, sign, pts + [a]).orbit
        vals = {"d1": deriv.d1(m, o)[0], "d_alpha": deriv.d_alpha(m, o)[0],
                "d2": deriv.d2(m, o)[0], "d3": deriv.d3(m, o),
                "d_alpha_x": deriv.d_alpha_x(m, o)}
        try:
            fds = {w: oracle.fd(m, o, w) for w in vals}
        except BranchEscapeError:
            # orbit sits too near a fold of the step relation to probe; draw another
            continue
        n += 1
        for w, v in vals.items():
            e = rel_err(v, fds[w])
            worst[w] = max(worst.get(w, 0.0), e)
            if e > (1e-4 if w == "d3" else 1e-5):
                fails.append((k, w, e))
    detail = ", ".join(f"{w} {e:.1e}" for w, e in worst.items())
    record(6, not fails, f"50 maps, worst relative errors: {detail}")


def test_explicit_reduction():
    m = build_map("y - alpha*x*(1 - x)")
    worst = 0.0
    for a, seed in ((3.2, [0.5, 0.8]), (3.5, [0.38, 0.83, 0.5, 0.87]),
                    (3.83, [0.16, 0.51, 0.96]), (2.5, [0.6])):
        o = solve_periodic_orbit(m, len(seed), a, seed)
        want = float(np.prod([a * (1 - 2 * x) for x in o.points]))
        worst = max(worst, abs(deriv.d1(m, o)[0] - want))
    o = solve_bifurcation(m, 1, -1, [0.6, 2.9]).orbit
    ex, ea = abs(o.points[0] - 2 / 3), abs(o.alpha - 3.0)
    ok = worst <= 1e-9 and ex <= 1e-8 and ea <= 1e-8
    record(7, ok, f"max |d1 - prod g'| {worst:.1e}; flip at x err {ex:.1e}, alpha err {ea:.1e}")


def test_specialization_identity():
    rng = np.random.default_rng(11)
    worst = 0.0
    for k in range(20):
        p, sign, h = 2 + k % 2, 1 if k % 2 else -1, float(rng.uniform(0.3, 1.5))
        # backward Euler at a constructed bifurcation: the step product is +-1
        ode, pts = random_ode_cycle(rng, p, h, "backward_euler", sign)
        m = backward_euler_map(ode)
        o = solve_bifurcation(m, p, sign, pts + [h]).orbit
        worst = max(worst, abs(euler_nonhyperbolicity(ode, o) - deriv.d1(m, o)[0]),
                    abs(euler_transversality(ode, o) - deriv.d_alpha(m, o)[0]))
        # trapezoid on a generic cycle (it has no genuine 2-cycles)
        ode, pts = random_ode_cycle(rng, 3, h, "trapezoid")
        t = trapezoid_map(ode)
        o = solve_periodic_orbit(t, 3, h, pts)
        worst = max(worst, abs(trapezoid_nonhyperbolicity(ode, o) - deriv.d1(t, o)[0]),
                    abs(trapezoid_transversality(ode, o) - deriv.d_alpha(t, o)[0]))
    record(8, worst <= 1e-10, f"20 ODE models, max abs difference {worst:.1e}")


def test_schwarzian_identity():
    flips = []
    for which in ("ex4", "euler"):
        for case, r in reproduce(which).reports:
            if r.kind == "flip":
                flips.append((f"{which} {case.label}", r))
    worst = 0.0
    for _, r in flips:
        b = r.bundle
        worst = max(worst, rel_err(b.schwarzian, -3 * (0.5 * b.d2 ** 2 + b.d3 / 3)))
    record(9, len(flips) == 4 and worst <= 1e-9,
           f"{len(flips)} flip candidates, worst relative error {worst:.1e}")


def test_sweep_sanity():
    m = catalog.model_for("euler")
    res = diagram.sweep(m, diagram.parse_grid("0.35:0.55:201"), 1.001, burn=2000, keep=64,
                        direction="backward")
    t = diagram.find_transition(res, 2, 4)
    ok = t is not None and abs(t.alpha - 0.5037) <= 0.01
    where = f"{t.alpha:.4f}" if t else "none"
    record(10, ok, f"period 2 -> 4 detected at h = {where}")
