import math

import numpy as np
import pytest

from conftest import MISMATCH
from randmaps import random_map
from implicitbif import oracle
from implicitbif.errors import BranchEscapeError
from implicitbif.model import build_map
from implicitbif.orbit import make_orbit, solve_periodic_orbit


@pytest.mark.xfail(strict=True, reason=MISMATCH)
def test_ex1_d2_reference(examples):
    m, c, _ = examples["ex1"]
    assert abs(oracle.fd(m, c.orbit, "d2") - 23.5) <= 0.2


def test_ex1_d2_high_precision(examples):
    from conftest import HIGH_PRECISION
    m, c, _ = examples["ex1"]
    assert oracle.fd(m, c.orbit, "d2") == pytest.approx(HIGH_PRECISION["ex1"]["d2"], rel=1e-6)


def test_ex3_d3(examples):
    m, c, _ = examples["ex3"]
    assert abs(oracle.fd(m, c.orbit, "d3") + 295.6) <= 3


@pytest.mark.parametrize("which, value", [("d1", 1.0), ("d2", 0.0), ("d3", 0.0),
                                          ("d_alpha", 0.0), ("d_alpha_x", 0.0)])
def test_identity_map(which, value):
    m = build_map("y - x")
    o = make_orbit(m, [0.4], 1.0)
    assert oracle.fd(m, o, which) == pytest.approx(value, abs=1e-9)


def test_unknown_quantity():
    m = build_map("y - x")
    with pytest.raises(ValueError):
        oracle.fd(m, make_orbit(m, [0.4], 1.0), "d4")


def test_policy_validation():
    with pytest.raises(ValueError):
        oracle.FdPolicy(base_step=0.0)
    with pytest.raises(ValueError):
        oracle.FdPolicy(richardson_levels=0)


def test_richardson_removes_quadratic_error():
    # f' of exp at 0 from central differences at h, h/2, h/4
    vals = [(math.exp(h) - math.exp(-h)) / (2 * h) for h in (0.1, 0.05, 0.025)]
    assert abs(oracle.richardson(vals) - 1.0) < 1e-10 < abs(vals[-1] - 1.0)


def test_branch_escape_reports_offset():
    # sqrt-like branch: y^2 = x has no real root for x < 0
    m = build_map("y^2 - x")
    o = make_orbit(m, [0.0004], 0.0)
    with pytest.raises(BranchEscapeError) as info:
        oracle.fd(m, o, "d1", oracle.FdPolicy(base_step=1e-3, search=0))
    assert info.value.offset is not None


@pytest.mark.parametrize("seed", range(6))
def test_step_halving_self_consistency(seed):
    rng = np.random.default_rng(4000 + seed)
    p = 1 + seed % 2
    m, pts, a = random_map(rng, p)
    o = solve_periodic_orbit(m, p, a, pts)
    for which in ("d1", "d2", "d_alpha"):
        base = oracle.DEFAULT_STEPS[which]
        v1 = oracle.fd(m, o, which, oracle.FdPolicy(base))
        v2 = oracle.fd(m, o, which, oracle.FdPolicy(base / 2))
        assert abs(v1 - v2) <= 1e-6 * max(abs(v1), 1e-8), which
