"""Bifurcations of periodic orbits of implicitly defined one-dimensional maps."""

from .bifurcation import (
    BifurcationCandidate,
    BifurcationReport,
    classify,
    solve_bifurcation,
    solve_pitchfork,
)
from .deriv import DerivativeBundle, d1, d2, d3, d_alpha, d_alpha_x, derivative_bundle, schwarzian
from .expr import differentiate, evaluate, parse, to_text
from .model import ImplicitMap, build_map, eval_partial
from .numstep import OdeModel, backward_euler_map, forward_euler_map, trapezoid_map
from .orbit import Orbit, find_periodic_orbits, implicit_step, iterate, solve_periodic_orbit

__version__ = "0.1.0"
