"""Parameter sweeps producing bifurcation-diagram data, plus period and
branch-point detection on the result."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import expr as ex
from .errors import ConvergenceError, SingularError
from .model import ImplicitMap, build_map
from .orbit import iterate

DIRECTIONS = ("forward", "backward")


@dataclass(frozen=True)
class SweepResult:
    """Kept iterates per parameter value, in ascending grid order.

    ``failed`` lists parameter values whose iteration diverged; they have no
    rows.
    """

    alphas: Tuple[float, ...]
    orbits: Tuple[Tuple[float, ...], ...]
    failed: Tuple[float, ...] = field(default=())

    def rows(self):
        for a, xs in zip(self.alphas, self.orbits):
            for v in xs:
                yield a, v


def reversed_map(m: ImplicitMap) -> ImplicitMap:
    """The relation read the other way: ``G(x, y, a) = F(y, x, a)``.

    Iterating it runs the original system backwards in time, which turns
    repelling cycles of ``m`` into attracting ones.
    """
    swapped = ex.substitute(m.F, {"x": ex.Var("y"), "y": ex.Var("x")})
    return build_map(swapped, f"{m.name} (reversed)", m.domain_hint)


def parse_grid(text: str) -> np.ndarray:
    """``"lo:hi:n"`` to an ascending grid of n points."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ValueError(f"grid must look like lo:hi:n, got {text!r}") from None
    if not lo < hi or n < 2:
        raise ValueError("grid needs lo < hi and n >= 2")
    return np.linspace(lo, hi, n)


def _run_one(m: ImplicitMap, alpha: float, x0: float, burn: int, keep: int):
    try:
        traj = iterate(m, x0, alpha, burn + keep)
    except (ConvergenceError, SingularError):
        return None
    tail = traj[burn + 1:]
    if not all(math.isfinite(v) for v in tail):
        return None
    return tuple(tail)


_WORKER_MAP = None


def _init_worker(text, name, domain):
    global _WORKER_MAP
    _WORKER_MAP = build_map(text, name, domain)


def _run_in_worker(args):
    return _run_one(_WORKER_MAP, *args)


def sweep(m: ImplicitMap, alphas: Sequence[float], x0: float, burn: int = 500,
          keep: int = 64, direction: str = "forward", workers: int = 1) -> SweepResult:
    """Iterate from ``x0`` at every grid value, drop ``burn`` steps, keep ``keep``.

    Each parameter value starts from ``x0`` and chains root-solve guesses
    along its own trajectory, so grid points are independent and may run in
    parallel; results are assembled in grid order either way.

    Args:
        direction: ``"backward"`` iterates :func:`reversed_map`.
        workers: process count; 1 runs inline.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    if burn < 0 or keep < 1:
        raise ValueError("burn must be >= 0 and keep >= 1")
    if direction == "backward":
        m = reversed_map(m)
    grid = [float(a) for a in alphas]
    if workers > 1:
        jobs = [(a, float(x0), burn, keep) for a in grid]
        with ProcessPoolExecutor(workers, initializer=_init_worker,
                                 initargs=(m.text, m.name, m.domain_hint)) as pool:
            results = list(pool.map(_run_in_worker, jobs, chunksize=8))
    else:
        results = [_run_one(m, a, x0, burn, keep) for a in grid]
    ok_a, ok_x, failed = [], [], []
    for a, r in zip(grid, results):
        if r is None:
            failed.append(a)
        else:
            ok_a.append(a)
            ok_x.append(r)
    return SweepResult(tuple(ok_a), tuple(ok_x), tuple(failed))


def write_csv(result: SweepResult, fh) -> None:
    """``alpha,x`` rows with ``repr`` floats and a trailing failure count."""
    fh.write("alpha,x\n")
    for a, v in result.rows():
        fh.write(f"{a!r},{v!r}\n")
    fh.write(f"# failed={len(result.failed)}\n")


def detect_period(xs: Sequence[float], max_period: int = 32, tol: float = 1e-6) -> int:
    """Smallest p with ``|x_{n+p} - x_n| <= tol * max(1, |x_n|)`` over the tail.

    Returns 0 when no period up to ``max_period`` fits.
    """
    n = len(xs)
    for p in range(1, min(max_period, n - 1) + 1):
        if all(abs(xs[i + p] - xs[i]) <= tol * max(1.0, abs(xs[i])) for i in range(n - p)):
            return p
    return 0


@dataclass(frozen=True)
class Transition:
    alpha_left: float
    alpha_right: float
    period_left: int
    period_right: int

    @property
    def alpha(self) -> float:
        """Branch point estimate: the midpoint of the bracketing grid cell."""
        return 0.5 * (self.alpha_left + self.alpha_right)


def periods(result: SweepResult, max_period: int = 32, tol: float = 1e-6) -> List[int]:
    return [detect_period(xs, max_period, tol) for xs in result.orbits]


def transitions(result: SweepResult, max_period: int = 32, tol: float = 1e-6,
                max_gap: int = 2) -> List[Transition]:
    """Grid cells where the detected period changes.

    Iteration converges only algebraically right at a branch point, so up to
    ``max_gap`` unresolved values (period 0) between two resolved ones are
    bridged; the bracket then spans the gap.
    """
    ps = periods(result, max_period, tol)
    out = []
    last = None
    for k, p in enumerate(ps):
        if p == 0:
            continue
        if last is not None and ps[last] != p and k - last - 1 <= max_gap:
            out.append(Transition(result.alphas[last], result.alphas[k], ps[last], p))
        last = k
    return out


def find_transition(result: SweepResult, p_from: int, p_to: int,
                    **kw) -> Optional[Transition]:
    """First transition from period ``p_from`` to ``p_to``, or None."""
    for t in transitions(result, **kw):
        if t.period_left == p_from and t.period_right == p_to:
            return t
    return None
