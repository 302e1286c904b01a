"""Built-in worked examples with pinned seeds and their reference values."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .bifurcation import (
    BifurcationCandidate,
    BifurcationReport,
    classify,
    solve_bifurcation,
    solve_pitchfork,
)
from .model import ImplicitMap, build_map
from .numstep import OdeModel, backward_euler_map, euler_nonhyperbolicity, euler_transversality

# modified implicit logistic map (ex1, ex4)
LOGISTIC_MOD = "y - alpha*x*(1 - x + y^5/100)"
EX2_MAP = "y + x + alpha*x*((x - y^3/100)^2 - 1) - x*((x - y^3/100)^4 - 1)"
EX3_MAP = "y - alpha*(x + y^5/100)^3 - (1 - alpha)*(x + y^5/100)"
EULER_ODE = "x^5 - 1"

WHICH = ("ex1", "ex2", "ex3", "ex4", "euler")


@dataclass(frozen=True)
class Row:
    """One reference-vs-computed comparison."""

    label: str
    expected: Union[float, str]
    computed: Union[float, str]
    tol: Optional[float]

    @property
    def diff(self) -> Optional[float]:
        if isinstance(self.expected, str):
            return None
        return abs(self.computed - self.expected)

    @property
    def ok(self) -> bool:
        if isinstance(self.expected, str):
            return self.expected == self.computed
        return self.diff <= self.tol

    def as_dict(self) -> dict:
        return {"label": self.label, "expected": self.expected, "computed": self.computed,
                "diff": self.diff, "tol": self.tol, "ok": self.ok}


@dataclass(frozen=True)
class Case:
    """A single solve: map, period, sign, pinned seed and expected values."""

    label: str
    period: int
    sign: int
    seed: Tuple[float, ...]
    points: Tuple[float, ...]
    alpha: float
    point_tol: float
    alpha_tol: float
    kind: Optional[str] = None
    # (row label, bundle/condition name, reference value, tol)
    extra: Tuple[Tuple[str, str, float, float], ...] = ()
    pitchfork: bool = False
    degenerate: bool = False


@dataclass
class Reproduction:
    which: str
    model: ImplicitMap
    rows: List[Row] = field(default_factory=list)
    reports: List[Tuple[Case, BifurcationReport]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def _euler_cases() -> List[Case]:
    return [
        Case("flip fixed point", 1, -1, (1.01, 0.41), (1.0,), 0.4, 1e-8, 1e-8, "flip"),
        Case("degenerate fold", 2, 1, (1.0, 1.0, 0.4), (1.0, 1.0), 0.4, 1e-8, 1e-8,
             degenerate=True),
        Case("period-2 fold", 2, 1, (1.16, -0.60, 1.63), (1.15767, -0.602341), 1.63071,
             1e-4, 1e-4, "fold"),
        Case("period-2 flip (low h)", 2, -1, (1.126, 0.7186, 0.5037), (1.12579, 0.718620),
             0.503700, 1e-4, 1e-4, "flip"),
        Case("period-2 flip (high h)", 2, -1, (-0.58, 1.156, 1.63), (-0.580682, 1.15618),
             1.62930, 1e-4, 1e-4, "flip"),
        Case("period-3 fold", 3, 1, (0.784, 0.1645, 1.22, 0.6196),
             (0.784072, 0.16453, 1.22008), 0.619616, 1e-4, 1e-4, "fold"),
    ]


CASES: Dict[str, List[Case]] = {
    "ex1": [Case("fold", 3, 1, (0.16, 0.52, 0.95, 3.76), (0.16498, 0.51813, 0.954), 3.75938,
                 1e-3, 1e-3, "fold",
                 (("d2", "d2", 23.5, 0.1), ("d_alpha", "d_alpha", -0.844, 0.01)))],
    "ex2": [Case("transcritical", 2, 1, (0.99, -0.99, 2.01), (0.9903, -0.9903), 2.0,
                 1e-3, 1e-6, "transcritical",
                 (("d2", "d2", -16.79, 0.05), ("d_alpha", "d_alpha", 0.0, 1e-6),
                  ("d_alpha_x", "d_alpha_x", 4.07769, 1e-3)))],
    "ex3": [Case("pitchfork", 2, 1, (-0.58, 0.58, 3.0), (-0.5774599, 0.5774599), 2.9989,
                 1e-5, 1e-3, "pitchfork",
                 (("d3", "d3", -295.6, 1.0), ("d_alpha_x", "d_alpha_x", 4.05, 0.05)),
                 pitchfork=True)],
    "ex4": [Case("flip", 2, -1, (0.85, 0.44, 3.4), (0.8466, 0.4427), 3.405, 1e-3, 1e-3, "flip",
                 (("genericity", "genericity", 1383.1, 1.5),
                  ("d_alpha_x", "d_alpha_x", 1.45122, 1e-3)))],
    "euler": _euler_cases(),
}


def euler_ode() -> OdeModel:
    return OdeModel.from_text(EULER_ODE, "x' = x^5 - 1")


def model_for(which: str) -> ImplicitMap:
    if which in ("ex1", "ex4"):
        return build_map(LOGISTIC_MOD, "modified implicit logistic", (-2.0, 2.0))
    if which == "ex2":
        return build_map(EX2_MAP, which, (-2.0, 2.0))
    if which == "ex3":
        return build_map(EX3_MAP, which, (-2.0, 2.0))
    if which == "euler":
        return backward_euler_map(euler_ode(), (-2.0, 2.0))
    raise KeyError(f"unknown example {which!r}; expected one of {WHICH}")


def solve_case(m: ImplicitMap, case: Case) -> BifurcationCandidate:
    if case.pitchfork:
        return solve_pitchfork(m, case.period, case.seed)
    return solve_bifurcation(m, case.period, case.sign, case.seed,
                             allow_degenerate=case.degenerate)


def _value(report: BifurcationReport, name: str) -> float:
    if name in report.conditions:
        return report.conditions[name].value
    return getattr(report.bundle, name)


def reproduce(which: str) -> Reproduction:
    """Run every pinned solve of an example and compare with the reference digits.

    Solver failures propagate (ConvergenceError and friends).
    """
    m = model_for(which)
    rep = Reproduction(which, m)
    for case in CASES[which]:
        cand = solve_case(m, case)
        report = classify(m, cand)
        rep.reports.append((case, report))
        o = cand.orbit
        pre = f"{case.label}: " if which == "euler" else ""
        for j, (want, got) in enumerate(zip(case.points, o.points)):
            rep.rows.append(Row(f"{pre}x{j}", want, got, case.point_tol))
        rep.rows.append(Row(f"{pre}{'h' if which == 'euler' else 'alpha'}",
                            case.alpha, o.alpha, case.alpha_tol))
        for label, name, want, tol in case.extra:
            rep.rows.append(Row(pre + label, want, _value(report, name), tol))
        if case.degenerate:
            rep.rows.append(Row(pre + "degenerate", "true", str(o.degenerate).lower(), None))
        elif case.kind:
            rep.rows.append(Row(pre + "kind", case.kind, report.kind, None))
    return rep


def euler_checks(rep: Reproduction) -> List[dict]:
    """Method-specific condition values at each Euler solution."""
    ode = euler_ode()
    out = []
    for case, report in rep.reports:
        o = report.candidate.orbit
        out.append({"label": case.label,
                    "nonhyperbolicity": euler_nonhyperbolicity(ode, o),
                    "transversality": euler_transversality(ode, o)})
    return out
