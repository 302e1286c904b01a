"""Machine-readable run reports and human tables."""

from __future__ import annotations

import json
import math

from .bifurcation import BifurcationReport
from .orbit import Orbit


def orbit_dict(o: Orbit) -> dict:
    return {"points": list(o.points), "period": o.period, "alpha": o.alpha,
            "residual": o.residual, "min_Fy": o.min_Fy, "degenerate": o.degenerate,
            "iterations": o.iterations}


def _sign(v):
    if v is None or v == 0 or not math.isfinite(v):
        return 0
    return 1 if v > 0 else -1


def bifurcation_dict(r: BifurcationReport) -> dict:
    b = r.bundle
    return {
        "candidate": {"sign": r.candidate.sign,
                      "augmented_residual": r.candidate.augmented_residual,
                      "iterations": r.candidate.iterations,
                      "orbit": orbit_dict(r.candidate.orbit)},
        "kind": r.kind,
        "requirements": r.requirements(),
        "conditions": {k: c.as_dict() for k, c in r.conditions.items()},
        "bundle": b.as_dict(),
        # raw signs only; super/subcritical reading is left to the user
        "signs": {"d2": _sign(b.d2), "d3": _sign(b.d3), "genericity": _sign(b.genericity)},
        "warnings": list(r.warnings),
    }


def dumps(report: dict) -> str:
    """JSON text; floats use ``repr`` so they round-trip exactly."""
    return json.dumps(report, indent=2, allow_nan=True)


def fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if v is None:
        return "-"
    return str(v)


def table(header, rows) -> str:
    cells = [[fmt(c) for c in header]] + [[fmt(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
