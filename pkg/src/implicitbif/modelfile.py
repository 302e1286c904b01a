"""Line-oriented model files.

    # comment
    name = logistic
    map = "y - alpha*x*(1 - x)"
    domain = -1, 2

or, for an ODE integrated by a one-step method with step alpha:

    name = quintic
    ode = "x^5 - 1"
    method = backward_euler
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import ExpressionSyntaxError
from .model import ImplicitMap, build_map
from .numstep import METHODS, OdeModel, method_map

KEYS = ("name", "map", "ode", "method", "domain")


class ModelFileError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    name: str
    map_text: Optional[str] = None
    ode_text: Optional[str] = None
    method: Optional[str] = None
    domain: Optional[Tuple[float, float]] = None

    def build(self) -> ImplicitMap:
        try:
            if self.map_text is not None:
                return build_map(self.map_text, self.name, self.domain)
            return method_map(OdeModel.from_text(self.ode_text, self.name), self.method,
                              self.domain)
        except ExpressionSyntaxError as err:
            raise ModelFileError(f"bad expression: {err}") from err
        except ValueError as err:
            raise ModelFileError(str(err)) from err

    def as_dict(self) -> dict:
        d = {"name": self.name}
        if self.map_text is not None:
            d["map"] = self.map_text
        else:
            d["ode"] = self.ode_text
            d["method"] = self.method
        d["domain"] = list(self.domain) if self.domain else None
        return d


def _unquote(v: str) -> str:
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    return v


def parse_model_text(text: str, default_name: str = "model") -> ModelSpec:
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ModelFileError(f"line {lineno}: expected 'key = value'")
        if key not in KEYS:
            raise ModelFileError(f"line {lineno}: unknown key {key!r}")
        if key in fields:
            raise ModelFileError(f"line {lineno}: duplicate key {key!r}")
        fields[key] = _unquote(value.strip())

    if ("map" in fields) == ("ode" in fields):
        raise ModelFileError("exactly one of 'map' or 'ode' is required")
    if "ode" in fields:
        method = fields.get("method")
        if method not in METHODS:
            raise ModelFileError(f"'ode' needs method = one of {', '.join(METHODS)}")
    elif "method" in fields:
        raise ModelFileError("'method' only applies to 'ode' models")

    domain = None
    if "domain" in fields:
        try:
            lo, hi = (float(v) for v in fields["domain"].split(","))
        except ValueError:
            raise ModelFileError("domain must be 'lo, hi'") from None
        if not lo < hi:
            raise ModelFileError("domain needs lo < hi")
        domain = (lo, hi)
    return ModelSpec(fields.get("name", default_name), fields.get("map"), fields.get("ode"),
                     fields.get("method"), domain)


def load_model(path: str) -> Tuple[ModelSpec, ImplicitMap]:
    """Read and build a model file.

    Raises:
        ModelFileError: malformed file or expression.
        OSError: unreadable file.
    """
    with open(path, encoding="utf-8") as fh:
        spec = parse_model_text(fh.read())
    return spec, spec.build()
