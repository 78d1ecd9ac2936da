"""JSON model documents and their compiled counterparts.

Three document kinds, distinguished by their keys:

reduced-field model (keys ``m``, ``g``, ``r``)::

    {"q": 1, "m": [2, 3], "g": [["1"], ["sin(x)"]], "r": ["1", "1"],
     "chart": {"kind": "circle", "range": [0.0, 6.283185307179586]}}

``g[i][j]`` is the expression for g_ij(eps, x, y) (a flat list is accepted
when q = 1); expressions may use eps1..epsq, x, y.

versal-coefficient map (keys ``m`` int, ``a``)::

    {"m": 2, "q": 2, "a": ["eps1", "eps2", "-eps1 + x*eps2"], "chart": {...}}

with the 2m-1 coefficient expressions in eps1..epsq, x.

ambient system (keys ``N``, ``F``, ``S``)::

    {"N": 3, "q": 1, "F": ["...z1..z3, eps1..."], "S": ["cos(x)", ...],
     "chart": {...}}

Documents round-trip bit-exactly: the loaded dict is kept verbatim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParamsError
from .expressions import Expression, eps_variables
from .models import (
    ManifoldChart,
    ProblemDimensions,
    ReducedFieldModel,
    as_eps_vector,
    versal_field_model,
)


def _chart_from_doc(doc):
    spec = doc.get("chart", {})
    kind = spec.get("kind", "circle")
    lo, hi = spec.get("range", [0.0, 2 * np.pi])
    return ManifoldChart(kind, float(lo), float(hi))


def _eps_xy_callable(expr_text, q):
    expr = Expression(expr_text, eps_variables(q) + ("x", "y"))

    def fn(eps, x, y, _e=expr, _q=q):
        eps = as_eps_vector(eps, _q)
        return _e(*eps, x, y)

    fn.source = expr_text
    return fn


def _xy_callable(expr_text):
    expr = Expression(expr_text, ("x", "y"))

    def fn(x, y, _e=expr):
        return _e(x, y)

    fn.source = expr_text
    return fn


def reduced_field_from_doc(doc) -> ReducedFieldModel:
    q = int(doc.get("q", 1))
    exponents = tuple(int(v) for v in doc["m"])
    g_entries = doc["g"]
    g = []
    for gi in g_entries:
        exprs = [gi] if isinstance(gi, str) else list(gi)
        if len(exprs) != q:
            raise InvalidParamsError(f"component g needs {q} expressions, got {len(exprs)}")
        g.append(tuple(_eps_xy_callable(s, q) for s in exprs))
    r = tuple(_xy_callable(s) for s in doc["r"])
    dims = ProblemDimensions(q=q, m=min(exponents))
    return ReducedFieldModel(dims, exponents, tuple(g), r, _chart_from_doc(doc))


@dataclass(frozen=True)
class VersalMapModel:
    """Compiled versal-coefficient map a(eps, x) in R^{2m-1}."""

    m: int
    q: int
    exprs: tuple
    chart: ManifoldChart

    def a(self, eps, x):
        eps = as_eps_vector(eps, self.q)
        return np.array([e(*eps, x) for e in self.exprs], dtype=float)

    def field(self):
        """Reduced field (eps, x, y) -> H(a(eps, x), y)."""
        return versal_field_model(self.m, self.a, self.chart, self.q)


def versal_map_from_doc(doc) -> VersalMapModel:
    m = int(doc["m"])
    q = int(doc.get("q", 2))
    exprs = tuple(Expression(s, eps_variables(q) + ("x",)) for s in doc["a"])
    if len(exprs) != 2 * m - 1:
        raise InvalidParamsError(f"versal map needs 2m-1 = {2 * m - 1} expressions")
    return VersalMapModel(m, q, exprs, _chart_from_doc(doc))


@dataclass(frozen=True)
class AmbientSystemDoc:
    """Compiled ambient system F_eps on R^N with parametrised manifold S."""

    N: int
    q: int
    F_exprs: tuple
    S_exprs: tuple
    chart: ManifoldChart

    def F(self, eps, z):
        eps = as_eps_vector(eps, self.q)
        z = np.asarray(z, dtype=float)
        return np.array([e(*eps, *z) for e in self.F_exprs], dtype=float)

    def S_param(self, x):
        return np.array([e(x) for e in self.S_exprs], dtype=float)


def ambient_from_doc(doc) -> AmbientSystemDoc:
    N = int(doc["N"])
    q = int(doc.get("q", 1))
    zvars = tuple(f"z{i + 1}" for i in range(N))
    F_exprs = tuple(Expression(s, eps_variables(q) + zvars) for s in doc["F"])
    if len(F_exprs) != N:
        raise InvalidParamsError(f"ambient F needs {N} expressions")
    S_exprs = tuple(Expression(s, ("x",)) for s in doc["S"])
    if len(S_exprs) != N:
        raise InvalidParamsError(f"manifold S needs {N} expressions")
    return AmbientSystemDoc(N, q, F_exprs, S_exprs, _chart_from_doc(doc))


def detect_kind(doc):
    if "a" in doc:
        return "versal_map"
    if "F" in doc and "S" in doc:
        return "ambient"
    if "g" in doc and "r" in doc:
        return "reduced_field"
    raise InvalidParamsError("unrecognised model document (need g/r, a, or F/S keys)")


def load_document(path_or_dict):
    """Load a JSON model document; returns (kind, compiled model, raw dict)."""
    if isinstance(path_or_dict, dict):
        doc = path_or_dict
    else:
        with open(path_or_dict) as fh:
            doc = json.load(fh)
    kind = detect_kind(doc)
    model = {
        "reduced_field": reduced_field_from_doc,
        "versal_map": versal_map_from_doc,
        "ambient": ambient_from_doc,
    }[kind](doc)
    return kind, model, doc


def dump_document(doc, path=None):
    """Serialise the raw document unchanged (bit-exact round-trip)."""
    text = json.dumps(doc, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
