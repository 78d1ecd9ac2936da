"""Core model types: versal deformation parameters and reduced fields.

The unperturbed normal form is ``h(y) = (0, y^m)``; its deformation carries
parameters ``(a_0..a_{m-1}, abar_0..abar_{m-2})`` and evaluates to

    H(a, y) = (a_0 + a_1 y + ... + a_{m-1} y^{m-1},
               abar_0 + ... + abar_{m-2} y^{m-2} + y^m).

For m = 2 the classical labels are (a1, a2, a3) = (a_0, a_1, abar_0).
Reduced fields near a degenerate circle of equilibria have components
``F_i = eps . g_i(eps, x, y) + y^{m_i} r_i(x, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import DomainError, InvalidParamsError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ProblemDimensions:
    """Dimension bookkeeping; this artifact fixes d = k = 1."""

    q: int = 1
    m: int = 2
    d: int = 1
    k: int = 1

    def __post_init__(self):
        if self.d != 1 or self.k != 1:
            raise InvalidParamsError("only d = k = 1 is supported")
        if self.m < 2:
            raise InvalidParamsError("degeneracy degree m must be >= 2")
        if self.q not in (1, 2):
            raise InvalidParamsError("q must be 1 or 2")


@dataclass(frozen=True)
class ManifoldChart:
    """Coordinate chart on S: a circle (periodic) or an interval."""

    kind: str = "circle"
    x_lo: float = 0.0
    x_hi: float = TWO_PI

    def __post_init__(self):
        if self.kind not in ("circle", "interval"):
            raise InvalidParamsError(f"unknown chart kind {self.kind!r}")
        if not self.x_hi > self.x_lo:
            raise InvalidParamsError("chart range must have x_hi > x_lo")

    @property
    def periodic(self):
        return self.kind == "circle"

    @property
    def period(self):
        return self.x_hi - self.x_lo

    def wrap(self, x):
        """Canonical representative: reduce mod period on circles."""
        if not self.periodic:
            return x
        return self.x_lo + np.mod(np.asarray(x) - self.x_lo, self.period)

    def contains(self, x):
        if self.periodic:
            return np.full(np.shape(x), True) if np.ndim(x) else True
        return (np.asarray(x) >= self.x_lo) & (np.asarray(x) <= self.x_hi)

    def require(self, x):
        if not self.periodic and not np.all(self.contains(x)):
            raise DomainError(f"x = {x} outside interval chart [{self.x_lo}, {self.x_hi}]")

    def grid(self, n):
        """Uniform sample grid; periodic charts exclude the right endpoint."""
        return np.linspace(self.x_lo, self.x_hi, n, endpoint=not self.periodic)

    def distance(self, x0, x1):
        """Chart distance, mod period on circles."""
        d = np.abs(np.asarray(x0) - np.asarray(x1))
        if self.periodic:
            d = np.minimum(d, self.period - d)
        return d


@dataclass(frozen=True)
class DeformationParams:
    """Versal parameter vector (a_0..a_{m-1}; abar_0..abar_{m-2})."""

    m: int
    a: tuple
    abar: tuple

    def __post_init__(self):
        if self.m < 2:
            raise InvalidParamsError("m must be >= 2")
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "abar", tuple(float(v) for v in self.abar))
        if len(self.a) != self.m:
            raise InvalidParamsError(f"need {self.m} a-coefficients, got {len(self.a)}")
        if len(self.abar) != self.m - 1:
            raise InvalidParamsError(
                f"need {self.m - 1} abar-coefficients, got {len(self.abar)}"
            )

    @classmethod
    def from_m2(cls, a1, a2, a3):
        """m = 2 labels (a1, a2, a3) = (a_0, a_1, abar_0)."""
        return cls(2, (a1, a2), (a3,))

    @classmethod
    def from_vector(cls, m, vec):
        vec = tuple(vec)
        if len(vec) != 2 * m - 1:
            raise InvalidParamsError(f"need 2m-1 = {2 * m - 1} values, got {len(vec)}")
        return cls(m, vec[:m], vec[m:])

    @property
    def vector(self):
        return np.array(self.a + self.abar)

    def as_m2(self):
        if self.m != 2:
            raise InvalidParamsError("as_m2 requires m = 2")
        return (self.a[0], self.a[1], self.abar[0])


def eval_versal_m2(p: DeformationParams, y):
    """(a1 + a2 y, a3 + y^2) for the quadratic normal form."""
    if p.m != 2:
        raise InvalidParamsError("eval_versal_m2 requires m = 2")
    a1, a2, a3 = p.as_m2()
    y = np.asarray(y, dtype=float)
    return np.stack([a1 + a2 * y, a3 + y * y], axis=-1) if y.ndim else (
        a1 + a2 * y,
        a3 + y * y,
    )


def eval_versal_general(p: DeformationParams, y):
    """(sum a_i y^i, sum abar_j y^j + y^m)."""
    y = np.asarray(y, dtype=float)
    first = sum(ai * y**i for i, ai in enumerate(p.a))
    second = sum(aj * y**j for j, aj in enumerate(p.abar)) + y**p.m
    if y.ndim:
        return np.stack([first, second], axis=-1)
    return (float(first), float(second))


def as_eps_vector(eps, q):
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if eps.shape != (q,):
        raise InvalidParamsError(f"eps must have shape ({q},), got {eps.shape}")
    return eps


@dataclass(frozen=True)
class ReducedFieldModel:
    """Reduced bifurcation field F_i = eps.g_i + y^{m_i} r_i on a chart.

    ``g[i]`` is a tuple of q callables g_ij(eps, x, y); the eps-term is the
    linear contraction sum_j eps_j g_ij(eps, x, y).  ``r[i]`` is a callable
    (x, y).  Callables must be smooth enough for 4th-order differencing and
    should accept numpy arrays in x and y.
    """

    dims: ProblemDimensions
    exponents: tuple
    g: tuple
    r: tuple
    chart: ManifoldChart = field(default_factory=ManifoldChart)

    def __post_init__(self):
        d1 = self.dims.d + 1
        if len(self.exponents) != d1 or len(self.g) != d1 or len(self.r) != d1:
            raise InvalidParamsError(f"model needs {d1} components")
        if any(int(mi) < 2 for mi in self.exponents):
            raise InvalidParamsError("component exponents m_i must be >= 2")
        norm_g = []
        for gi in self.g:
            gi = tuple(gi) if isinstance(gi, (tuple, list)) else (gi,)
            if len(gi) != self.dims.q:
                raise InvalidParamsError(
                    f"each component needs q = {self.dims.q} g-callables, got {len(gi)}"
                )
            norm_g.append(gi)
        object.__setattr__(self, "g", tuple(norm_g))
        object.__setattr__(self, "exponents", tuple(int(mi) for mi in self.exponents))
        object.__setattr__(self, "r", tuple(self.r))

    @property
    def q(self):
        return self.dims.q

    def component(self, i, eps, x, y):
        eps = as_eps_vector(eps, self.q)
        lin = sum(eps[j] * self.g[i][j](eps, x, y) for j in range(self.q))
        return lin + y ** self.exponents[i] * self.r[i](x, y)

    def __call__(self, eps, x, y):
        return self.evaluate(eps, x, y)

    def evaluate(self, eps, x, y):
        self.chart.require(x)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        vals = [self.component(i, eps, x, y) for i in range(self.dims.d + 1)]
        if x.ndim or y.ndim:
            return np.stack(np.broadcast_arrays(*vals), axis=-1)
        return np.array(vals, dtype=float)


def eval_reduced_field(model: ReducedFieldModel, eps, x, y):
    """Vector of components eps.g_i + y^{m_i} r_i at (eps, x, y)."""
    return model.evaluate(eps, x, y)


def versal_field_model(m, a_funcs, chart=None, q=1):
    """Field (eps,x,y) -> H(a(eps,x), y) from versal-coefficient callables.

    ``a_funcs`` maps (eps, x) to the 2m-1 coefficient vector.
    """
    chart = chart or ManifoldChart()

    def fld(eps, x, y):
        eps = as_eps_vector(eps, q)
        vec = np.asarray(a_funcs(eps, x), dtype=float)
        y = np.asarray(y, dtype=float)
        first = sum(vec[i] * y**i for i in range(m))
        second = sum(vec[m + j] * y**j for j in range(m - 1)) + y**m
        if np.ndim(first) or np.ndim(second):
            first, second = np.broadcast_arrays(first, second)
            return np.stack([first, second], axis=-1)
        return np.array([first, second])

    fld.m = m
    fld.q = q
    fld.chart = chart
    return fld


@dataclass(frozen=True)
class VariationalModel:
    """Scalar potential f = eps*g(eps,x,y) + y^m r(x,y) for gradient problems."""

    m: int
    g: Callable
    r: Callable
    chart: ManifoldChart = field(default_factory=ManifoldChart)

    def __post_init__(self):
        if self.m < 3:
            raise InvalidParamsError("variational degeneracy needs m >= 3")

    def potential(self, eps, x, y):
        return eps * self.g(eps, x, y) + y**self.m * self.r(x, y)
