"""Polar blow-up of parameter space and bifurcation-arc geometry.

Coefficient maps a(eps, x) in R^{2m-1} with a(0, x) = 0 expand as
a = b(x) eps + c(x)(eps, eps) + O(|eps|^3).  Writing eps = rho * s and
dividing the resultant by rho^m gives a blown-up discriminant function
beta(rho, s, x) whose zero set, together with the projection to the
direction circle, produces the bifurcation arcs: fold-pair cusps, end
arcs, intersection arcs (m = 2) and hysteresis arcs (odd m > 2).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._util import (
    bisect_scalar,
    deriv1_central4,
    deriv2_central4,
    fd_jacobian,
    geometric_schedule,
    loglog_slope,
    mixed2_richardson,
    newton_nd,
)
from .exceptions import (
    InvalidParamsError,
    ModelInconsistencyError,
    NonUnitDirectionWarning,
)
from .models import ManifoldChart, TWO_PI
from .resultant import rbar

DEFAULT_CLASSIFY_TOL = 1e-6
CURVE_STEP = TWO_PI / 400.0
CORRECTOR_TOL = 1e-10


def pinch(rho, s):
    """Pinching map (rho, s) |-> rho * s; inverse of the polar blow-up.

    Non-unit directions are normalised with a warning.  Satisfies
    pinch(-rho, s) == pinch(rho, -s) exactly.
    """
    s = np.asarray(s, dtype=float)
    norm = float(np.linalg.norm(s))
    if norm == 0.0:
        raise InvalidParamsError("direction s must be nonzero")
    if abs(norm - 1.0) > 1e-12:
        warnings.warn("direction normalised to unit length", NonUnitDirectionWarning)
        s = s / norm
    return rho * s


def unit_dir(theta):
    return np.array([np.cos(theta), np.sin(theta)])


class ExpansionData:
    """First/second-order eps-coefficients b(x), c(x) of a versal map.

    b(x) is (r_dim, q); c(x) is (r_dim, q, q) symmetric with
    a ~ b(x) eps + c(x)(eps, eps); bprime(x) is the x-derivative of b.
    """

    def __init__(self, b, c, bprime, q, r_dim, chart=None, m=None):
        self._b = b
        self._c = c
        self._bprime = bprime
        self.q = q
        self.r_dim = r_dim
        self.chart = chart or ManifoldChart()
        if m is None:
            m = (r_dim + 1) // 2
        if 2 * m - 1 != r_dim:
            raise InvalidParamsError("r_dim must equal 2m-1")
        self.m = m

    @classmethod
    def from_map(cls, a, q, r_dim, h=1e-3, chart=None, m=None, check_tol=1e-10,
                 n_check=64):
        """Finite-difference extraction from a callable a(eps, x) -> R^{r_dim}.

        b by 4th-order central differences, c by Richardson-extrapolated
        second differences, symmetrised.  Requires a(0, x) = 0 on samples.
        """
        if not 1e-6 <= h <= 1e-2:
            raise InvalidParamsError("step h must lie in [1e-6, 1e-2]")
        chart = chart or ManifoldChart()
        zero = np.zeros(q)
        for xs in chart.grid(n_check):
            a0 = np.asarray(a(zero, xs), dtype=float)
            if a0.shape != (r_dim,):
                raise InvalidParamsError(f"a must return shape ({r_dim},)")
            if np.max(np.abs(a0)) > check_tol:
                raise ModelInconsistencyError(
                    f"a(0, x) = {a0} nonzero at x = {xs}: not a deformation of the germ"
                )

        def b_fn(x):
            cols = []
            for j in range(q):
                ej = np.zeros(q)
                ej[j] = 1.0
                cols.append(deriv1_central4(lambda t: a(t * ej, x), 0.0, h))
            return np.stack(cols, axis=1)

        def c_fn(x):
            C = np.zeros((r_dim, q, q))
            for j in range(q):
                ej = np.zeros(q)
                ej[j] = 1.0
                C[:, j, j] = 0.5 * deriv2_central4(lambda t: a(t * ej, x), 0.0, h)
            for j in range(q):
                for k in range(j + 1, q):
                    ej = np.zeros(q)
                    ek = np.zeros(q)
                    ej[j] = 1.0
                    ek[k] = 1.0
                    mixed = mixed2_richardson(
                        lambda u, v: a(u * ej + v * ek, x), 0.0, 0.0, h
                    )
                    C[:, j, k] = C[:, k, j] = 0.5 * mixed
            return C

        def bprime_fn(x, hx=1e-4):
            return deriv1_central4(b_fn, x, hx)

        return cls(b_fn, c_fn, bprime_fn, q, r_dim, chart, m)

    @classmethod
    def from_rows(cls, b_rows, q=2, m=None, chart=None, c_rows=None,
                  bprime_rows=None):
        """Analytic construction from per-coefficient row callables x -> (q,)."""
        r_dim = len(b_rows)
        chart = chart or ManifoldChart()

        def b_fn(x):
            return np.stack([np.asarray(row(x), dtype=float) for row in b_rows])

        if c_rows is None:
            def c_fn(x):
                return np.zeros((r_dim, q, q))
        else:
            def c_fn(x):
                return np.stack([np.asarray(row(x), dtype=float) for row in c_rows])

        if bprime_rows is None:
            def bprime_fn(x):
                return deriv1_central4(b_fn, x, 1e-4)
        else:
            def bprime_fn(x):
                return np.stack([np.asarray(row(x), dtype=float) for row in bprime_rows])

        return cls(b_fn, c_fn, bprime_fn, q, r_dim, chart, m)

    def b(self, x):
        return np.asarray(self._b(x), dtype=float)

    def c(self, x):
        return np.asarray(self._c(x), dtype=float)

    def bprime(self, x):
        return np.asarray(self._bprime(x), dtype=float)

    def bs(self, s, x):
        """b(x) contracted with the direction: the vector (b_i(s, x))_i."""
        return self.b(x) @ np.asarray(s, dtype=float)

    def cs(self, s, x):
        s = np.asarray(s, dtype=float)
        return np.einsum("ijk,j,k->i", self.c(x), s, s)

    def bs_theta(self, theta, x):
        return self.bs(unit_dir(theta), x)

    def reconstruct(self, eps, x):
        """b(x) eps + c(x)(eps, eps) (the quadratic model of a)."""
        eps = np.asarray(eps, dtype=float)
        return self.b(x) @ eps + np.einsum("ijk,j,k->i", self.c(x), eps, eps)

    def beta(self, rho, theta, x):
        """Blown-up discriminant function: R_m(rho(b + rho c)) / rho^m.

        For m = 2 this is (b1 + rho c1)^2 + rho (b2 + rho c2)^2 (b3 + rho c3).
        """
        s = unit_dir(theta)
        return rbar(self.m, rho, self.bs(s, x), self.cs(s, x))

    def pbar(self, theta, x, drho=1e-6):
        """d beta / d rho at rho = 0: the case-(ii) coordinate
        (-b1)^m bbar0 + b0 * P~_m evaluated numerically."""
        return (self.beta(drho, theta, x) - self.beta(-drho, theta, x)) / (2 * drho)


# ----------------------------------------------------------------- strata

KIND_NONE = "None"
KIND_INTERIOR = "Interior"
KIND_END = "End"
KIND_INTERSECTION = "Intersection"


@dataclass(frozen=True)
class ClassifiedPoint:
    s: tuple
    x: float
    kind: str
    stratum: str
    residuals: tuple

    @property
    def theta(self):
        return float(np.arctan2(self.s[1], self.s[0]) % TWO_PI)


def classify_point_m2(data: ExpansionData, s, x, tol=DEFAULT_CLASSIFY_TOL):
    """Tangent-cone stratum of (s, x) for m = 2 from (b1, b2, b3) = b(x) s.

    Interior: b1 = 0, b3 < 0, b2 != 0; End: b1 = b3 = 0, b2 != 0;
    Intersection: b1 = b2 = 0, b3 < 0.  Tolerance-gated total function,
    gate tol * max(1, |b(x)|).
    """
    s = np.asarray(s, dtype=float)
    B = data.b(x)
    b1, b2, b3 = B @ s
    gate = tol * max(1.0, float(np.linalg.norm(B)))
    res = (float(b1), float(b2), float(b3))
    if abs(b1) > gate or b3 > gate:
        return ClassifiedPoint(tuple(s), float(x), KIND_NONE, "NotInT", res)
    if b3 < -gate and abs(b2) > gate:
        return ClassifiedPoint(tuple(s), float(x), KIND_INTERIOR, "T2", res)
    if abs(b3) <= gate and abs(b2) > gate:
        return ClassifiedPoint(tuple(s), float(x), KIND_END, "T1", res)
    if b3 < -gate and abs(b2) <= gate:
        return ClassifiedPoint(tuple(s), float(x), KIND_INTERSECTION, "T1prime", res)
    return ClassifiedPoint(tuple(s), float(x), KIND_NONE, "T0", res)


def classify_point_m(data: ExpansionData, s, x, tol=DEFAULT_CLASSIFY_TOL):
    """Stratum classification for m >= 3 on (b0, bbar0, b1, b2).

    Case (i) "Interior": b0 = 0, bbar0 b1 != 0 (for even m additionally
    bbar0 < 0, the side carrying real solutions); case (ii) "End":
    b0 = bbar0 = 0, b1 != 0; case (iii) "Intersection": b0 = b1 = 0,
    b2 != 0 (generates no arc when m > 2).
    """
    if data.m < 3:
        return classify_point_m2(data, s, x, tol)
    s = np.asarray(s, dtype=float)
    B = data.b(x)
    bv = B @ s
    m = data.m
    b0, b1v, b2v, bbar0 = bv[0], bv[1], bv[2], bv[m]
    gate = tol * max(1.0, float(np.linalg.norm(B)))
    res = (float(b0), float(bbar0), float(b1v), float(b2v))
    if abs(b0) > gate:
        return ClassifiedPoint(tuple(s), float(x), KIND_NONE, "NotInT", res)
    if abs(b1v) > gate and abs(bbar0) > gate:
        if m % 2 == 0 and bbar0 > gate:
            return ClassifiedPoint(tuple(s), float(x), KIND_NONE, "NotInT", res)
        return ClassifiedPoint(tuple(s), float(x), KIND_INTERIOR, "T2", res)
    if abs(b1v) > gate and abs(bbar0) <= gate:
        return ClassifiedPoint(tuple(s), float(x), KIND_END, "T1", res)
    if abs(b1v) <= gate and abs(b2v) > gate:
        return ClassifiedPoint(tuple(s), float(x), KIND_INTERSECTION, "T1prime", res)
    return ClassifiedPoint(tuple(s), float(x), KIND_NONE, "T0", res)


def is_on_tangent_cone(data: ExpansionData, s, x, tol=DEFAULT_CLASSIFY_TOL):
    """Necessary branch condition: b1 = 0, b3 <= 0 for m = 2; b0 = 0 for m > 2."""
    bv = data.bs(s, x)
    gate = tol * max(1.0, float(np.linalg.norm(data.b(x))))
    if data.m == 2:
        return abs(bv[0]) <= gate and bv[2] <= gate
    return abs(bv[0]) <= gate


# ----------------------------------------------------- zero-curve tracing


@dataclass
class Polyline:
    """Curve on the (theta, x) torus; points are in lifted coordinates."""

    points: np.ndarray
    closed: bool = False
    singular: bool = False

    def wrapped(self, chart=None):
        pts = self.points.copy()
        pts[:, 0] = np.mod(pts[:, 0], TWO_PI)
        if chart is not None and chart.periodic:
            pts[:, 1] = chart.wrap(pts[:, 1])
        return pts


class _Domain:
    def __init__(self, chart):
        self.chart = chart

    def dist(self, z0, z1):
        dth = abs(z0[0] - z1[0])
        dth = min(dth, TWO_PI - dth % TWO_PI) if dth > np.pi else dth
        dx = self.chart.distance(z0[1], z1[1])
        return float(np.hypot(dth, dx))

    def inside(self, z):
        return bool(self.chart.contains(z[1]))


def _grad(f, z, h=1e-6):
    return np.array(
        [
            (f(z[0] + h, z[1]) - f(z[0] - h, z[1])) / (2 * h),
            (f(z[0], z[1] + h) - f(z[0], z[1] - h)) / (2 * h),
        ]
    )


def _correct(f, z, tol=CORRECTOR_TOL, max_iter=20, gtol=1e-8):
    """Project z onto the zero set along the gradient direction."""
    z = np.array(z, dtype=float)
    for _ in range(max_iter):
        fz = f(z[0], z[1])
        if abs(fz) < tol:
            return z, True, False
        g = _grad(f, z)
        gn2 = float(g @ g)
        if gn2 < gtol**2:
            return z, False, True  # singular
        z = z - fz * g / gn2
    return z, abs(f(z[0], z[1])) < tol, False


def trace_zero_curve(f, tol=1e-6, chart=None, seed_grid=96, step=CURVE_STEP):
    """Predictor-corrector tracing of {f(theta, x) = 0} on the torus.

    Euler predictor along the rotated gradient, Newton corrector transverse
    to the tangent, adaptive arclength step.  Curves close up when their
    endpoints meet; a gradient below tol splits the curve with a singular
    flag.  Returns a list of Polyline.
    """
    chart = chart or ManifoldChart()
    dom = _Domain(chart)
    thetas = np.linspace(0.0, TWO_PI, seed_grid, endpoint=False)
    xs = chart.grid(seed_grid)
    vals = np.array([[f(th, x) for x in xs] for th in thetas])
    if np.all(vals > 0) or np.all(vals < 0):
        return []
    # snap rounding-level values to zero so brackets stay consistent
    snap = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
    vals = np.where(np.abs(vals) < snap, 0.0, vals)

    def safe_bisect(fn, lo, hi):
        try:
            return bisect_scalar(fn, lo, hi)
        except ValueError:
            return None

    seeds = []
    for i in range(seed_grid):
        for j in range(seed_grid):
            v0 = vals[i, j]
            i2 = (i + 1) % seed_grid
            if v0 == 0.0:
                seeds.append((thetas[i], xs[j]))
                continue
            if v0 * vals[i2, j] < 0:
                th = safe_bisect(lambda t: f(t, xs[j]), thetas[i],
                                 thetas[i] + (thetas[1] - thetas[0]))
                if th is not None:
                    seeds.append((th, xs[j]))
            if j + 1 < seed_grid and v0 * vals[i, j + 1] < 0:
                x = safe_bisect(lambda t: f(thetas[i], t), xs[j], xs[j + 1])
                if x is not None:
                    seeds.append((thetas[i], x))
            elif chart.periodic and j + 1 == seed_grid and v0 * vals[i, 0] < 0:
                x = safe_bisect(lambda t: f(thetas[i], t), xs[j],
                                xs[j] + chart.period)
                if x is not None:
                    seeds.append((thetas[i], x))

    curves = []

    def near_existing(z):
        for cur in curves:
            pts = cur.points
            for k in range(len(pts)):
                if dom.dist(z, pts[k]) < 1.6 * step:
                    return True
        return False

    for seed in seeds:
        z0, ok, sing = _correct(f, np.array(seed), gtol=tol)
        if not ok or near_existing(z0):
            continue
        pieces = []
        closed = False
        singular = sing
        for direction in (1.0, -1.0):
            pts = [z0.copy()]
            z = z0.copy()
            h = step
            prev_t = None
            length = 0.0
            while length < 8 * TWO_PI:
                g = _grad(f, z)
                gn = np.linalg.norm(g)
                if gn < tol:
                    singular = True
                    break
                t = np.array([-g[1], g[0]]) / gn
                if prev_t is None:
                    t = direction * t
                elif float(t @ prev_t) < 0:
                    t = -t
                z_try, ok, sing = _correct(f, z + h * t)
                if sing:
                    singular = True
                    break
                if not ok or dom.dist(z_try, z) > 3 * h:
                    h *= 0.5
                    if h < step / 64:
                        break
                    continue
                if not dom.inside(z_try):
                    # land on the chart boundary
                    lo, hi = chart.x_lo, chart.x_hi
                    x_clamp = min(max(z_try[1], lo), hi)
                    zb, okb, _ = _correct(f, np.array([z_try[0], x_clamp]))
                    if okb and dom.inside(zb):
                        pts.append(zb)
                    break
                length += dom.dist(z_try, z)
                z = z_try
                prev_t = t
                pts.append(z.copy())
                h = min(h * 1.3, 2 * step)
                if length > 2.5 * step and dom.dist(z, z0) < 0.75 * h:
                    zc, okc, _ = _correct(f, z0.copy())
                    closed = True
                    break
            pieces.append(np.array(pts))
            if closed:
                break
        if closed:
            body = pieces[0]
        else:
            body = np.vstack([pieces[1][::-1], pieces[0]]) if len(pieces) > 1 else pieces[0]
        if len(body) >= 3:
            curves.append(Polyline(body, closed=closed, singular=singular))
    return curves


# ----------------------------------------------------------- fold points


@dataclass(frozen=True)
class FoldPoint:
    theta: float
    x: float
    s0: tuple
    d2: float
    classified: ClassifiedPoint


@dataclass(frozen=True)
class UnresolvedSingularity:
    theta: float
    x: float
    reason: str


def find_fold_points(data: ExpansionData, curve: Polyline, tol=1e-6, row=0):
    """Folds of the direction-projection along a traced coefficient curve.

    Points on the curve where d(b_row)/dx = 0 with the second derivative
    bounded away from zero; degenerate candidates are reported as
    UnresolvedSingularity instead of being dropped.
    """

    def fun(th, x):
        return float(data.bs_theta(th, x)[row])

    def dfdx(th, x):
        return float((data.bprime(x) @ unit_dir(th))[row])

    folds, unresolved = [], []
    pts = curve.points
    gvals = np.array([dfdx(p[0], p[1]) for p in pts])
    n = len(pts)
    pairs = range(n if curve.closed else n - 1)
    for k in pairs:
        k2 = (k + 1) % n
        if gvals[k] == 0.0 or gvals[k] * gvals[k2] >= 0:
            continue
        zmid = 0.5 * (pts[k] + pts[k2])

        def system(z):
            return np.array([fun(z[0], z[1]), dfdx(z[0], z[1])])

        z, ok, _ = newton_nd(system, zmid, tol=1e-11)
        if not ok:
            unresolved.append(UnresolvedSingularity(zmid[0], zmid[1], "newton-failed"))
            continue
        d2 = float(deriv2_central4(lambda xx: fun(z[0], xx), z[1], 1e-4))
        theta = float(np.mod(z[0], TWO_PI))
        x = float(data.chart.wrap(z[1]))
        if abs(d2) <= tol:
            unresolved.append(UnresolvedSingularity(theta, x, "second-derivative-small"))
            continue
        if any(
            abs(np.mod(theta - fp.theta + np.pi, TWO_PI) - np.pi) < 1e-6
            and data.chart.distance(x, fp.x) < 1e-6
            for fp in folds
        ):
            continue
        cls = (classify_point_m2 if data.m == 2 else classify_point_m)(
            data, unit_dir(theta), x
        )
        folds.append(FoldPoint(theta, x, tuple(unit_dir(theta)), d2, cls))
    return folds, unresolved


def _points_on_curve(data, curve, other_row_fn, refine_system, accept):
    """Sign-change scan of other_row_fn along a curve + Newton refinement."""
    out = []
    pts = curve.points
    vals = np.array([other_row_fn(p[0], p[1]) for p in pts])
    n = len(pts)
    pairs = range(n if curve.closed else n - 1)
    for k in pairs:
        k2 = (k + 1) % n
        if vals[k] == 0.0 or vals[k] * vals[k2] >= 0:
            continue
        zmid = 0.5 * (pts[k] + pts[k2])
        z, ok, _ = newton_nd(refine_system, zmid, tol=1e-11)
        if not ok:
            continue
        theta = float(np.mod(z[0], TWO_PI))
        x = float(data.chart.wrap(z[1]))
        if any(
            abs(np.mod(theta - p[0] + np.pi, TWO_PI) - np.pi) < 1e-6
            and data.chart.distance(x, p[1]) < 1e-6
            for p in out
        ):
            continue
        if accept(theta, x):
            out.append((theta, x))
    return out


def find_end_points(data: ExpansionData, curves, tol=DEFAULT_CLASSIFY_TOL):
    """End points: zeros of (b1, b3) on the m = 2 coefficient curve."""
    ends = []
    for cur in curves:
        def b3(th, x):
            return float(data.bs_theta(th, x)[2])

        def system(z):
            bv = data.bs_theta(z[0], z[1])
            return np.array([bv[0], bv[2]])

        def accept(th, x):
            return classify_point_m2(data, unit_dir(th), x, tol).kind == KIND_END

        ends.extend(_points_on_curve(data, cur, b3, system, accept))
    return [classify_point_m2(data, unit_dir(th), x, tol) for th, x in ends]


def find_intersection_points(data: ExpansionData, curves, tol=DEFAULT_CLASSIFY_TOL):
    """Intersection points: zeros of (b1, b2) with b3 < 0 (m = 2)."""
    pts = []
    for cur in curves:
        def b2(th, x):
            return float(data.bs_theta(th, x)[1])

        def system(z):
            bv = data.bs_theta(z[0], z[1])
            return np.array([bv[0], bv[1]])

        def accept(th, x):
            return classify_point_m2(data, unit_dir(th), x, tol).kind == KIND_INTERSECTION

        pts.extend(_points_on_curve(data, cur, b2, system, accept))
    return [classify_point_m2(data, unit_dir(th), x, tol) for th, x in pts]


def find_case_ii_points(data: ExpansionData, curves, tol=DEFAULT_CLASSIFY_TOL):
    """m >= 3 case-(ii) points: regular zeros of (b0, bbar0) with b1 != 0."""
    m = data.m
    pts = []
    for cur in curves:
        def bbar0(th, x):
            return float(data.bs_theta(th, x)[m])

        def system(z):
            bv = data.bs_theta(z[0], z[1])
            return np.array([bv[0], bv[m]])

        def accept(th, x):
            return classify_point_m(data, unit_dir(th), x, tol).kind == KIND_END

        pts.extend(_points_on_curve(data, cur, bbar0, system, accept))
    return [classify_point_m(data, unit_dir(th), x, tol) for th, x in pts]


def find_case_iii_points(data: ExpansionData, curves, tol=DEFAULT_CLASSIFY_TOL):
    """m >= 3 case-(iii) points (no arcs emanate): zeros of (b0, b1)."""
    pts = []
    for cur in curves:
        def b1(th, x):
            return float(data.bs_theta(th, x)[1])

        def system(z):
            bv = data.bs_theta(z[0], z[1])
            return np.array([bv[0], bv[1]])

        def accept(th, x):
            return classify_point_m(data, unit_dir(th), x, tol).kind == KIND_INTERSECTION

        pts.extend(_points_on_curve(data, cur, b1, system, accept))
    return [classify_point_m(data, unit_dir(th), x, tol) for th, x in pts]


# ------------------------------------------------------------- arc types


@dataclass
class BifurcationArc:
    kind: str  # FoldPairCusp | EndArc | IntersectionArc | HysteresisArc
    origin_direction: np.ndarray
    source_point: object
    contact_order: Fraction
    sample_polyline: np.ndarray
    branches: list = field(default_factory=list)
    rho_values: np.ndarray = None
    annotations: list = field(default_factory=list)


@dataclass
class ArcSet:
    arcs: list
    annotations: list
    curves: list
    folds: list
    unresolved: list
    end_points: list = field(default_factory=list)
    intersection_points: list = field(default_factory=list)
    case_ii_points: list = field(default_factory=list)
    case_iii_points: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.arcs)

    def __len__(self):
        return len(self.arcs)


def fit_contact_order(branch_eps, s0, drop_largest=2):
    """Log-log exponent of |eps_perp| against |eps_par| along an arc sample.

    The two largest-radius samples are excluded to suppress higher-order
    contamination.
    """
    eps = np.asarray(branch_eps, dtype=float)
    s0 = np.asarray(s0, dtype=float)
    perp = np.array([-s0[1], s0[0]])
    par = np.abs(eps @ s0)
    per = np.abs(eps @ perp)
    order = np.argsort(par)
    keep = order[: max(3, len(order) - drop_largest)]
    return loglog_slope(par[keep], per[keep])


def _branch_eps(rhos, pts):
    return np.array([rho * unit_dir(p[0]) for rho, p in zip(rhos, pts)])


class _OutlineSolver:
    """Apparent-outline points of {beta(rho, theta, x) = 0} viewed along x.

    Nested solve: for each theta find the nearby critical point x*(theta)
    of beta in x (bisection on d beta/dx, well conditioned), then locate
    zeros of psi(theta) = beta(rho, theta, x*(theta)) by bisection.  By the
    envelope property psi is insensitive to x* error, so the outline angle
    is resolved down to the determinant noise floor even for tiny rho.
    """

    def __init__(self, data, x_halfwidth=0.4, n_inner=25):
        self.data = data
        self.hw = x_halfwidth
        self.n_inner = n_inner

    def _dbeta_dx(self, rho, th, x, h=1e-6):
        return (self.data.beta(rho, th, x + h) - self.data.beta(rho, th, x - h)) / (2 * h)

    def x_star(self, rho, th, x_center):
        g = lambda xx: self._dbeta_dx(rho, th, xx)
        xs = x_center + np.linspace(-self.hw, self.hw, self.n_inner)
        gv = np.array([g(x) for x in xs])
        best = None
        for k in range(self.n_inner - 1):
            if gv[k] == 0.0:
                cand = xs[k]
            elif gv[k] * gv[k + 1] < 0:
                cand = bisect_scalar(g, xs[k], xs[k + 1], tol=1e-13)
            else:
                continue
            if best is None or abs(cand - x_center) < abs(best - x_center):
                best = cand
        return best

    def psi(self, rho, th, x_center):
        xs = self.x_star(rho, th, x_center)
        if xs is None:
            return None, None
        return self.data.beta(rho, th, xs), xs

    def zeros_in(self, rho, th_lo, th_hi, x_center, n_scan=120):
        """All outline points with theta in [th_lo, th_hi]; returns (th, x) list."""
        ths = np.linspace(th_lo, th_hi, n_scan)
        vals, xcs = [], []
        xc = x_center
        for th in ths:
            v, xs = self.psi(rho, th, xc)
            vals.append(v)
            xcs.append(xs if xs is not None else xc)
            if xs is not None:
                xc = xs
        out = []
        for k in range(n_scan - 1):
            v0, v1 = vals[k], vals[k + 1]
            if v0 is None or v1 is None or v0 == 0.0 and v1 == 0.0:
                continue
            if v0 == 0.0 or v0 * v1 < 0:
                xc_loc = xcs[k]

                def psi_only(th, _xc=xc_loc):
                    v, _ = self.psi(rho, th, _xc)
                    return v if v is not None else np.nan

                try:
                    th_root = bisect_scalar(psi_only, ths[k], ths[k + 1], tol=1e-14)
                except ValueError:
                    continue
                _, x_root = self.psi(rho, th_root, xc_loc)
                if x_root is not None and not any(
                    abs(th_root - t) < 1e-10 for t, _ in out
                ):
                    out.append((th_root, x_root))
        return out


def _continue_outline_branch(solver, th0, x0, first, schedule_desc):
    """Follow one outline branch from the largest rho downward.

    ``first`` is the (rho, theta, x) solution at the largest rho; offsets
    from the base direction extrapolate by a local power law in rho.
    """
    rho1, thb1, xb1 = first
    rhos, pts = [rho1], [np.array([thb1, xb1])]
    for rho in schedule_desc[1:]:
        rho_prev = rhos[-1]
        th_prev, x_prev = pts[-1]
        delta_prev = th_prev - th0
        if len(rhos) >= 2 and abs(pts[-2][0] - th0) > 1e-13 and abs(delta_prev) > 1e-13:
            alpha = np.log(abs(delta_prev) / abs(pts[-2][0] - th0)) / np.log(
                abs(rho_prev / rhos[-2])
            )
            alpha = min(max(alpha, 0.0), 3.0)
        else:
            alpha = 1.0 / solver.data.m
        scale = (abs(rho) / abs(rho_prev)) ** alpha
        delta_pred = delta_prev * scale
        if abs(delta_pred) < 1e-11:
            lo, hi = th0 - 2e-3, th0 + 2e-3
        else:
            lo = th0 + 0.25 * delta_pred
            hi = th0 + 3.5 * delta_pred
            if lo > hi:
                lo, hi = hi, lo
        x_pred = x0 + (x_prev - x0) * scale
        zs = solver.zeros_in(rho, lo, hi, x_pred, n_scan=60)
        if not zs:
            break
        th_new, x_new = min(zs, key=lambda z: abs(z[0] - (th0 + delta_pred)))
        rhos.append(rho)
        pts.append(np.array([th_new, x_new]))
    order = np.argsort(np.abs(rhos))
    rhos = np.array(rhos)[order]
    pts = np.array(pts)[order]
    return rhos, pts


def _sample_feature_arcs(data, th0, x0, schedule, annotations, label):
    """All outline branches emanating from the feature at (th0, x0).

    Scans both rho signs at the largest radius and continues each branch
    down the schedule; negative-rho branches map to the antipodal
    direction through pinch(-rho, s) = pinch(rho, -s).
    """
    solver = _OutlineSolver(data)
    schedule_desc = np.sort(np.asarray(schedule))[::-1]
    rho_max = schedule_desc[0]
    branches = []
    for side in (1.0, -1.0):
        seeds = solver.zeros_in(side * rho_max, th0 - 0.45, th0 + 0.45, x0)
        for th_s, x_s in seeds:
            rhos, pts = _continue_outline_branch(
                solver, th0, x0, (side * rho_max, th_s, x_s), side * schedule_desc
            )
            if len(rhos) >= 3:
                branches.append((_branch_eps(rhos, pts), rhos))
    if not branches:
        annotations.append(f"{label}: no outline branches found near theta={th0:.4f}")
    return branches


def _sample_intersection_arc(data, point, schedule):
    """m = 2 self-intersection arc: zeros of (alpha1, alpha2)/rho."""
    th0, x0 = point.theta, point.x

    def system_at(rho):
        def system(z):
            s = unit_dir(z[0])
            eff = data.bs(s, z[1]) + rho * data.cs(s, z[1])
            return np.array([eff[0], eff[1]])

        return system

    z_prev = np.array([th0, x0])
    rhos, pts = [], []
    for rho in np.sort(schedule):
        z, ok, _ = newton_nd(system_at(rho), z_prev, tol=1e-11)
        if not ok:
            break
        s = unit_dir(z[0])
        a3 = (data.bs(s, z[1]) + rho * data.cs(s, z[1]))[2]
        if a3 >= 0:  # crossing moved onto the umbrella handle: no real sheet
            break
        rhos.append(rho)
        pts.append(z)
        z_prev = z
    return np.array(rhos), np.array(pts)


def _h2prime_residual(data, point, h=1e-5):
    """|d/dx (2 b1 c1 + b2^2 b3)| at an m = 2 end point."""

    def q(x):
        s = np.asarray(point.s)
        bv = data.bs(s, x)
        cv = data.cs(s, x)
        return 2 * bv[0] * cv[0] + bv[1] ** 2 * bv[2]

    return abs(float(deriv1_central4(q, point.x, h)))


def bifurcation_arcs_m2(data: ExpansionData, rho_schedule=None,
                        tol=DEFAULT_CLASSIFY_TOL):
    """Assemble the m = 2 bifurcation arcs from expansion data (q = 2).

    One FoldPairCusp per interior fold of the coefficient-curve projection,
    one EndArc pair (opposite tangents) per antipodal end-point pair, one
    IntersectionArc per intersection point.  Hypothesis violations are
    annotated, never silently dropped.
    """
    if data.q != 2:
        raise InvalidParamsError("arcs need q = 2")
    if data.m != 2:
        raise InvalidParamsError("use bifurcation_arcs_m for m > 2")
    schedule = np.asarray(rho_schedule if rho_schedule is not None
                          else geometric_schedule())
    annotations = []

    def b1fun(th, x):
        return float(data.bs_theta(th, x)[0])

    curves = trace_zero_curve(b1fun, tol=tol, chart=data.chart)
    folds, unresolved = [], []
    for cur in curves:
        fs, us = find_fold_points(data, cur, tol)
        folds.extend(fs)
        unresolved.extend(us)
    ends = find_end_points(data, curves, tol)
    inters = find_intersection_points(data, curves, tol)
    arcs = []

    for fold in sorted(folds, key=lambda f: (f.theta, f.x)):
        if fold.classified.kind != KIND_INTERIOR:
            if fold.classified.kind == KIND_END:
                annotations.append(
                    f"H2 violation: fold of the projection at an end point "
                    f"(theta={fold.theta:.4f}, x={fold.x:.4f})"
                )
            continue  # folds outside the cone carry no real sheet
        if abs(fold.classified.residuals[1]) <= tol:
            annotations.append(
                f"H3 violation: b2 vanishes at fold (theta={fold.theta:.4f})"
            )
        branches = _sample_fold_arcs(data, fold, schedule, annotations)
        if not branches:
            continue
        arc = BifurcationArc(
            kind="FoldPairCusp",
            origin_direction=unit_dir(fold.theta),
            source_point=fold,
            contact_order=Fraction(3, 2),
            sample_polyline=branches[0][0],
            branches=[b[0] for b in branches],
            rho_values=branches[0][1],
        )
        arcs.append(arc)

    # end points come in antipodal pairs; emit each pair once
    seen = []
    for pt in sorted(ends, key=lambda p: (p.theta, p.x)):
        if any(
            abs(np.mod(pt.theta - th + np.pi, TWO_PI) - np.pi) < 1e-5
            and data.chart.distance(pt.x, x) < 1e-5
            for th, x in seen
        ):
            continue
        seen.append((pt.theta, pt.x))
        seen.append((np.mod(pt.theta + np.pi, TWO_PI), pt.x))
        h2p = _h2prime_residual(data, pt)
        if h2p <= tol:
            annotations.append(
                f"H2' violation at end point (theta={pt.theta:.4f}, x={pt.x:.4f}): "
                f"residual {h2p:.2e}"
            )
        branches, _ = _sample_case_ii_arcs(data, pt, schedule, annotations)
        for eps, rhos in branches:
            tangent = eps[0] / np.linalg.norm(eps[0])
            arcs.append(
                BifurcationArc(
                    kind="EndArc",
                    origin_direction=tangent,
                    source_point=pt,
                    contact_order=Fraction(2, 1),
                    sample_polyline=eps,
                    branches=[eps],
                    rho_values=rhos,
                )
            )

    for pt in sorted(inters, key=lambda p: (p.theta, p.x)):
        rhos, pts = _sample_intersection_arc(data, pt, schedule)
        if len(rhos) < 3:
            continue
        eps = _branch_eps(rhos, pts)
        arcs.append(
            BifurcationArc(
                kind="IntersectionArc",
                origin_direction=unit_dir(pt.theta),
                source_point=pt,
                contact_order=Fraction(2, 1),
                sample_polyline=eps,
                branches=[eps],
                rho_values=rhos,
            )
        )

    return ArcSet(arcs, annotations, curves, folds, unresolved,
                  end_points=ends, intersection_points=inters)


def bifurcation_arcs_m(m, data: ExpansionData, rho_schedule=None,
                       tol=DEFAULT_CLASSIFY_TOL):
    """Bifurcation arcs for degeneracy degree m >= 3 (q = 2).

    Fold pairs emanate in the same direction for even m and opposite
    directions for odd m; case-(ii) points spawn EndArc pairs (m even) or
    HysteresisArc pairs (m odd); case-(iii) points generate no arcs.
    """
    if m < 3:
        return bifurcation_arcs_m2(data, rho_schedule, tol)
    if data.m != m:
        raise InvalidParamsError(f"data built for m={data.m}, asked m={m}")
    if data.q != 2:
        raise InvalidParamsError("arcs need q = 2")
    schedule = np.asarray(rho_schedule if rho_schedule is not None
                          else geometric_schedule())
    annotations = []

    def b0fun(th, x):
        return float(data.bs_theta(th, x)[0])

    curves = trace_zero_curve(b0fun, tol=tol, chart=data.chart)
    folds, unresolved = [], []
    for cur in curves:
        fs, us = find_fold_points(data, cur, tol)
        folds.extend(fs)
        unresolved.extend(us)
    case_ii = find_case_ii_points(data, curves, tol)
    case_iii = find_case_iii_points(data, curves, tol)
    arcs = []

    for fold in sorted(folds, key=lambda f: (f.theta, f.x)):
        if fold.classified.kind != KIND_INTERIOR:
            continue
        branches = _sample_fold_arcs(data, fold, schedule, annotations)
        if not branches:
            continue
        arcs.append(
            BifurcationArc(
                kind="FoldPairCusp",
                origin_direction=unit_dir(fold.theta),
                source_point=fold,
                contact_order=Fraction(m + 1, m),
                sample_polyline=branches[0][0],
                branches=[b[0] for b in branches],
                rho_values=branches[0][1],
            )
        )

    seen = []
    for pt in sorted(case_ii, key=lambda p: (p.theta, p.x)):
        if any(
            abs(np.mod(pt.theta - th + np.pi, TWO_PI) - np.pi) < 1e-5
            and data.chart.distance(pt.x, x) < 1e-5
            for th, x in seen
        ):
            continue
        seen.append((pt.theta, pt.x))
        seen.append((np.mod(pt.theta + np.pi, TWO_PI), pt.x))
        branches, lam = _sample_case_ii_arcs(data, pt, schedule, annotations)
        kind = "EndArc" if m % 2 == 0 else "HysteresisArc"
        for eps, rhos in branches:
            tangent = eps[0] / np.linalg.norm(eps[0])
            arcs.append(
                BifurcationArc(
                    kind=kind,
                    origin_direction=tangent,
                    source_point=pt,
                    contact_order=Fraction(m, m - 1),
                    sample_polyline=eps,
                    branches=[eps],
                    rho_values=rhos,
                )
            )

    return ArcSet(arcs, annotations, curves, folds, unresolved,
                  case_ii_points=case_ii, case_iii_points=case_iii)


# --------------------------------------------- variational m = 3 geometry


@dataclass
class VariationalCurves:
    b0prime_curves: list
    b1_curves: list
    end_points: list  # (theta, x, transversal flag)
    intersection_points: list  # critical points of b1 on the b0'-curve
    degenerate: bool = False


def variational_discriminant_m3(b0, b1, tol=1e-6, chart=None, db0_dx=None):
    """Variational (gradient) discriminant geometry for the cubic potential.

    Traces B0' = {d b0/dx = 0} and B1 = {b1 = 0}; end points are their
    transversal intersections, intersection points the critical points of
    b1 restricted to B0'.  A b0 independent of x is degenerate input.
    """
    chart = chart or ManifoldChart()
    if db0_dx is None:
        def db0_dx(th, x):
            return float(deriv1_central4(lambda xx: b0(th, xx), x, 1e-4))

    ths = np.linspace(0, TWO_PI, 48, endpoint=False)
    xg = chart.grid(48)
    amp_d = max(abs(db0_dx(th, x)) for th in ths for x in xg)
    amp_b = max(abs(b0(th, x)) for th in ths for x in xg)
    if amp_d < tol * max(1.0, amp_b):
        return VariationalCurves([], [], [], [], degenerate=True)

    b0p_curves = trace_zero_curve(db0_dx, tol=tol, chart=chart)
    b1_curves = trace_zero_curve(lambda th, x: float(b1(th, x)), tol=tol, chart=chart)

    ends = []
    for cur in b0p_curves:
        pts = cur.points
        vals = np.array([b1(p[0], p[1]) for p in pts])
        n = len(pts)
        for k in range(n if cur.closed else n - 1):
            k2 = (k + 1) % n
            if vals[k] == 0.0 or vals[k] * vals[k2] >= 0:
                continue

            def system(z):
                return np.array([db0_dx(z[0], z[1]), float(b1(z[0], z[1]))])

            z, ok, _ = newton_nd(system, 0.5 * (pts[k] + pts[k2]), tol=1e-11)
            if not ok:
                continue
            J = fd_jacobian(system, z)
            transversal = abs(np.linalg.det(J)) > tol
            th, x = float(np.mod(z[0], TWO_PI)), float(chart.wrap(z[1]))
            if not any(
                abs(np.mod(th - e[0] + np.pi, TWO_PI) - np.pi) < 1e-6
                and chart.distance(x, e[1]) < 1e-6
                for e in ends
            ):
                ends.append((th, x, transversal))

    # critical points of b1 along B0': zeros of the along-curve derivative
    crits = []
    for cur in b0p_curves:
        pts = cur.points
        vals = np.array([b1(p[0], p[1]) for p in pts])
        n = len(pts)
        if n < 4:
            continue
        rng = range(n) if cur.closed else range(1, n - 1)
        for k in rng:
            km = (k - 1) % n
            kp = (k + 1) % n
            d1 = vals[k] - vals[km]
            d2 = vals[kp] - vals[k]
            if d1 == 0.0 or d1 * d2 >= 0:
                continue

            def lagrange(z):
                g1 = _grad(lambda a, bxx: float(b1(a, bxx)), z)
                g2 = _grad(db0_dx, z)
                return np.array(
                    [db0_dx(z[0], z[1]), g1[0] * g2[1] - g1[1] * g2[0]]
                )

            z, ok, _ = newton_nd(lagrange, pts[k].copy(), tol=1e-10)
            if not ok:
                continue
            th, x = float(np.mod(z[0], TWO_PI)), float(chart.wrap(z[1]))
            if not any(
                abs(np.mod(th - c[0] + np.pi, TWO_PI) - np.pi) < 1e-6
                and chart.distance(x, c[1]) < 1e-6
                for c in crits
            ):
                crits.append((th, x))

    return VariationalCurves(b0p_curves, b1_curves, ends, crits)
