"""Sylvester-type resultant of the two normal-form components.

The determinant R_m of the (2m-1) x (2m-1) matrix below vanishes exactly on
the discriminant of the deformation (a_0 + ... + a_{m-1}y^{m-1},
abar_0 + ... + abar_{m-2}y^{m-2} + y^m).  Row layout (m = 4 shown):

    a0 a1 a2 a3 .  .  .
    .  a0 a1 a2 a3 .  .
    .  .  a0 a1 a2 a3 .
    .  .  .  a0 a1 a2 a3
    b0 b1 b2 0  1  .  .
    .  b0 b1 b2 0  1  .
    .  .  b0 b1 b2 0  1

with b_j = abar_j.  For m = 2 the closed form is R_2 = a0^2 + a1^2 abar_0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import loglog_slope
from .exceptions import InvalidParamsError
from .models import DeformationParams


@dataclass(frozen=True)
class SylvesterMatrix:
    m: int
    entries: np.ndarray

    @property
    def size(self):
        return 2 * self.m - 1


def sylvester_matrix(p: DeformationParams) -> SylvesterMatrix:
    """Assemble the Sylvester-type matrix for the two components."""
    m = p.m
    n = 2 * m - 1
    M = np.zeros((n, n))
    arow = np.array(p.a)
    brow = np.concatenate([np.array(p.abar), [0.0, 1.0]])  # abar_0..abar_{m-2}, 0, 1
    for i in range(m):
        M[i, i : i + m] = arow
    for j in range(m - 1):
        M[m + j, j : j + m + 1] = brow
    return SylvesterMatrix(m, M)


def _det_lu(M):
    # numpy's det is LAPACK getrf: LU with partial pivoting
    return float(np.linalg.det(M))


def resultant(p: DeformationParams) -> float:
    """R_m(a, abar) as an LU determinant."""
    return _det_lu(sylvester_matrix(p).entries)


def scaled_tolerance(p: DeformationParams, tol: float) -> float:
    """tol * (1 + |a~|^{2m-1}): keeps the zero test meaningful at all scales."""
    return tol * (1.0 + float(np.linalg.norm(p.vector)) ** (2 * p.m - 1))


def is_on_discriminant(p: DeformationParams, tol: float) -> bool:
    """|R_m| <= tol * (1 + |a~|^{2m-1})."""
    if tol <= 0:
        raise InvalidParamsError("tol must be positive")
    return abs(resultant(p)) <= scaled_tolerance(p, tol)


def common_root_oracle(p: DeformationParams, root_tol: float = 1e-6) -> bool:
    """Independent check: the two components share a (complex) root.

    Roots come from companion-matrix eigenvalues (numpy.roots).  A first
    component that is identically zero shares every root of the second.
    """
    a_desc = np.array(p.a[::-1])  # numpy.roots wants descending powers
    q_desc = np.concatenate([[1.0, 0.0], np.array(p.abar[::-1])])
    if np.max(np.abs(a_desc), initial=0.0) == 0.0:
        return True
    roots_p = np.roots(a_desc)
    if roots_p.size == 0:  # nonzero constant: no roots at all
        return False
    roots_q = np.roots(q_desc)
    dist = np.abs(roots_p[:, None] - roots_q[None, :])
    return bool(np.min(dist) < root_tol)


@dataclass
class StructureCheck:
    name: str
    expected: str
    observed: str
    passed: bool


@dataclass
class StructureReport:
    m: int
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _rand_positive(rng, n):
    return rng.uniform(0.3, 1.7, size=n) * rng.choice([-1.0, 1.0], size=n)


def verify_structure(m: int, trials: int = 20, seed: int = 0) -> StructureReport:
    """Numerically confirm the leading-term structure of R_m.

    Checks (scaling probes t in {1e-1..1e-4}, log-log slope fits):
      (i)   R_m on (a_0, 0..; 0..) equals a_0^m exactly;
      (ii)  R_m on {a_0 = 0, a = (0, a_1, 0..), abar = (abar_0, 0..)} has
            leading monomial (-1)^m abar_0 a_1^m (joint-scaling slope m+1,
            sign and ratio checked);
      (iii) R_m on {a_0 = a_1 = 0} is divisible by abar_0^2 with quotient
            leading term a_2^m (slope m+2, ratio checked; for m = 2 the
            restriction is identically zero since there is no a_2).
    """
    if not (2 <= m <= 6):
        raise InvalidParamsError("verify_structure supports 2 <= m <= 6")
    rng = np.random.default_rng(seed)
    report = StructureReport(m)
    scales = np.array([1e-1, 10 ** -1.75, 10 ** -2.5, 10 ** -3.25, 1e-4])

    # (i) pure a_0 direction: exact monomial
    worst = 0.0
    for _ in range(trials):
        a0 = float(_rand_positive(rng, 1)[0])
        vec = np.zeros(2 * m - 1)
        vec[0] = a0
        r = resultant(DeformationParams.from_vector(m, vec))
        worst = max(worst, abs(r - a0**m) / abs(a0**m))
    report.checks.append(
        StructureCheck("lowest-order-term", f"a0^{m} exactly", f"rel err {worst:.2e}",
                       worst < 1e-12)
    )

    # (ii) a_0 = 0 slice: leading monomial (-1)^m abar_0 a_1^m
    ok, obs = True, []
    for _ in range(trials):
        a1, ab0 = _rand_positive(rng, 2)

        def restricted(t):
            vec = np.zeros(2 * m - 1)
            vec[1] = a1 * t
            vec[m] = ab0 * t
            return resultant(DeformationParams.from_vector(m, vec))

        vals = np.array([restricted(t) for t in scales])
        slope = loglog_slope(scales, vals)
        lead = (-1.0) ** m * ab0 * a1**m
        ratio = vals[-1] / (lead * scales[-1] ** (m + 1))
        ok &= abs(slope - (m + 1)) < 0.05 and abs(ratio - 1.0) < 1e-6
        obs.append((slope, ratio))
    slopes = np.array([o[0] for o in obs])
    report.checks.append(
        StructureCheck(
            "a0=0-factorisation",
            f"(-1)^{m} abar0 a1^{m}: joint slope {m + 1}, ratio 1",
            f"slope {slopes.mean():.4f}, ratio err "
            f"{max(abs(o[1] - 1) for o in obs):.2e}",
            bool(ok),
        )
    )

    # (iii) a_0 = a_1 = 0 slice: abar_0^2 * (a_2^m + higher)
    if m == 2:
        worst = 0.0
        for _ in range(trials):
            ab0 = float(_rand_positive(rng, 1)[0])
            vec = np.zeros(3)
            vec[2] = ab0
            worst = max(worst, abs(resultant(DeformationParams.from_vector(2, vec))))
        report.checks.append(
            StructureCheck("a0=a1=0-factorisation",
                           "identically zero (no a2 coefficient when m = 2)",
                           f"max |R| {worst:.2e}", worst < 1e-13)
        )
    else:
        ok, obs = True, []
        for _ in range(trials):
            a2, ab0 = _rand_positive(rng, 2)

            def restricted(t):
                vec = np.zeros(2 * m - 1)
                vec[2] = a2 * t
                vec[m] = ab0 * t
                return resultant(DeformationParams.from_vector(m, vec))

            vals = np.array([restricted(t) for t in scales])
            slope = loglog_slope(scales, vals)
            quotient = vals[-1] / (ab0 * scales[-1]) ** 2
            ratio = quotient / (a2 * scales[-1]) ** m
            ok &= abs(slope - (m + 2)) < 0.05 and abs(ratio - 1.0) < 1e-6
            obs.append((slope, ratio))
        slopes = np.array([o[0] for o in obs])
        report.checks.append(
            StructureCheck(
                "a0=a1=0-factorisation",
                f"abar0^2 * a2^{m}: joint slope {m + 2}, quotient ratio 1",
                f"slope {slopes.mean():.4f}, ratio err "
                f"{max(abs(o[1] - 1) for o in obs):.2e}",
                bool(ok),
            )
        )
    return report


def blown_up_matrix(m, rho, b_vec, c_vec=None):
    """Sylvester matrix of a = rho*(b + rho*c) with the a-rows scaled by 1/rho.

    det of this matrix equals R_m(rho(b + rho c)) / rho^m, i.e. the blown-up
    resultant Rbar_m; entries stay O(1) so the determinant is computed
    without catastrophic cancellation even for tiny rho.
    """
    b_vec = np.asarray(b_vec, dtype=float)
    c_vec = np.zeros_like(b_vec) if c_vec is None else np.asarray(c_vec, dtype=float)
    if b_vec.shape != (2 * m - 1,):
        raise InvalidParamsError(f"b must have length {2 * m - 1}")
    eff = b_vec + rho * c_vec
    n = 2 * m - 1
    M = np.zeros((n, n))
    arow = eff[:m]
    brow = np.concatenate([rho * eff[m:], [0.0, 1.0]])
    for i in range(m):
        M[i, i : i + m] = arow
    for j in range(m - 1):
        M[m + j, j : j + m + 1] = brow
    return M


def rbar(m, rho, b_vec, c_vec=None):
    """Blown-up resultant Rbar_m(rho, b, c) = R_m(rho(b + rho c)) / rho^m."""
    return _det_lu(blown_up_matrix(m, rho, b_vec, c_vec))
