"""Dense numeric kernels shared by both controllers.

Everything here targets d in {1, 2} with a handful of affine rows.  At that
size, closed-form active-set enumeration is exact, allocation-light, and
faster than a general-purpose solver, which keeps the control loop real-time
safe and bit-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .errors import ContractError, SingularityError

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class AffineRow:
    """Affine inequality coeff.u + constant >= 0."""

    coeff: np.ndarray
    constant: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeff, dtype=float))
        if not np.all(np.isfinite(c)) or not np.isfinite(self.constant):
            raise ContractError("affine row has non-finite entries")
        object.__setattr__(self, "coeff", c)
        object.__setattr__(self, "constant", float(self.constant))

    def slack(self, u: np.ndarray) -> float:
        return float(self.coeff @ u + self.constant)


def normalize_row(row: AffineRow) -> AffineRow:
    """Scale a row to unit coefficient norm (feasible set unchanged).

    Rows with a vanishing coefficient scale by their constant instead, so
    slacks are O(1) and tolerances behave geometrically regardless of how
    stiff the originating barrier is.
    """
    scale = float(np.linalg.norm(row.coeff))
    if scale < 1e-12:
        scale = max(abs(row.constant), 1.0)
    return AffineRow(coeff=row.coeff / scale, constant=row.constant / scale)


def rows_feasible(u: np.ndarray, rows: list[AffineRow], tol: float = FEAS_TOL) -> bool:
    return all(r.slack(u) >= -tol for r in rows)


def _better(cand: np.ndarray, best: np.ndarray, target: np.ndarray) -> bool:
    """Strict ordering for candidate selection with deterministic tie-breaks."""
    ca = float(np.sum((cand - target) ** 2))
    cb = float(np.sum((best - target) ** 2))
    if ca < cb - 1e-12:
        return True
    if ca > cb + 1e-12:
        return False
    na, nb = float(cand @ cand), float(best @ best)
    if na < nb - 1e-12:
        return True
    if na > nb + 1e-12:
        return False
    return tuple(cand) < tuple(best)


def qp_closest(target, rows: list[AffineRow], tol: float = FEAS_TOL) -> np.ndarray | None:
    """Project target onto the polyhedron {u : coeff.u + constant >= 0 for all rows}.

    Enumerates active subsets of size <= d: the unconstrained point, each
    single-row hyperplane foot, and (d = 2) each independent row pair's
    intersection.  The projection onto a nonempty polyhedron always has an
    active set of size <= d, so the feasible minimum-cost candidate is exact.
    Returns None when the polyhedron is empty.
    """
    t = np.atleast_1d(np.asarray(target, dtype=float))
    d = t.shape[0]
    rows = [normalize_row(r) for r in rows]
    best = None
    if rows_feasible(t, rows, tol):
        best = t.copy()
    for r in rows:
        gg = float(r.coeff @ r.coeff)
        if gg < 1e-24:
            continue
        cand = t - (r.slack(t) / gg) * r.coeff
        if rows_feasible(cand, rows, tol) and (best is None or _better(cand, best, t)):
            best = cand
    if d == 2:
        n = len(rows)
        for i in range(n):
            for j in range(i + 1, n):
                a = np.stack([rows[i].coeff, rows[j].coeff])
                b = -np.array([rows[i].constant, rows[j].constant])
                det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
                if abs(det) < 1e-12 * max(1.0, float(np.abs(a).max()) ** 2):
                    continue
                cand = np.array(
                    [
                        (b[0] * a[1, 1] - b[1] * a[0, 1]) / det,
                        (a[0, 0] * b[1] - a[1, 0] * b[0]) / det,
                    ]
                )
                if rows_feasible(cand, rows, tol) and (best is None or _better(cand, best, t)):
                    best = cand
    return best


def qp_kkt_residual(u: np.ndarray, target, rows: list[AffineRow], active_tol: float = 1e-7) -> float:
    """Stationarity residual of the projection QP at u with nonnegative multipliers.

    Solves min ||2(u - target) - G_active^T mu|| over mu >= 0; a valid optimum
    gives a residual at numerical noise level.
    """
    t = np.asarray(target, dtype=float)
    grad = 2.0 * (u - t)
    active = [r.coeff for r in rows if abs(r.slack(u)) <= active_tol]
    if not active:
        return float(np.linalg.norm(grad))
    g = np.stack(active, axis=1)
    _, res = nnls(g, grad)
    return float(res)


def project_to_ball(target, radius_sq: float) -> np.ndarray:
    """Euclidean projection of target onto the origin-centered ball of squared radius radius_sq."""
    if radius_sq < 0:
        raise ContractError(f"radius_sq must be nonnegative, got {radius_sq}")
    t = np.atleast_1d(np.asarray(target, dtype=float))
    nn = float(t @ t)
    if nn <= radius_sq or nn == 0.0:
        return t.copy()
    return t * np.sqrt(radius_sq / nn)


@dataclass(frozen=True)
class PolyRealRoots:
    """Real roots of a polynomial, ascending, with the worst post-polish residual."""

    roots: np.ndarray
    residual: float


def real_roots(coeffs) -> PolyRealRoots:
    """All real roots of a real polynomial given by descending coefficients.

    Degenerate leading coefficients are trimmed; roots come from the companion
    matrix, get one Newton polish each, and complex pairs are dropped by an
    imaginary-part threshold of 1e-7*(1+|real|).
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if not np.all(np.isfinite(c)):
        raise ContractError("polynomial coefficients must be finite")
    scale = float(np.abs(c).max()) if c.size else 0.0
    if scale == 0.0:
        raise ContractError("all-zero polynomial is ill-posed")
    lead = np.nonzero(np.abs(c) > 1e-14 * scale)[0]
    c = c[lead[0]:]
    if c.shape[0] <= 1:
        return PolyRealRoots(roots=np.array([]), residual=0.0)
    raw = np.roots(c)
    deriv = np.polyder(c)
    out = []
    for z in raw:
        if abs(z.imag) > 1e-7 * (1.0 + abs(z.real)):
            continue
        x = float(z.real)
        dp = float(np.polyval(deriv, x))
        if abs(dp) > 1e-300:
            x = x - float(np.polyval(c, x)) / dp
        out.append(x)
    roots = np.sort(np.array(out))
    residual = float(max((abs(np.polyval(c, x)) for x in roots), default=0.0))
    return PolyRealRoots(roots=roots, residual=residual)


@dataclass(frozen=True)
class OrthComplement:
    """Orthonormal complement basis of a vector plus its normalized direction."""

    basis: np.ndarray = field(repr=False)  # d x (d-1), columns orthonormal, orthogonal to g
    parallel_unit: np.ndarray = field(repr=False)


def orth_complement(g) -> OrthComplement:
    """Orthonormal basis of the complement of g; for d = 2 the basis is g rotated +90 degrees."""
    v = np.atleast_1d(np.asarray(g, dtype=float))
    norm = float(np.linalg.norm(v))
    if norm <= 1e-12:
        raise SingularityError("cannot build a complement basis for a near-zero vector")
    unit = v / norm
    d = v.shape[0]
    if d == 1:
        return OrthComplement(basis=np.zeros((1, 0)), parallel_unit=unit)
    if d == 2:
        perp = np.array([-unit[1], unit[0]])
        return OrthComplement(basis=perp.reshape(2, 1), parallel_unit=unit)
    raise ContractError(f"orth_complement supports d <= 2, got d={d}")
