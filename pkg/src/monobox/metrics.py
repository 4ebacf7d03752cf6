"""Ground-truth error measurement against exact function metadata.

The Lp(mu) distance between two piecewise-described functions is computed by
splitting [0, 1] at every breakpoint of either side and at every density
edge of the measure, so each cell integrand is smooth up to the chord
crossing; adaptive Simpson handles the rest.  Atoms contribute point terms.
References without metadata are rejected outright rather than silently
approximated on a sample grid.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .boxcover import BoxCover
from .funcs import FunctionOracle, Piece, PiecewiseMeta
from .measure import Measure
from .refine import PiecewiseLinearEstimator

MAX_P = 8


class UnmeterableError(ValueError):
    """The reference function has no exact metadata to integrate against."""


def _powi(x: float, p: int) -> float:
    r = 1.0
    for _ in range(p):
        r *= x
    return r


def _check_p(p: int) -> int:
    if int(p) != p or not 1 <= p <= MAX_P:
        raise ValueError(f"p must be an integer in 1..{MAX_P}, got {p}")
    return int(p)


@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive-Simpson settings: absolute tolerance split across cells."""

    abs_tol: float = 1e-11
    max_depth: int = 48
    extra_splits: tuple = ()

    def __post_init__(self):
        if self.abs_tol <= 0.0:
            raise ValueError("tolerance must be positive")


DEFAULT_QUAD = QuadratureSpec()


def _adaptive_simpson(g, a: float, b: float, tol: float, max_depth: int) -> float:
    fa, fb = g(a), g(b)
    c = 0.5 * (a + b)
    fc = g(c)
    whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb)
    return _asr(g, a, fa, b, fb, c, fc, whole, max(tol, 1e-16), max_depth)


def _asr(g, a, fa, b, fb, c, fc, whole, tol, depth):
    d = 0.5 * (a + c)
    e = 0.5 * (c + b)
    fd, fe = g(d), g(e)
    left = (c - a) / 6.0 * (fa + 4.0 * fd + fc)
    right = (b - c) / 6.0 * (fc + 4.0 * fe + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_asr(g, a, fa, c, fc, d, fd, left, 0.5 * tol, depth - 1)
            + _asr(g, c, fc, b, fb, e, fe, right, 0.5 * tol, depth - 1))


# ---------------------------------------------------------------------------
# piecewise views


def as_meta(obj) -> PiecewiseMeta:
    """Coerce an estimator, oracle or metadata object to exact metadata."""
    if isinstance(obj, PiecewiseMeta):
        return obj
    if isinstance(obj, FunctionOracle):
        if obj.meta is None:
            raise UnmeterableError(
                f"{obj.name} is black-box only; cannot meter its error")
        return obj.meta
    if isinstance(obj, PiecewiseLinearEstimator):
        b = obj.breakpoints
        v = obj.values
        pieces = []
        for i in range(len(b) - 1):
            slope = (v[i + 1] - v[i]) / (b[i + 1] - b[i])
            pieces.append(Piece(float(b[i]), float(b[i + 1]), "affine",
                                x0=float(b[i]), c0=float(v[i]), c1=float(slope)))
        return PiecewiseMeta(breakpoints=b, values=v, pieces=pieces)
    raise UnmeterableError(f"cannot interpret {type(obj).__name__} as piecewise")


def bracket_views(cover: BoxCover):
    """Lower/upper step functions of a cover, zero at the shared breakpoints.

    Their Lp(mu) distance equals the cover's total generalized area, which is
    the cross-check the suite runs against cover_total.
    """
    c = cover.breakpoints
    zeros = np.zeros(len(c))
    lo_pieces = [Piece(float(c[i]), float(c[i + 1]), "constant",
                       c0=float(cover.y_lo[i])) for i in range(len(cover))]
    hi_pieces = [Piece(float(c[i]), float(c[i + 1]), "constant",
                       c0=float(cover.y_hi[i])) for i in range(len(cover))]
    return (PiecewiseMeta(breakpoints=c, values=zeros, pieces=lo_pieces),
            PiecewiseMeta(breakpoints=c, values=zeros, pieces=hi_pieces))


def _piece_at(meta: PiecewiseMeta, x: float) -> Piece:
    i = bisect_right(meta._b_list, x) - 1
    i = min(max(i, 0), len(meta.pieces) - 1)
    return meta.pieces[i]


def _cells(metas, m: Measure, quad: QuadratureSpec):
    parts = [meta.breakpoints for meta in metas] + [m.boundary_points()]
    if quad.extra_splits:
        parts.append(np.asarray(quad.extra_splits, dtype=float))
    return np.unique(np.clip(np.concatenate(parts), 0.0, 1.0))


def lp_error(e, f, p: int, m: Measure, quad: QuadratureSpec | None = None) -> float:
    """Lp(mu) distance between two meterable piecewise functions.

    Both arguments may be estimators, metadata-backed oracles or raw
    metadata; the computation is symmetric in the two.
    """
    p = _check_p(p)
    quad = quad or DEFAULT_QUAD
    A = as_meta(e)
    B = as_meta(f)
    pts = _cells((A, B), m, quad)
    total = 0.0
    for u, v in zip(pts, pts[1:]):
        u, v = float(u), float(v)
        d = m.density_at(0.5 * (u + v))
        if v <= u or d <= 0.0:
            continue
        pa = _piece_at(A, 0.5 * (u + v))
        pb = _piece_at(B, 0.5 * (u + v))

        def integrand(x, pa=pa, pb=pb):
            return _powi(abs(pa.value(x) - pb.value(x)), p)

        tol_cell = quad.abs_tol * (v - u) / max(1.0, d)
        total += d * _adaptive_simpson(integrand, u, v, tol_cell, quad.max_depth)
    for x, w in m.atoms:
        if w > 0.0:
            total += w * _powi(abs(A.value(x) - B.value(x)), p)
    return total ** (1.0 / p)


class ChordErrorMeter:
    """Incremental true-error bookkeeping for refinement runs.

    ``box_error_pow(a, b)`` returns the exact contribution of one box to
    ||interpolant - f||_p^p: the integral of |chord - f|^p over (a, b)
    against the density plus interior atom terms.  The refinement drivers
    subtract the split box's term and add the two children's, giving a full
    per-iteration error series at O(1) integrals per step.
    """

    def __init__(self, f, p: int, m: Measure,
                 quad: QuadratureSpec | None = None):
        self.meta = as_meta(f)
        self.p = _check_p(p)
        self.measure = m
        self.quad = quad or DEFAULT_QUAD
        inner = np.concatenate([self.meta.breakpoints, m.boundary_points()])
        self._splits = np.unique(inner)

    def box_error_pow(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        meta, m, p, quad = self.meta, self.measure, self.p, self.quad
        va = meta.value(a)
        vb = meta.value(b)
        slope = (vb - va) / (b - a)
        lo_i, hi_i = np.searchsorted(self._splits, [a, b])
        pts = [a] + [float(x) for x in self._splits[lo_i:hi_i] if a < x < b] + [b]
        total = 0.0
        for u, v in zip(pts, pts[1:]):
            d = m.density_at(0.5 * (u + v))
            if v <= u or d <= 0.0:
                continue
            pc = _piece_at(meta, 0.5 * (u + v))

            def integrand(x, pc=pc):
                return _powi(abs(va + slope * (x - a) - pc.value(x)), p)

            tol_cell = quad.abs_tol * (v - u) / max(1.0, d)
            total += d * _adaptive_simpson(integrand, u, v, tol_cell,
                                           quad.max_depth)
        for x, w in m.atoms:
            if a < x < b and w > 0.0:
                total += w * _powi(abs(va + slope * (x - a) - meta.value(x)), p)
        return total


def lp_error_pow_via_meter(e: PiecewiseLinearEstimator, f, p: int, m: Measure,
                           quad: QuadratureSpec | None = None) -> float:
    """||e - f||_p^p summed box by box; agrees with lp_error(e, f)^p."""
    meter = ChordErrorMeter(f, p, m, quad)
    b = e.breakpoints
    return sum(meter.box_error_pow(float(b[i]), float(b[i + 1]))
               for i in range(len(b) - 1))


# ---------------------------------------------------------------------------
# analytic checks and slopes


def affine_error_bound_check(piece: Piece, p: int) -> bool:
    """True iff the chord error of a curvature-bounded piece meets the
    (3M/2)^p * (b-a)^(2p+1) cap; exact closed form, no quadrature."""
    p = _check_p(p)
    M = piece.curvature_bound()
    if M is None:
        raise ValueError("piece has unbounded curvature; bound does not apply")
    width = piece.hi - piece.lo
    if piece.kind in ("constant", "affine"):
        err = 0.0
    else:
        beta = (math.factorial(p) ** 2) / math.factorial(2 * p + 1)
        err = _powi(abs(piece.c2), p) * width ** (2 * p + 1) * beta
    bound = _powi(1.5 * M, p) * width ** (2 * p + 1)
    return err <= bound + 1e-15


def chord_error_pow_quadrature(piece: Piece, p: int,
                               quad: QuadratureSpec | None = None) -> float:
    """Quadrature version of the chord error of one piece (Lebesgue)."""
    p = _check_p(p)
    quad = quad or DEFAULT_QUAD
    a, b = piece.lo, piece.hi
    va, vb = piece.value(a), piece.value(b)
    slope = (vb - va) / (b - a)

    def integrand(x):
        return _powi(abs(va + slope * (x - a) - piece.value(x)), p)

    return _adaptive_simpson(integrand, a, b, quad.abs_tol, quad.max_depth)


def loglog_slope(series) -> float:
    """Least-squares slope of log(1/err) against log(n)."""
    pts = [(float(n), float(err)) for n, err in series]
    if len(pts) < 4:
        raise ValueError("need at least 4 points for a slope")
    if any(n <= 0.0 or err <= 0.0 for n, err in pts):
        raise ValueError("all budgets and errors must be positive")
    xs = np.log([n for n, _ in pts])
    ys = np.log([1.0 / err for _, err in pts])
    return float(np.polyfit(xs, ys, 1)[0])


def reference_integral(f, m: Measure) -> float:
    """Exact integral of a meterable function against the measure."""
    meta = as_meta(f)
    total = 0.0
    for lo, hi, d in m.density_pieces:
        if d > 0.0:
            total += d * meta.integral_dx(lo, hi)
    for x, w in m.atoms:
        if w > 0.0:
            total += w * meta.value(x)
    return total
