"""Boxes, box-covers and covering-complexity estimates for monotone functions.

A box-cover of a non-decreasing f is a chain of adjacent axis-aligned boxes
whose union contains the graph of f away from the shared breakpoints.  Two
complexity numbers matter: the least box count whose total generalized area
(in the p-th power sense) stays below a budget, and the least count with a
per-box area cap.  The true minima are uncomputable for black-box functions,
so this module ships a constructive upper bound, a quantile splitter, and a
grid-restricted dynamic program that is exact on the piecewise families the
test suite uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcs import FunctionOracle
from .measure import Measure


class CoverError(ValueError):
    pass


class GridTooLargeError(CoverError):
    """The exact oracle is restricted to desk-scale grids."""


def _powi(x: float, p: int) -> float:
    r = 1.0
    for _ in range(p):
        r *= x
    return r


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [x_lo, x_hi] x [y_lo, y_hi] inside the unit square."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (0.0 <= self.x_lo < self.x_hi <= 1.0):
            raise CoverError(f"bad x-extent [{self.x_lo}, {self.x_hi}]")
        if not (0.0 <= self.y_lo <= self.y_hi <= 1.0):
            raise CoverError(f"bad y-extent [{self.y_lo}, {self.y_hi}]")


def width(b: Box, m: Measure) -> float:
    """Measure of the open x-extent of the box."""
    return m.mass_open(b.x_lo, b.x_hi)


def generalized_area(b: Box, p: int, m: Measure) -> float:
    """((y_hi - y_lo)^p * mu((x_lo, x_hi)))^(1/p)."""
    if p < 1:
        raise CoverError("p must be a positive integer")
    return (b.y_hi - b.y_lo) * width(b, m) ** (1.0 / p)


@dataclass(frozen=True)
class BoxCover:
    """Adjacent boxes tiling [0, 1]: shared breakpoints plus per-piece bands."""

    breakpoints: np.ndarray   # c_0 = 0 < ... < c_t = 1
    y_lo: np.ndarray          # band floor per piece
    y_hi: np.ndarray          # band ceiling per piece

    def __post_init__(self):
        c = np.asarray(self.breakpoints, dtype=float)
        lo = np.asarray(self.y_lo, dtype=float)
        hi = np.asarray(self.y_hi, dtype=float)
        if c[0] != 0.0 or c[-1] != 1.0 or np.any(np.diff(c) <= 0):
            raise CoverError("breakpoints must increase strictly from 0 to 1")
        if len(lo) != len(c) - 1 or len(hi) != len(c) - 1:
            raise CoverError("need one band per piece")
        if np.any(hi < lo):
            raise CoverError("band ceiling below floor")
        object.__setattr__(self, "breakpoints", c)
        object.__setattr__(self, "y_lo", lo)
        object.__setattr__(self, "y_hi", hi)

    def __len__(self):
        return len(self.y_lo)

    def boxes(self):
        c = self.breakpoints
        return [Box(c[i], c[i + 1], self.y_lo[i], self.y_hi[i])
                for i in range(len(self))]

    def covers(self, f: FunctionOracle, n_grid: int = 2048) -> bool:
        """Grid check that the bands really bracket f on open pieces."""
        fn = f.meta.value if f.meta is not None else f._fn
        c = self.breakpoints
        for i in range(len(self)):
            xs = np.linspace(c[i], c[i + 1], max(3, n_grid // len(self)))[1:-1]
            for x in xs:
                v = fn(float(x))
                if v < self.y_lo[i] - 1e-9 or v > self.y_hi[i] + 1e-9:
                    return False
        return True


def cover_total(c: BoxCover, p: int, m: Measure) -> float:
    """(sum of per-box generalized areas^p)^(1/p) == Lp gap of the bands."""
    s = 0.0
    for i in range(len(c)):
        mass = m.mass_open(float(c.breakpoints[i]), float(c.breakpoints[i + 1]))
        s += _powi(float(c.y_hi[i] - c.y_lo[i]), p) * mass
    return s ** (1.0 / p)


def cover_total_pow(c: BoxCover, p: int, m: Measure) -> float:
    """Same as cover_total but without the final root."""
    return sum(
        _powi(float(c.y_hi[i] - c.y_lo[i]), p)
        * m.mass_open(float(c.breakpoints[i]), float(c.breakpoints[i + 1]))
        for i in range(len(c)))


def constructive_cover(f: FunctionOracle, n: int, p: int, m: Measure) -> BoxCover:
    """The n-band ladder cover: slice the value range into n equal bands.

    Breakpoint i is the sup of {x : f(x) <= i/n}, located by 60 bisection
    steps on the evaluator (resolution ~1e-18; monotonicity makes bisection
    valid).  Degenerate pieces are dropped.  The result certifies that the
    total-area complexity at scale 1/n is at most n, whatever the measure.
    """
    if n < 1:
        raise CoverError("need n >= 1")
    cuts = [0.0]
    bands = []
    prev = 0.0
    for i in range(1, n + 1):
        level = i / n
        if i == n:
            x = 1.0
        else:
            lo, hi = prev, 1.0
            if f(hi) <= level:
                x = 1.0
            else:
                # invariant: f(lo) <= level or lo == left edge of remaining range
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if f(mid) <= level:
                        lo = mid
                    else:
                        hi = mid
                x = lo
        if x > prev:
            cuts.append(x)
            bands.append(((i - 1) / n, level))
            prev = x
        # else: empty band, drop it
    if cuts[-1] != 1.0:
        cuts.append(1.0)
        bands.append((bands[-1][1] if bands else 0.0, 1.0))
    return BoxCover(breakpoints=np.array(cuts),
                    y_lo=np.array([b[0] for b in bands]),
                    y_hi=np.array([b[1] for b in bands]))


def split_cover(c: BoxCover, n: int, p: int, m: Measure,
                eps: float | None = None) -> BoxCover:
    """Equalize a cover: split each box at conditional quantiles.

    Each box of the input (whose total area^p must be <= eps^p; eps defaults
    to the input's own total) is cut into floor(n*A^p/eps^p) + 1 parts of
    equal conditional mass, which caps every resulting area at eps / n^(1/p)
    while at most doubling the box count to 2n.  Zero-mass boxes are kept
    whole and degenerate slices are removed.
    """
    if n < len(c):
        raise CoverError(f"need n >= box count ({len(c)})")
    if eps is None:
        eps = cover_total(c, p, m)
    eps_p = _powi(float(eps), p)
    if eps_p <= 0.0:
        return c
    new_cuts = [0.0]
    new_lo, new_hi = [], []
    for i in range(len(c)):
        a, b = float(c.breakpoints[i]), float(c.breakpoints[i + 1])
        lo_i, hi_i = float(c.y_lo[i]), float(c.y_hi[i])
        mass = m.mass_open(a, b)
        a_pow = _powi(hi_i - lo_i, p) * mass
        if mass <= 0.0:
            k_i = 1
        else:
            k_i = int(np.floor(n * a_pow / eps_p)) + 1
        cuts = [a]
        for j in range(1, k_i):
            x = m.conditional_quantile(a, b, j / k_i)
            cuts.append(x)
        cuts.append(b)
        for u, v in zip(cuts, cuts[1:]):
            if v > u:
                new_cuts.append(v)
                new_lo.append(lo_i)
                new_hi.append(hi_i)
    return BoxCover(breakpoints=np.array(new_cuts),
                    y_lo=np.array(new_lo), y_hi=np.array(new_hi))


# ---------------------------------------------------------------------------
# grid-restricted exact oracle


@dataclass(frozen=True)
class GridSamples:
    """One-sided limits of a monotone f sampled on a fixed grid.

    Built from exact metadata so that value bands of candidate boxes are the
    tightest valid ones (the infimum just right of a cut, the supremum just
    left of the next).  On grids containing every breakpoint of a
    piecewise-constant or piecewise-affine f, covers built from these bands
    are exact, which is what the acceptance checks rely on.
    """

    x: np.ndarray
    f_left: np.ndarray
    f_right: np.ndarray

    @classmethod
    def from_oracle(cls, f: FunctionOracle, grid) -> "GridSamples":
        if f.meta is None:
            raise CoverError("grid sampling needs exact metadata")
        xs = np.unique(np.asarray(grid, dtype=float))
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise CoverError("grid must contain 0 and 1")
        lefts, rights = [], []
        for x in xs:
            l, r = f.meta.limits_at(float(x))
            lefts.append(l)
            rights.append(r)
        return cls(x=xs, f_left=np.array(lefts), f_right=np.array(rights))


def breakpoint_grid(f: FunctionOracle, n: int = 257) -> np.ndarray:
    """Uniform n-point grid merged with the function's own breakpoints."""
    pts = np.linspace(0.0, 1.0, n)
    if f.meta is not None:
        pts = np.concatenate([pts, f.meta.breakpoints])
    return np.unique(pts)


MAX_GRID = 520


def _cost_matrix(g: GridSamples, p: int, m: Measure) -> np.ndarray:
    """W[i, j] = (tightest band height of piece (x_i, x_j))^p * mass."""
    n = len(g.x)
    cum = m.cdf_left(g.x)
    atom = m.mass_at(g.x)
    mass = cum[None, :] - cum[:, None] - atom[:, None]
    np.clip(mass, 0.0, None, out=mass)
    height = g.f_left[None, :] - g.f_right[:, None]
    np.clip(height, 0.0, None, out=height)
    w = height
    for _ in range(p - 1):
        w = w * height
    return w * mass


def oracle_N(g: GridSamples, eps: float, p: int, m: Measure,
             mode: str = "total") -> int:
    """Minimum box count over covers with breakpoints restricted to the grid.

    mode="total" minimizes the box count subject to sum(area^p) <= eps^p via
    dynamic programming over (grid cut, boxes used); mode="per_box" caps each
    area at eps using the greedy farthest-reach sweep, which is optimal for
    interval covering.  Counts are upper bounds on the unrestricted optima
    (exact when the optimal cuts lie on the grid).
    """
    if eps <= 0.0:
        raise CoverError("eps must be positive")
    n = len(g.x)
    if n > MAX_GRID:
        raise GridTooLargeError(f"grid has {n} points, cap is {MAX_GRID}")
    if n < 2:
        raise CoverError("grid needs at least two points")
    eps_p = _powi(float(eps), p) + 1e-15

    w = _cost_matrix(g, p, m)
    last = n - 1

    if mode == "per_box":
        count = 0
        i = 0
        while i < last:
            # farthest j with a per-box area below the cap
            row = w[i, i + 1:]
            ok = row <= eps_p
            if not ok[0]:
                raise CoverError(
                    f"grid cell ({g.x[i]}, {g.x[i+1]}) exceeds the cap; "
                    "refine the grid or raise eps")
            j_rel = int(np.nonzero(ok)[0][-1]) if ok.all() else int(np.argmin(ok) - 1)
            i = i + 1 + j_rel
            count += 1
        return count

    if mode != "total":
        raise CoverError(f"unknown mode {mode!r}")

    inf = np.inf
    w_fwd = w.copy()
    w_fwd[np.tril_indices(n)] = inf  # only forward cuts i < j are real boxes
    dp = np.full(n, inf)
    dp[0] = 0.0
    for count in range(1, n):
        # dp_new[j] = min cost of covering [0, x_j] with exactly `count` boxes
        dp = (dp[:, None] + w_fwd).min(axis=0)
        if dp[last] <= eps_p:
            return count
    raise CoverError("no grid cover satisfies the budget; refine the grid")
