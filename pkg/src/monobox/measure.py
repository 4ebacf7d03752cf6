"""Probability measures on [0, 1]: piecewise-constant densities plus point atoms.

This representation covers the Lebesgue measure, every measure used by the
experiment harness, and still exercises the general-measure code paths
(conditional medians that are not midpoints, intervals of zero mass, atoms).
All queries are answered in closed form; no root finding is involved.

Open-interval semantics matter throughout: ``mass_open(a, b)`` is the mass of
``(a, b)``, so atoms sitting exactly at ``a`` or ``b`` do not count.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

MASS_TOL = 1e-12


class MeasureError(ValueError):
    """Invalid measure definition or out-of-range query."""


class DegenerateIntervalError(MeasureError):
    """Conditional quantile requested on an interval of zero mass."""


def _check_point(x: float, name: str = "point") -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise MeasureError(f"{name} {x!r} outside [0, 1]")
    return x


@dataclass(frozen=True)
class Measure:
    """A probability measure made of constant-density pieces and atoms.

    ``density_pieces`` is a sequence of ``(lo, hi, density)`` triples with
    pairwise-disjoint interiors; ``atoms`` is a sequence of ``(x, mass)``
    pairs at distinct locations.  Total mass must equal 1 within 1e-12.
    Instances are immutable and safe to share across threads.
    """

    density_pieces: tuple = ()
    atoms: tuple = ()

    # derived sorted arrays, filled in __post_init__
    _p_lo: np.ndarray = field(repr=False, default=None, compare=False)
    _p_hi: np.ndarray = field(repr=False, default=None, compare=False)
    _p_d: np.ndarray = field(repr=False, default=None, compare=False)
    _p_cum: np.ndarray = field(repr=False, default=None, compare=False)
    _a_x: np.ndarray = field(repr=False, default=None, compare=False)
    _a_w: np.ndarray = field(repr=False, default=None, compare=False)
    _a_cum: np.ndarray = field(repr=False, default=None, compare=False)
    _p_lo_list: list = field(repr=False, default=None, compare=False)
    _a_x_list: list = field(repr=False, default=None, compare=False)

    def __post_init__(self):
        pieces = sorted(
            (float(lo), float(hi), float(d)) for lo, hi, d in self.density_pieces
        )
        atoms = sorted((float(x), float(w)) for x, w in self.atoms)
        for lo, hi, d in pieces:
            if not (0.0 <= lo < hi <= 1.0):
                raise MeasureError(f"bad density piece [{lo}, {hi}]")
            if not np.isfinite(d) or d < 0.0:
                raise MeasureError(f"bad density {d}")
        for (_, h1, _), (l2, _, _) in zip(pieces, pieces[1:]):
            if l2 < h1 - 1e-15:
                raise MeasureError("density pieces overlap")
        for x, w in atoms:
            _check_point(x, "atom location")
            if not np.isfinite(w) or w < 0.0:
                raise MeasureError(f"bad atom mass {w}")
        for (x1, _), (x2, _) in zip(atoms, atoms[1:]):
            if x1 == x2:
                raise MeasureError(f"duplicate atom at {x1}")

        p_lo = np.array([p[0] for p in pieces], dtype=float)
        p_hi = np.array([p[1] for p in pieces], dtype=float)
        p_d = np.array([p[2] for p in pieces], dtype=float)
        piece_mass = p_d * (p_hi - p_lo)
        p_cum = np.concatenate([[0.0], np.cumsum(piece_mass)])
        a_x = np.array([a[0] for a in atoms], dtype=float)
        a_w = np.array([a[1] for a in atoms], dtype=float)
        a_cum = np.concatenate([[0.0], np.cumsum(a_w)])

        total = float(p_cum[-1] + a_cum[-1])
        if abs(total - 1.0) > MASS_TOL:
            raise MeasureError(f"total mass {total} != 1")

        object.__setattr__(self, "density_pieces", tuple(pieces))
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "_p_lo", p_lo)
        object.__setattr__(self, "_p_hi", p_hi)
        object.__setattr__(self, "_p_d", p_d)
        object.__setattr__(self, "_p_cum", p_cum)
        object.__setattr__(self, "_a_x", a_x)
        object.__setattr__(self, "_a_w", a_w)
        object.__setattr__(self, "_a_cum", a_cum)
        object.__setattr__(self, "_p_lo_list", p_lo.tolist())
        object.__setattr__(self, "_a_x_list", a_x.tolist())

    # -- basic queries -------------------------------------------------

    def cdf_left(self, x):
        """mu([0, x)): density mass below x plus atoms strictly below x."""
        xs = np.asarray(x, dtype=float)
        if self._p_lo.size:
            idx = np.searchsorted(self._p_lo, xs, side="right") - 1
            idx_c = np.clip(idx, 0, None)
            part = self._p_d[idx_c] * np.clip(
                np.minimum(xs, self._p_hi[idx_c]) - self._p_lo[idx_c], 0.0, None
            )
            dens = np.where(idx >= 0, self._p_cum[idx_c] + part, 0.0)
        else:
            dens = np.zeros_like(xs)
        adx = np.searchsorted(self._a_x, xs, side="left")
        out = dens + self._a_cum[adx]
        return float(out) if np.ndim(x) == 0 else out

    def mass_at(self, x):
        """mu({x})."""
        xs = np.asarray(x, dtype=float)
        if self._a_x.size == 0:
            out = np.zeros_like(xs)
        else:
            i = np.searchsorted(self._a_x, xs, side="left")
            i_c = np.minimum(i, self._a_x.size - 1)
            out = np.where((i < self._a_x.size) & (self._a_x[i_c] == xs),
                           self._a_w[i_c], 0.0)
        return float(out) if np.ndim(x) == 0 else out

    def mass_open(self, a: float, b: float) -> float:
        """mu((a, b)); zero when a == b.  Endpoint atoms are excluded."""
        a = _check_point(a, "a")
        b = _check_point(b, "b")
        if a > b:
            raise MeasureError(f"interval endpoints out of order: {a} > {b}")
        if a == b:
            return 0.0
        return max(0.0, self.cdf_left(b) - self.cdf_left(a) - self.mass_at(a))

    # -- conditional quantiles ------------------------------------------

    def _merged_cuts(self, a: float, b: float) -> list:
        """Sorted positions in (a, b] at which density changes or atoms sit."""
        cuts = []
        i0 = bisect.bisect_right(self._p_lo_list, a)
        for i in range(max(0, i0 - 1), len(self._p_lo_list)):
            if self._p_lo[i] >= b:
                break
            for e in (self._p_lo[i], self._p_hi[i]):
                if a < e < b:
                    cuts.append(float(e))
        j0 = bisect.bisect_right(self._a_x_list, a)
        for j in range(j0, len(self._a_x_list)):
            if self._a_x[j] >= b:
                break
            cuts.append(float(self._a_x[j]))
        cuts.append(b)
        cuts.sort()
        out = []
        for c in cuts:
            if not out or c != out[-1]:
                out.append(c)
        return out

    def density_at(self, x: float) -> float:
        """Density value governing the point x (0 off the pieces)."""
        i = bisect.bisect_right(self._p_lo_list, x) - 1
        if i < 0 or x >= self._p_hi[i]:
            return 0.0
        return float(self._p_d[i])

    def _quantile_walk(self, a: float, b: float, target: float) -> float:
        """Smallest x in [a, b] with mu((a, x]) >= target (0 <= target <= mass)."""
        if target <= 0.0:
            return a
        acc = 0.0
        prev = a
        for cut in self._merged_cuts(a, b):
            d = self.density_at(0.5 * (prev + cut))
            seg = d * (cut - prev)
            if d > 0.0 and acc + seg >= target:
                return prev + (target - acc) / d
            acc += seg
            if cut < b:
                w = self.mass_at(cut)
                if w > 0.0 and acc + w >= target:
                    return cut
                acc += w
            prev = cut
        return b

    def conditional_quantile(self, a: float, b: float, q: float) -> float:
        """Smallest x with mu((a, x]) / mu((a, b)) >= q.

        Raises DegenerateIntervalError when the interval carries no mass;
        callers that can tolerate degenerate intervals should catch it.
        """
        a = _check_point(a, "a")
        b = _check_point(b, "b")
        if a >= b:
            raise MeasureError(f"need a < b, got ({a}, {b})")
        if not 0.0 <= q <= 1.0:
            raise MeasureError(f"quantile level {q} outside [0, 1]")
        total = self.mass_open(a, b)
        if total <= 0.0:
            raise DegenerateIntervalError(f"interval ({a}, {b}) has zero mass")
        return self._quantile_walk(a, b, q * total)

    def conditional_median(self, a: float, b: float) -> float:
        """Lower conditional median of (a, b); midpoint when the mass is zero.

        The midpoint fallback lets refinement policies split intervals the
        measure does not see (such intervals have zero generalized area).
        """
        a = _check_point(a, "a")
        b = _check_point(b, "b")
        if a >= b:
            raise MeasureError(f"need a < b, got ({a}, {b})")
        total = self.mass_open(a, b)
        if total <= 0.0:
            return 0.5 * (a + b)
        return self._quantile_walk(a, b, 0.5 * total)

    def sample_conditional(self, a: float, b: float, rng) -> float:
        """One draw from mu conditioned on (a, b); deterministic given rng."""
        total = self.mass_open(a, b)
        if total <= 0.0:
            raise DegenerateIntervalError(f"interval ({a}, {b}) has zero mass")
        u = rng.random()
        while u == 0.0:
            u = rng.random()
        return self._quantile_walk(a, b, u * total)

    # -- plumbing --------------------------------------------------------

    def kernel_arrays(self):
        """Raw arrays consumed by the compiled refinement kernel."""
        return (self._p_lo, self._p_hi, self._p_d, self._p_cum,
                self._a_x, self._a_w, self._a_cum)

    @property
    def is_atomless(self) -> bool:
        return len(self._a_x) == 0

    def boundary_points(self) -> np.ndarray:
        """Density piece edges and atom locations (for quadrature split sets)."""
        pts = np.concatenate([self._p_lo, self._p_hi, self._a_x])
        return np.unique(pts)


def lebesgue() -> Measure:
    """The uniform measure on [0, 1]."""
    return Measure(density_pieces=((0.0, 1.0, 1.0),))


def two_piece(split: float = 0.5, left_density: float = 0.5,
              right_density: float = 1.5) -> Measure:
    """A simple non-uniform test measure with a density jump at ``split``."""
    return Measure(density_pieces=((0.0, split, left_density),
                                   (split, 1.0, right_density)))


def from_config(spec) -> Measure:
    """Build a measure from a config value.

    Accepts the string ``"lebesgue"``, the string ``"two_piece"`` or a table
    ``{pieces = [[lo, hi, density], ...], atoms = [[x, mass], ...]}``.
    """
    if isinstance(spec, Measure):
        return spec
    if isinstance(spec, str):
        name = spec.strip().lower()
        if name == "lebesgue":
            return lebesgue()
        if name == "two_piece":
            return two_piece()
        raise MeasureError(f"unknown measure name {spec!r}")
    if isinstance(spec, dict):
        pieces = tuple(tuple(p) for p in spec.get("pieces", ()))
        atoms = tuple(tuple(a) for a in spec.get("atoms", ()))
        return Measure(density_pieces=pieces, atoms=atoms)
    raise MeasureError(f"cannot build a measure from {spec!r}")
