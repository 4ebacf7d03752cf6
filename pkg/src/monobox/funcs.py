"""Non-decreasing target functions with evaluation counting and exact metadata.

Each built-in function carries a piecewise description (constant, affine,
power or quadratic pieces) alongside its black-box evaluator.  Refinement
algorithms must only call the evaluator; the metrics module reads the
metadata to integrate true errors exactly.  Keeping the two access paths
separate preserves the information model: an algorithm never learns more
than the values it paid for.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np


class FunctionSpecError(ValueError):
    """Malformed function name or piecewise description."""


class OracleValueError(ValueError):
    """An evaluation left [0, 1] or violated monotonicity."""


# ---------------------------------------------------------------------------
# piecewise metadata


@dataclass(frozen=True)
class Piece:
    """One smooth piece f(x) = c0 + c1*(x - x0)^alpha + c2*(x - x0)^2.

    ``kind`` is one of ``constant``, ``affine``, ``power``, ``quadratic``;
    only the coefficients that the kind uses are meaningful.
    """

    lo: float
    hi: float
    kind: str
    x0: float = 0.0
    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    alpha: float = 1.0

    def value(self, x: float) -> float:
        u = x - self.x0
        if self.kind == "constant":
            return self.c0
        if self.kind == "affine":
            return self.c0 + self.c1 * u
        if self.kind == "power":
            return self.c0 + self.c1 * (u ** self.alpha if u > 0.0 else 0.0)
        if self.kind == "quadratic":
            return self.c0 + u * (self.c1 + self.c2 * u)
        raise FunctionSpecError(f"unknown piece kind {self.kind!r}")

    def antiderivative(self, x: float) -> float:
        """F with F' = value, used for exact integrals against densities."""
        u = x - self.x0
        if self.kind == "constant":
            return self.c0 * x
        if self.kind == "affine":
            return self.c0 * x + 0.5 * self.c1 * u * u
        if self.kind == "power":
            a1 = self.alpha + 1.0
            pw = (u ** a1 if u > 0.0 else 0.0)
            return self.c0 * x + self.c1 * pw / a1
        if self.kind == "quadratic":
            return self.c0 * x + u * u * (0.5 * self.c1 + self.c2 * u / 3.0)
        raise FunctionSpecError(f"unknown piece kind {self.kind!r}")

    def curvature_bound(self):
        """Sup of |f''| on the open piece, or None when unbounded/unknown."""
        if self.kind in ("constant", "affine"):
            return 0.0
        if self.kind == "quadratic":
            return 2.0 * abs(self.c2)
        return None


@dataclass(frozen=True)
class PiecewiseMeta:
    """Exact description: breakpoints, the value owned at each breakpoint,
    and one smooth piece per open interval between breakpoints."""

    breakpoints: np.ndarray
    values: np.ndarray
    pieces: tuple

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or len(b) < 2 or b[0] != 0.0 or b[-1] != 1.0:
            raise FunctionSpecError("breakpoints must run from 0.0 to 1.0")
        if np.any(np.diff(b) <= 0):
            raise FunctionSpecError("breakpoints must be strictly increasing")
        if len(v) != len(b) or len(self.pieces) != len(b) - 1:
            raise FunctionSpecError("values/pieces inconsistent with breakpoints")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "_b_list", b.tolist())

    def value(self, x: float) -> float:
        x = float(x)
        if not 0.0 <= x <= 1.0:
            raise OracleValueError(f"query {x} outside [0, 1]")
        i = bisect_right(self._b_list, x) - 1
        if i >= 0 and x == self._b_list[i]:
            return float(self.values[i])
        return float(self.pieces[i].value(x))

    def right_limit(self, i: int) -> float:
        """lim f(x) as x decreases to breakpoint i."""
        if i == len(self.pieces):
            return float(self.values[-1])
        return float(self.pieces[i].value(self.breakpoints[i]))

    def left_limit(self, i: int) -> float:
        """lim f(x) as x increases to breakpoint i."""
        if i == 0:
            return float(self.values[0])
        return float(self.pieces[i - 1].value(self.breakpoints[i]))

    def limits_at(self, x: float):
        """One-sided limits (from below, from above) of f at x."""
        x = float(x)
        i = bisect_right(self._b_list, x) - 1
        if i >= 0 and x == self._b_list[i]:
            return self.left_limit(i), self.right_limit(i)
        v = float(self.pieces[i].value(x))
        return v, v

    def integral_dx(self, u: float, v: float) -> float:
        """Exact Lebesgue integral of f over [u, v] (breakpoint values ignored)."""
        if v <= u:
            return 0.0
        total = 0.0
        for i, pc in enumerate(self.pieces):
            lo = max(u, float(self.breakpoints[i]))
            hi = min(v, float(self.breakpoints[i + 1]))
            if hi > lo:
                total += pc.antiderivative(hi) - pc.antiderivative(lo)
        return total


class FunctionOracle:
    """A non-decreasing function behind a counting evaluator.

    ``oracle(x)`` evaluates and increments ``calls``; ``oracle.meta`` (when
    present) is the exact piecewise description used only for error metering
    and never consulted by the refinement algorithms.
    """

    def __init__(self, fn, name: str = "custom", meta: PiecewiseMeta | None = None):
        self._fn = fn
        self.name = name
        self.meta = meta
        self.calls = 0

    def __call__(self, x: float) -> float:
        self.calls += 1
        v = float(self._fn(x))
        if not (0.0 <= v <= 1.0) or not math.isfinite(v):
            raise OracleValueError(f"{self.name}({x}) = {v} outside [0, 1]")
        return v

    def fresh(self) -> "FunctionOracle":
        """A new oracle over the same function with a zeroed counter."""
        return FunctionOracle(self._fn, self.name, self.meta)

    def __repr__(self):
        return f"FunctionOracle({self.name!r}, calls={self.calls})"


def _meta_oracle(name: str, meta: PiecewiseMeta) -> FunctionOracle:
    return FunctionOracle(meta.value, name, meta)


def validate_monotone(f: FunctionOracle, n: int = 10001) -> None:
    """Check non-decreasing and [0, 1] range on an n-point grid; raise if not."""
    prev = None
    for x in np.linspace(0.0, 1.0, n):
        v = f.meta.value(float(x)) if f.meta is not None else f._fn(float(x))
        if not (-1e-12 <= v <= 1.0 + 1e-12):
            raise OracleValueError(f"{f.name}({x}) = {v} outside [0, 1]")
        if prev is not None and v < prev - 1e-12:
            raise OracleValueError(f"{f.name} decreases near x = {x}")
        prev = v


# ---------------------------------------------------------------------------
# catalog

_CONST_RE = re.compile(r"^constant\((?P<c>[-+0-9.eE]+)\)$")


def catalog(name: str) -> FunctionOracle:
    """Built-in targets by name.

    ``square``, ``power_tenth``, ``step_03``, ``fig2_composite``,
    ``identity`` and ``constant(c)`` are available; each call returns a fresh
    oracle with its own evaluation counter.
    """
    key = name.strip()
    if key == "square":
        meta = PiecewiseMeta(
            breakpoints=[0.0, 1.0], values=[0.0, 1.0],
            pieces=[Piece(0.0, 1.0, "quadratic", x0=0.0, c2=1.0)])
        return _meta_oracle(key, meta)
    if key == "power_tenth":
        meta = PiecewiseMeta(
            breakpoints=[0.0, 1.0], values=[0.0, 1.0],
            pieces=[Piece(0.0, 1.0, "power", x0=0.0, c1=1.0, alpha=0.1)])
        return _meta_oracle(key, meta)
    if key == "step_03":
        meta = PiecewiseMeta(
            breakpoints=[0.0, 0.3, 1.0], values=[0.0, 1.0, 1.0],
            pieces=[Piece(0.0, 0.3, "constant", c0=0.0),
                    Piece(0.3, 1.0, "constant", c0=1.0)])
        return _meta_oracle(key, meta)
    if key == "fig2_composite":
        knee = 2.0 / 3.0
        meta = PiecewiseMeta(
            breakpoints=[0.0, knee, 1.0],
            values=[0.0, 0.5 * knee ** 0.3, 1.0],
            pieces=[Piece(0.0, knee, "power", x0=0.0, c1=0.5, alpha=0.3),
                    Piece(knee, 1.0, "affine", x0=0.0, c1=1.0)])
        return _meta_oracle(key, meta)
    if key == "identity":
        meta = PiecewiseMeta(
            breakpoints=[0.0, 1.0], values=[0.0, 1.0],
            pieces=[Piece(0.0, 1.0, "affine", x0=0.0, c1=1.0)])
        return _meta_oracle(key, meta)
    m = _CONST_RE.match(key)
    if m:
        c = float(m.group("c"))
        if not 0.0 <= c <= 1.0:
            raise FunctionSpecError(f"constant level {c} outside [0, 1]")
        meta = PiecewiseMeta(
            breakpoints=[0.0, 1.0], values=[c, c],
            pieces=[Piece(0.0, 1.0, "constant", c0=c)])
        return _meta_oracle(key, meta)
    raise FunctionSpecError(f"unknown function {name!r}")


def from_config(spec) -> FunctionOracle:
    """Build an oracle from a config value: a catalog name or a piece table.

    Table form: ``{breakpoints = [0.0, ...], pieces = [{kind, x0, c0, c1,
    c2, alpha}, ...], values = [...]}`` with one piece per gap; ``values``
    defaults to right-limits at each breakpoint.
    """
    if isinstance(spec, FunctionOracle):
        return spec
    if isinstance(spec, str):
        return catalog(spec)
    if isinstance(spec, dict):
        b = [float(x) for x in spec["breakpoints"]]
        pieces = []
        for i, p in enumerate(spec["pieces"]):
            pieces.append(Piece(
                lo=b[i], hi=b[i + 1], kind=str(p["kind"]),
                x0=float(p.get("x0", b[i])), c0=float(p.get("c0", 0.0)),
                c1=float(p.get("c1", 0.0)), c2=float(p.get("c2", 0.0)),
                alpha=float(p.get("alpha", 1.0))))
        if "values" in spec:
            vals = [float(v) for v in spec["values"]]
        else:
            vals = [pieces[0].value(b[0])]
            vals += [pieces[i].value(b[i + 1]) for i in range(len(pieces))]
        meta = PiecewiseMeta(breakpoints=b, values=vals, pieces=pieces)
        oracle = _meta_oracle(str(spec.get("name", "custom")), meta)
        validate_monotone(oracle)
        return oracle
    raise FunctionSpecError(f"cannot build a function from {spec!r}")


# ---------------------------------------------------------------------------
# adversarial constructions


@dataclass(frozen=True)
class OscillatorParams:
    """Scale parameters for the oscillating worst-case family.

    ``k`` fixes the grid: the fast scale has ``s = 2**(3k)`` steps, the slow
    one ``s_prime = 2**(2k)``, and ``t_star = (s + s_prime) // 2`` is the
    refinement budget at which the equal-area cover is reached.
    """

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise FunctionSpecError("k must be a positive integer")

    @property
    def s_prime(self) -> int:
        return 2 ** (2 * self.k)

    @property
    def s(self) -> int:
        return 2 ** (3 * self.k)

    @property
    def t_star(self) -> int:
        return (self.s + self.s_prime) // 2


def oscillator_g(params: OscillatorParams, x: float) -> float:
    """C^1 ramp of alternating parabolic arches with slope bursts.

    On each cell [i/s', (i+1)/s'] the function rises by exactly 1/s'^2, so
    all cell boxes share one generalized area; the arches alternate between
    an upward and a mirrored parabola, meeting with matching derivatives.
    """
    sp = params.s_prime
    if not 0.0 <= x <= 1.0:
        raise OracleValueError(f"query {x} outside [0, 1]")
    inv = 1.0 / sp
    # shift into the base period [0, 2/s'].
    i = int(x * sp / 2.0)
    i = min(i, sp // 2 - 1)
    u = x - 2.0 * i * inv
    offset = 2.0 * i * inv * inv
    if u <= inv:
        return offset + u * u
    w = u - inv
    return offset + (-w * w + 2.0 * inv * w + inv * inv)


def _oscillator_pieces(params: OscillatorParams, x_scale: float, y_scale: float):
    """Quadratic pieces of the oscillator, affinely rescaled.

    Returns breakpoints, values and pieces describing
    x -> y_scale * g(x / x_scale ... ) over [0, x_scale/2]; used by both the
    plain worst-case function (scales 1) and its compressed variant.
    """
    sp = params.s_prime
    inv = 1.0 / sp
    n = sp // 2  # number of arch cells on [0, 1/2]
    breaks, values, pieces = [], [], []
    for i in range(n + 1):
        breaks.append(i * inv * x_scale)
        values.append(i * inv * inv * y_scale)
    for i in range(n):
        node = i * inv
        node_val = i * inv * inv
        if i % 2 == 0:
            c1, c2 = 0.0, 1.0
        else:
            c1, c2 = 2.0 * inv, -1.0
        # rescale: y = ys*(v0 + c1*(x/xs - node) + c2*(x/xs - node)^2)
        pieces.append(Piece(
            lo=breaks[i], hi=breaks[i + 1], kind="quadratic",
            x0=node * x_scale, c0=node_val * y_scale,
            c1=c1 * y_scale / x_scale, c2=c2 * y_scale / (x_scale * x_scale)))
    return breaks, values, pieces


def worst_case_f(params: OscillatorParams) -> FunctionOracle:
    """Oscillating ramp on [0, 1/2] glued to an affine tail on [1/2, 1].

    Every arch cell and every fine cell of the tail spans the same
    generalized area, which makes an area-greedy refiner spread its budget
    across the whole domain while the true error hides in the arches.
    """
    sp = params.s_prime
    breaks, values, pieces = _oscillator_pieces(params, 1.0, 1.0)
    half_val = 0.5 / sp
    breaks.append(1.0)
    values.append(0.5 + half_val)
    pieces.append(Piece(lo=0.5, hi=1.0, kind="affine", x0=0.5, c0=half_val, c1=1.0))
    meta = PiecewiseMeta(breakpoints=breaks, values=values, pieces=pieces)
    return _meta_oracle(f"worst_case_f(k={params.k})", meta)


def experiment_g(params: OscillatorParams) -> FunctionOracle:
    """Compressed worst case with a jump: x -> f(2x)/2 below 1/2, then 1.

    This is the rate-experiment variant; the added discontinuity keeps the
    width-greedy baselines honest.
    """
    sp = params.s_prime
    breaks, values, pieces = _oscillator_pieces(params, 0.5, 0.5)
    quarter_val = 0.25 / sp
    breaks += [0.5, 1.0]
    values += [0.25 + quarter_val, 1.0]
    pieces.append(Piece(lo=0.25, hi=0.5, kind="affine",
                        x0=0.25, c0=quarter_val, c1=1.0))
    pieces.append(Piece(lo=0.5, hi=1.0, kind="constant", c0=1.0))
    meta = PiecewiseMeta(breakpoints=breaks, values=values, pieces=pieces)
    return _meta_oracle(f"experiment_g(k={params.k})", meta)


def params_for_budget(budget: float, exponent: float = 1.0) -> OscillatorParams:
    """Largest k whose natural budget t_star fits within budget**exponent."""
    u = max(2.0, float(budget) ** exponent)
    k = 1
    while OscillatorParams(k + 1).t_star <= u:
        k += 1
    return OscillatorParams(k)


def surrounding_pair(queries, g: FunctionOracle):
    """Step functions (g_minus, g_plus) pinching g given only its queried values.

    g_minus holds the last observed value until the next query point,
    g_plus anticipates it; both agree with g at every query point, and any
    non-decreasing function through the observations lies between them.
    """
    pts = sorted({float(x) for x in queries} | {0.0, 1.0})
    for x in pts:
        if not 0.0 <= x <= 1.0:
            raise FunctionSpecError(f"query point {x} outside [0, 1]")
    vals = [g(x) for x in pts]
    lo_pieces = [Piece(pts[i], pts[i + 1], "constant", c0=vals[i])
                 for i in range(len(pts) - 1)]
    hi_pieces = [Piece(pts[i], pts[i + 1], "constant", c0=vals[i + 1])
                 for i in range(len(pts) - 1)]
    meta_lo = PiecewiseMeta(breakpoints=pts, values=vals, pieces=lo_pieces)
    meta_hi = PiecewiseMeta(breakpoints=pts, values=vals, pieces=hi_pieces)
    return (_meta_oracle(f"{g.name}~lower", meta_lo),
            _meta_oracle(f"{g.name}~upper", meta_hi))
