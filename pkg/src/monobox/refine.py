"""Greedy interval refinement with an observable error certificate.

The engine maintains a chain of boxes bracketing a non-decreasing function
between its sampled values.  Each step selects one box by a policy (largest
generalized area, largest width, or alternating), evaluates the function at
the conditional median of the box's x-extent, and replaces the box by two.
The certificate ``xi = sum(area_k^p)`` bounds the p-th power of the Lp(mu)
error of the piecewise-affine interpolant through the samples, so a run can
stop the moment ``xi <= eps^p`` and honestly report eps-accuracy.

Two interchangeable engines execute the loop: a compiled kernel (module
``monobox._engine_cy``) and the portable implementation in this file.  The
compiled one is selected at import time when present; set
``MONOBOX_BACKEND=python`` or ``MONOBOX_BACKEND=compiled`` to force a choice.
Both produce bit-identical runs.
"""

from __future__ import annotations

import heapq
import math
import os
from bisect import insort
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .funcs import FunctionOracle, OracleValueError
from .measure import Measure

DEFAULT_MAX_ITERS = 1_000_000
RECOMPUTE_EVERY = 1024  # full certificate refresh bounds float drift

_MODE_EPS, _MODE_BUDGET, _MODE_STOCH = 0, 1, 2
_STOP_REASONS = {
    0: "certificate",
    1: "budget",
    2: "max_iters",
    3: "certificate_zero",
    4: "resolution_exhausted",
}


class ResolutionExhaustedError(RuntimeError):
    """A selected box cannot be split at floating-point resolution."""


class SelectionPolicy(Enum):
    LARGEST_AREA = "area"
    LARGEST_WIDTH = "width"
    ALTERNATE_WIDTH_AREA = "alternate"

    @classmethod
    def parse(cls, name) -> "SelectionPolicy":
        if isinstance(name, cls):
            return name
        for member in cls:
            if member.value == str(name).strip().lower():
                return member
        raise ValueError(f"unknown policy {name!r}; use area|width|alternate")


def _powi(x: float, p: int) -> float:
    r = 1.0
    for _ in range(p):
        r *= x
    return r


# ---------------------------------------------------------------------------
# results


@dataclass
class PiecewiseLinearEstimator:
    """Piecewise-affine interpolant of the observed points, non-decreasing."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if len(b) != len(v) or len(b) < 2:
            raise ValueError("need matching breakpoints/values, at least two")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_b_list", b.tolist())

    def __call__(self, x):
        if np.ndim(x) != 0:
            return np.interp(np.asarray(x, dtype=float),
                             self.breakpoints, self.values)
        return evaluate_estimator(self, float(x))

    def __len__(self):
        return len(self.breakpoints)


def evaluate_estimator(e: PiecewiseLinearEstimator, x: float) -> float:
    """Exact chord interpolation at x via binary search over breakpoints."""
    b, v = e.breakpoints, e.values
    if not b[0] <= x <= b[-1]:
        raise ValueError(f"{x} outside [{b[0]}, {b[-1]}]")
    k = int(np.searchsorted(b, x, side="right"))
    if k == len(b):  # x == right endpoint
        return float(v[-1])
    k = max(k, 1)
    b0, b1 = float(b[k - 1]), float(b[k])
    v0, v1 = float(v[k - 1]), float(v[k])
    if x == b0:
        return v0
    return (v1 - v0) / (b1 - b0) * (x - b0) + v0


@dataclass
class RunTrace:
    """Per-state record of a refinement run.

    Entry j (0-based) describes state t = j + 1: ``xi[j]`` is the certificate
    after j splits, ``x_new[j]`` the evaluation that created the state (NaN
    for the initial state) and ``selected_lo[j]`` the left edge of the box
    that was split.  ``sumsq[j]`` carries the sum of squared p=1 areas for
    the stochastic stopping rule.
    """

    policy: str
    p: int
    eps: float | None
    stop_reason: str
    x_new: np.ndarray
    selected_lo: np.ndarray
    xi: np.ndarray
    sumsq: np.ndarray
    true_error_pow: np.ndarray | None = None

    @property
    def tau(self) -> int:
        return len(self.xi)

    @property
    def evaluations(self) -> int:
        return self.tau + 1

    def selected_index(self, t: int) -> int:
        """1-based rank of the box split at state t among the t boxes."""
        if not 1 <= t < self.tau:
            raise ValueError("no split happened at that state")
        pts = [0.0, 1.0]
        for j in range(1, t):
            insort(pts, float(self.x_new[j]))
        lo = float(self.selected_lo[t])
        return pts.index(lo) + 1


# ---------------------------------------------------------------------------
# portable engine


class CoverState:
    """Mutable engine state: boxes, two lazy max-heaps and the certificate.

    Boxes are append-only; a split marks the parent dead and pushes two
    children, and stale heap entries are discarded on pop.  Heap keys are
    ``(-score, left_edge, id)`` so ties go to the leftmost box,
    deterministically.
    """

    __slots__ = ("f", "p", "measure", "lo", "hi", "flo", "fhi", "apow", "wid",
                 "alive", "heap_area", "heap_wid", "xi", "sumsq", "n_pos",
                 "t", "splits_since", "trace_x", "trace_sel", "trace_xi",
                 "trace_sq")

    def __init__(self, f: FunctionOracle, p: int, measure: Measure):
        if int(p) != p or p < 1:
            raise ValueError("p must be an integer >= 1")
        self.f = f
        self.p = int(p)
        self.measure = measure
        f0 = f(0.0)
        f1 = f(1.0)
        if f1 < f0:
            raise OracleValueError(f"f(1) = {f1} below f(0) = {f0}")
        mass = measure.mass_open(0.0, 1.0)
        apow = _powi(f1 - f0, self.p) * mass
        self.lo = [0.0]
        self.hi = [1.0]
        self.flo = [f0]
        self.fhi = [f1]
        self.apow = [apow]
        self.wid = [mass]
        self.alive = [True]
        self.heap_area = [(-apow, 0.0, 0)]
        self.heap_wid = [(-mass, 0.0, 0)]
        self.xi = apow
        self.sumsq = apow * apow
        self.n_pos = 1 if apow > 0.0 else 0
        self.t = 1
        self.splits_since = 0
        self.trace_x = [math.nan]
        self.trace_sel = [math.nan]
        self.trace_xi = [self.xi]
        self.trace_sq = [self.sumsq]

    # -- selection -----------------------------------------------------

    def _use_width(self, policy: SelectionPolicy) -> bool:
        if policy is SelectionPolicy.LARGEST_WIDTH:
            return True
        if policy is SelectionPolicy.ALTERNATE_WIDTH_AREA:
            return self.t % 2 == 0
        return False

    def _pop_target(self, use_width: bool) -> int:
        heap = self.heap_wid if use_width else self.heap_area
        while heap:
            _, _, idx = heapq.heappop(heap)
            if self.alive[idx]:
                return idx
        raise RuntimeError("heap exhausted; state is corrupt")

    def peek_max_area(self) -> float:
        """Largest generalized area^p among live boxes (debug/verification)."""
        heap = self.heap_area
        while heap and not self.alive[heap[0][2]]:
            heapq.heappop(heap)
        return -heap[0][0] if heap else 0.0

    # -- splitting -----------------------------------------------------

    def step(self, policy: SelectionPolicy = SelectionPolicy.LARGEST_AREA):
        """Split one box: one new evaluation, incremental certificate update.

        Raises ResolutionExhaustedError when the selected box has no interior
        floating-point point left, and ValueError when an area policy is
        asked to split while every box has zero generalized area.
        """
        policy = SelectionPolicy.parse(policy)
        use_width = self._use_width(policy)
        if not use_width and self.n_pos == 0:
            raise ValueError("certificate is zero; nothing to split by area")
        idx = self._pop_target(use_width)
        self._split(idx)
        return self

    def _split(self, idx: int) -> None:
        f, p, m = self.f, self.p, self.measure
        a, b = self.lo[idx], self.hi[idx]
        fa, fb = self.flo[idx], self.fhi[idx]
        med = m.conditional_median(a, b)
        if not a < med < b:
            med = 0.5 * (a + b)
        if not a < med < b:
            raise ResolutionExhaustedError(
                f"box [{a}, {b}] at t={self.t} has no interior point left")
        fm = f(med)
        if fm < fa - 1e-12 or fm > fb + 1e-12:
            raise OracleValueError(
                f"{f.name}({med}) = {fm} breaks monotonicity on "
                f"[{a}, {b}] -> [{fa}, {fb}]")
        fm = min(max(fm, fa), fb)  # keep observed values exactly sorted

        mass1 = m.mass_open(a, med)
        mass2 = m.mass_open(med, b)
        apow1 = _powi(fm - fa, p) * mass1
        apow2 = _powi(fb - fm, p) * mass2
        parent_apow = self.apow[idx]

        self.alive[idx] = False
        i1 = len(self.lo)
        self.lo.append(a)
        self.hi.append(med)
        self.flo.append(fa)
        self.fhi.append(fm)
        self.apow.append(apow1)
        self.wid.append(mass1)
        self.alive.append(True)
        i2 = i1 + 1
        self.lo.append(med)
        self.hi.append(b)
        self.flo.append(fm)
        self.fhi.append(fb)
        self.apow.append(apow2)
        self.wid.append(mass2)
        self.alive.append(True)

        heapq.heappush(self.heap_area, (-apow1, a, i1))
        heapq.heappush(self.heap_area, (-apow2, med, i2))
        heapq.heappush(self.heap_wid, (-mass1, a, i1))
        heapq.heappush(self.heap_wid, (-mass2, med, i2))

        if parent_apow > 0.0:
            self.n_pos -= 1
        if apow1 > 0.0:
            self.n_pos += 1
        if apow2 > 0.0:
            self.n_pos += 1

        delta = (apow1 + apow2) - parent_apow
        self.xi = self.xi + delta
        dsq = (apow1 * apow1 + apow2 * apow2) - parent_apow * parent_apow
        self.sumsq = self.sumsq + dsq
        self.t += 1
        self.splits_since += 1
        if self.splits_since == RECOMPUTE_EVERY:
            self._recompute()

        self.trace_x.append(med)
        self.trace_sel.append(a)
        self.trace_xi.append(self.xi)
        self.trace_sq.append(self.sumsq)

    def _recompute(self) -> None:
        xi = 0.0
        sq = 0.0
        for i in range(len(self.apow)):
            if self.alive[i]:
                ap = self.apow[i]
                xi += ap
                sq += ap * ap
        self.xi = xi
        self.sumsq = sq
        self.splits_since = 0

    def recomputed_certificate(self) -> float:
        """From-scratch certificate, for drift checks."""
        return math.fsum(self.apow[i] for i in range(len(self.apow))
                         if self.alive[i])

    # -- extraction ------------------------------------------------------

    def _sorted_alive(self):
        ids = [i for i in range(len(self.lo)) if self.alive[i]]
        ids.sort(key=lambda i: self.lo[i])
        return ids

    def estimator(self) -> PiecewiseLinearEstimator:
        ids = self._sorted_alive()
        breaks = [self.lo[i] for i in ids] + [1.0]
        vals = [self.flo[i] for i in ids] + [self.fhi[ids[-1]]]
        return PiecewiseLinearEstimator(np.array(breaks), np.array(vals))

    def boxes(self):
        """Live boxes in left-to-right order as (lo, hi, flo, fhi) tuples."""
        return [(self.lo[i], self.hi[i], self.flo[i], self.fhi[i])
                for i in self._sorted_alive()]

    @property
    def evaluations(self) -> int:
        return self.t + 1


def init(f: FunctionOracle, p: int, m: Measure) -> CoverState:
    """Evaluate f at 0 and 1 and start the certificate at (f(1)-f(0))^p * mass."""
    return CoverState(f, p, m)


def step(s: CoverState, policy=SelectionPolicy.LARGEST_AREA) -> CoverState:
    return s.step(policy)


# ---------------------------------------------------------------------------
# run drivers


def _drive_python(state: CoverState, policy: SelectionPolicy, mode: int,
                  eps_p: float, eps2: float, t_target: int, max_iters: int,
                  meter=None):
    """Portable run loop; mirrors the compiled kernel decision-for-decision."""
    err_by_box = None
    err_hist = None
    if meter is not None:
        e0 = meter.box_error_pow(0.0, 1.0)
        err_by_box = {0: e0}
        err_hist = [e0]
        err_total = e0
    while True:
        if mode == _MODE_EPS and state.xi <= eps_p:
            status = 0
            break
        if mode == _MODE_STOCH and 0.25 * state.sumsq <= eps2:
            status = 0
            break
        if mode == _MODE_BUDGET and state.t >= t_target:
            status = 1
            break
        if state.n_pos == 0:
            status = 3
            break
        if mode != _MODE_BUDGET and state.t >= max_iters:
            status = 2
            break
        use_width = state._use_width(policy)
        idx = state._pop_target(use_width)
        try:
            state._split(idx)
        except ResolutionExhaustedError:
            status = 4
            break
        if meter is not None:
            i2 = len(state.lo) - 1
            i1 = i2 - 1
            e1 = meter.box_error_pow(state.lo[i1], state.hi[i1])
            e2 = meter.box_error_pow(state.lo[i2], state.hi[i2])
            err_total = err_total + ((e1 + e2) - err_by_box.pop(idx))
            err_by_box[i1] = e1
            err_by_box[i2] = e2
            err_hist.append(err_total)
    return status, err_hist


def _select_backend(backend):
    if backend in ("python", "portable"):
        return None
    forced = os.environ.get("MONOBOX_BACKEND", "").strip().lower()
    if backend is None and forced in ("python", "portable"):
        return None
    try:
        from . import _engine_cy
    except ImportError:
        _engine_cy = None
    if backend in ("compiled", "c", "fast") or forced in ("compiled", "c", "fast"):
        if _engine_cy is None:
            raise RuntimeError("compiled engine requested but not built")
        return _engine_cy
    return _engine_cy


def backend_name() -> str:
    """Which engine runs by default: 'compiled' or 'python'."""
    return "compiled" if _select_backend(None) is not None else "python"


def _run(f, p, m, policy, mode, eps, eps_p, eps2, t_target, max_iters,
         true_error=None, on_resolution="raise", backend=None):
    policy = SelectionPolicy.parse(policy)
    engine = None if true_error is not None else _select_backend(backend)
    policy_code = {SelectionPolicy.LARGEST_AREA: 0,
                   SelectionPolicy.LARGEST_WIDTH: 1,
                   SelectionPolicy.ALTERNATE_WIDTH_AREA: 2}[policy]
    err_hist = None
    if engine is None:
        state = CoverState(f, p, m)
        try:
            status, err_hist = _drive_python(
                state, policy, mode, eps_p, eps2, t_target, max_iters,
                meter=true_error)
        except ResolutionExhaustedError:
            if on_resolution == "raise":
                raise
            status = 4
        trace_x = np.array(state.trace_x)
        trace_sel = np.array(state.trace_sel)
        trace_xi = np.array(state.trace_xi)
        trace_sq = np.array(state.trace_sq)
        estimator = state.estimator()
    else:
        pl, ph, pd, pc, ax, aw, ac = m.kernel_arrays()
        f0 = f(0.0)
        f1 = f(1.0)
        if f1 < f0:
            raise OracleValueError(f"f(1) = {f1} below f(0) = {f0}")
        out = engine.run_loop(f, pl, ph, pd, pc, ax, aw, ac,
                              int(p), policy_code, mode, eps_p, eps2,
                              t_target, max_iters, f0, f1)
        (status, breaks, vals, trace_x, trace_sel, trace_xi, trace_sq) = out
        if status == 4 and on_resolution == "raise":
            raise ResolutionExhaustedError(
                f"box split impossible at t={len(trace_xi)}")
        estimator = PiecewiseLinearEstimator(breaks, vals)
    trace = RunTrace(
        policy=policy.value, p=int(p), eps=eps,
        stop_reason=_STOP_REASONS[status],
        x_new=trace_x, selected_lo=trace_sel, xi=trace_xi, sumsq=trace_sq,
        true_error_pow=None if err_hist is None else np.array(err_hist))
    return trace, estimator


def run(f: FunctionOracle, eps: float, p: int, m: Measure,
        policy=SelectionPolicy.LARGEST_AREA, max_iters: int = DEFAULT_MAX_ITERS,
        true_error=None, on_resolution: str = "raise", backend=None):
    """Refine until the certificate drops to eps^p; the stopping time is tau.

    Returns ``(RunTrace, PiecewiseLinearEstimator)``.  Hitting ``max_iters``
    flags the trace instead of raising.  ``true_error`` may be a metering
    object with a ``box_error_pow(a, b)`` method (see metrics); metering
    forces the portable engine so the trace gains a true-error column.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    return _run(f, p, m, policy, _MODE_EPS, eps, _powi(float(eps), int(p)),
                0.0, 0, max_iters, true_error, on_resolution, backend)


def run_fixed_budget(f: FunctionOracle, t_target: int, p: int, m: Measure,
                     policy=SelectionPolicy.LARGEST_AREA, true_error=None,
                     on_resolution: str = "raise", backend=None):
    """Refine for a fixed number of boxes (evaluations = t_target + 1).

    Stops early with reason ``certificate_zero`` once every box has zero
    generalized area; from that point the interpolant can no longer change
    measurably and extra splits would be bookkeeping noise.
    """
    if t_target < 1:
        raise ValueError("t_target must be >= 1")
    return _run(f, p, m, policy, _MODE_BUDGET, None, 0.0, 0.0, int(t_target),
                DEFAULT_MAX_ITERS, true_error, on_resolution, backend)


def uniform_trapezoid(f: FunctionOracle, t: int) -> PiecewiseLinearEstimator:
    """Offline uniform trapezoidal estimator: t pieces, t + 1 evaluations.

    The width-greedy online policy reproduces this exactly whenever t is a
    power of two; for other budgets this is the classic fixed-grid baseline.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    xs = np.linspace(0.0, 1.0, t + 1)
    vals = np.array([f(float(x)) for x in xs])
    return PiecewiseLinearEstimator(xs, vals)


def run_stochastic_phase(f: FunctionOracle, eps: float, m: Measure,
                         max_iters: int = DEFAULT_MAX_ITERS, backend=None):
    """Deterministic phase of the randomized integrator: p=1 areas, stop when
    sqrt(sum of squared areas)/2 falls to eps.  Returns (trace, estimator,
    state boxes) via the same engines as the other drivers."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    return _run(f, 1, m, SelectionPolicy.LARGEST_AREA, _MODE_STOCH, eps,
                0.0, float(eps) * float(eps), 0, max_iters, None, "raise",
                backend)
