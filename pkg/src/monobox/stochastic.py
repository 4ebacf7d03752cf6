"""Randomized integral estimation with a variance-based certificate.

The deterministic phase refines exactly like the p=1 greedy engine but stops
once half the root of the summed squared areas falls below eps; the random
phase then draws one conditionally-distributed point per positive-mass box
and forms the stratified estimate.  Sampling at the end (rather than as
boxes appear) matches the analyzed estimator, and one independent RNG stream
per stratum keeps every draw reproducible regardless of iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .funcs import FunctionOracle, OracleValueError
from .measure import Measure
from .refine import (PiecewiseLinearEstimator, RunTrace, evaluate_estimator,
                     run_stochastic_phase)


@dataclass
class IntegralRun:
    """One randomized integration run: phase trace, draws and the estimate."""

    seed: int
    tau: int
    evaluations: int
    estimate: float
    certificate: float
    stop_reason: str
    samples: np.ndarray          # one draw per positive-mass stratum
    strata: np.ndarray           # 1-based stratum indices that were sampled
    trace: RunTrace
    estimator: PiecewiseLinearEstimator


def stochastic_certificate(trace: RunTrace, t: int | None = None) -> float:
    """Half the root of the summed squared p=1 areas at state t (default: last)."""
    idx = (trace.tau if t is None else t) - 1
    return 0.5 * float(np.sqrt(max(trace.sumsq[idx], 0.0)))


def _sample_phase(f: FunctionOracle, m: Measure, trace: RunTrace,
                  est: PiecewiseLinearEstimator, seed: int) -> IntegralRun:
    b = est.breakpoints
    v = est.values
    tau = len(b) - 1
    masses = np.array([m.mass_open(float(b[k - 1]), float(b[k]))
                       for k in range(1, tau + 1)])
    streams = np.random.SeedSequence(seed).spawn(tau)
    total = 0.0
    samples, strata = [], []
    for k in range(1, tau + 1):
        mass = float(masses[k - 1])
        if mass <= 0.0:
            continue
        rng = np.random.default_rng(streams[k - 1])
        x = m.sample_conditional(float(b[k - 1]), float(b[k]), rng)
        fx = f(x)
        if fx < v[k - 1] - 1e-12 or fx > v[k] + 1e-12:
            raise OracleValueError(
                f"{f.name}({x}) = {fx} breaks monotonicity inside stratum {k}")
        total += mass * fx
        samples.append(x)
        strata.append(k)
    for k in range(0, tau + 1):
        w = m.mass_at(float(b[k]))
        if w > 0.0:
            total += w * float(v[k])
    return IntegralRun(
        seed=seed, tau=tau, evaluations=tau + 1 + len(samples),
        estimate=total, certificate=stochastic_certificate(trace),
        stop_reason=trace.stop_reason,
        samples=np.array(samples), strata=np.array(strata, dtype=int),
        trace=trace, estimator=est)


def run_integral(f: FunctionOracle, eps: float, m: Measure,
                 seed: int = 0) -> IntegralRun:
    """Full randomized run: refine until the certificate reaches eps, then
    draw one point per surviving stratum and average."""
    trace, est = run_stochastic_phase(f, eps, m)
    return _sample_phase(f, m, trace, est, seed)


def replicate(f: FunctionOracle, eps: float, m: Measure, seeds) -> list:
    """Monte Carlo replications sharing one deterministic phase.

    The refinement queries are seed-independent, so the phase runs once and
    only the sampling is repeated; results are identical to independent
    run_integral calls with the same seeds.
    """
    trace, est = run_stochastic_phase(f, eps, m)
    return [_sample_phase(f, m, trace, est, int(s)) for s in seeds]


def deterministic_integral(e: PiecewiseLinearEstimator, m: Measure) -> float:
    """Exact integral of a piecewise-affine estimator against the measure.

    Chords integrate to trapezoids against constant densities; atoms read
    the interpolant pointwise.
    """
    pts = np.unique(np.concatenate([e.breakpoints, m.boundary_points()]))
    total = 0.0
    for u, v in zip(pts, pts[1:]):
        u, v = float(u), float(v)
        d = m.density_at(0.5 * (u + v))
        if v > u and d > 0.0:
            total += d * (v - u) * 0.5 * (evaluate_estimator(e, u)
                                          + evaluate_estimator(e, v))
    for x, w in m.atoms:
        if w > 0.0:
            total += w * evaluate_estimator(e, float(x))
    return total
