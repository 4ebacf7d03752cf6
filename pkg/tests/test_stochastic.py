import numpy as np
import pytest

from conftest import riemann_lp_pow
from monobox import funcs, metrics, stochastic
from monobox.refine import PiecewiseLinearEstimator
from monobox.stochastic import (deterministic_integral, replicate,
                                run_integral)


def test_constant_zero_variance(leb):
    runs = replicate(funcs.catalog("constant(0.5)"), 0.01, leb, range(20))
    assert all(r.estimate == 0.5 for r in runs)
    assert runs[0].tau == 1
    assert runs[0].certificate == 0.0


def test_identity_tau_at_five_percent(leb):
    # hand walk of the squared-area certificate on the identity:
    #   t=4 (quarters):        sqrt(4/16^2)/2   = 1/16      > 0.05
    #   t=5 (split [0,1/4]):   sqrt(50/4096)/2  = 0.05524   > 0.05
    #   t=6 (split [1/4,1/2]): sqrt(36/4096)/2  = 0.046875 <= 0.05
    r = run_integral(funcs.catalog("identity"), 0.05, leb, seed=0)
    assert r.tau == 6
    assert r.certificate == pytest.approx(0.046875, abs=1e-15)
    assert r.certificate <= 0.05


def test_certificate_at_stop(leb, twopc):
    for m in (leb, twopc):
        for eps in (0.1, 0.03):
            r = run_integral(funcs.catalog("fig2_composite"), eps, m, seed=3)
            assert r.certificate <= eps
            assert r.tau + 1 + len(r.samples) == r.evaluations
            assert len(r.samples) <= r.tau
            assert 0.0 <= r.estimate <= 1.0


def test_deterministic_phase_seed_independent(leb):
    r1 = run_integral(funcs.catalog("identity"), 0.02, leb, seed=1)
    r2 = run_integral(funcs.catalog("identity"), 0.02, leb, seed=999)
    assert np.array_equal(r1.estimator.breakpoints, r2.estimator.breakpoints)
    assert r1.certificate == r2.certificate
    assert not np.array_equal(r1.samples, r2.samples)


def test_same_seed_reproducible(leb):
    r1 = run_integral(funcs.catalog("square"), 0.05, leb, seed=42)
    r2 = run_integral(funcs.catalog("square"), 0.05, leb, seed=42)
    assert np.array_equal(r1.samples, r2.samples)
    assert r1.estimate == r2.estimate


def test_replicate_matches_individual_runs(leb):
    f = funcs.catalog("identity")
    batch = replicate(f, 0.05, leb, [7, 8])
    singles = [run_integral(funcs.catalog("identity"), 0.05, leb, seed=s)
               for s in (7, 8)]
    for b, s in zip(batch, singles):
        assert b.estimate == s.estimate
        assert np.array_equal(b.samples, s.samples)


def test_unbiased_mean_identity(leb):
    runs = replicate(funcs.catalog("identity"), 0.05, leb, range(2000))
    est = np.array([r.estimate for r in runs])
    se = est.std(ddof=1) / np.sqrt(len(est))
    assert abs(est.mean() - 0.5) < 3 * se
    # mean absolute deviation honors the certificate
    assert np.mean(np.abs(est - 0.5)) <= runs[0].certificate


def test_variance_bound(leb):
    runs = replicate(funcs.catalog("fig2_composite"), 0.05, leb, range(2000))
    est = np.array([r.estimate for r in runs])
    # Var(I_hat) <= sum(a_k^2)/4 = certificate^2
    bound = runs[0].certificate ** 2
    var = est.var(ddof=1)
    slack = 3.0 * var / np.sqrt(len(est))
    assert var <= bound + slack


def test_atoms_enter_estimate():
    m = stochastic.Measure(density_pieces=((0.0, 1.0, 0.5),),
                           atoms=((0.5, 0.5),))
    runs = replicate(funcs.catalog("identity"), 0.02, m, range(500))
    exact = metrics.reference_integral(funcs.catalog("identity"), m)
    est = np.array([r.estimate for r in runs])
    se = est.std(ddof=1) / np.sqrt(len(est))
    assert abs(est.mean() - exact) < 4 * se + 1e-12


def test_deterministic_integral_closed_forms(leb, twopc, atomic):
    chord = PiecewiseLinearEstimator(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert deterministic_integral(chord, leb) == pytest.approx(0.5, abs=1e-15)
    flat = PiecewiseLinearEstimator(np.array([0.0, 1.0]), np.array([0.3, 0.3]))
    assert deterministic_integral(flat, twopc) == pytest.approx(0.3, abs=1e-15)
    # two_piece: 0.5*int_0^.5 x dx + 1.5*int_.5^1 x dx
    assert deterministic_integral(chord, twopc) == pytest.approx(
        0.5 * 0.125 + 1.5 * 0.375, abs=1e-15)
    # atom at 0.3 reads the interpolant pointwise
    assert deterministic_integral(chord, atomic) == pytest.approx(
        0.5 * 0.5 + 0.5 * 0.3, abs=1e-15)


def test_deterministic_integral_vs_quadrature(twopc):
    rng = np.random.default_rng(9)
    cuts = np.unique(np.concatenate([[0.0, 1.0], rng.random(7)]))
    vals = np.sort(rng.random(len(cuts)))
    est = PiecewiseLinearEstimator(cuts, vals)
    direct = deterministic_integral(est, twopc)
    zero = funcs.catalog("constant(0.0)")
    rough = riemann_lp_pow(est, zero.meta.value, 1, twopc, n=400001)
    assert direct == pytest.approx(rough, abs=1e-6)
