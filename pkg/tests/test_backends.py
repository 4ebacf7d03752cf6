"""The compiled kernel must reproduce the portable engine bit-for-bit."""

import numpy as np
import pytest

from monobox import funcs, measure, refine

compiled = pytest.importorskip("monobox._engine_cy",
                               reason="compiled engine not built")

MEASURES = {
    "lebesgue": measure.lebesgue(),
    "two_piece": measure.two_piece(),
    "atoms": measure.Measure(density_pieces=((0.0, 1.0, 0.5),),
                             atoms=((0.3, 0.25), (0.7, 0.25))),
    "gappy": measure.Measure(density_pieces=((0.0, 0.25, 2.0), (0.75, 1.0, 2.0))),
}

FUNCTIONS = ("identity", "square", "power_tenth", "step_03", "fig2_composite")


def _pair(name):
    return funcs.catalog(name), funcs.catalog(name)


@pytest.mark.parametrize("mname", sorted(MEASURES))
@pytest.mark.parametrize("fname", FUNCTIONS)
@pytest.mark.parametrize("policy", ["area", "width", "alternate"])
def test_fixed_budget_identical(mname, fname, policy):
    m = MEASURES[mname]
    f1, f2 = _pair(fname)
    t1, e1 = refine.run_fixed_budget(f1, 60, 2, m, policy=policy,
                                     backend="compiled", on_resolution="stop")
    t2, e2 = refine.run_fixed_budget(f2, 60, 2, m, policy=policy,
                                     backend="python", on_resolution="stop")
    assert t1.stop_reason == t2.stop_reason
    assert np.array_equal(e1.breakpoints, e2.breakpoints)
    assert np.array_equal(e1.values, e2.values)
    assert np.array_equal(t1.xi, t2.xi)
    assert np.array_equal(t1.sumsq, t2.sumsq)
    x1, x2 = t1.x_new, t2.x_new
    assert np.array_equal(x1[1:], x2[1:])
    assert np.array_equal(t1.selected_lo[1:], t2.selected_lo[1:])


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("eps", [0.2, 0.04])
def test_eps_runs_identical(p, eps, twopc):
    f1, f2 = _pair("fig2_composite")
    t1, e1 = refine.run(f1, eps, p, twopc, backend="compiled")
    t2, e2 = refine.run(f2, eps, p, twopc, backend="python")
    assert t1.tau == t2.tau
    assert np.array_equal(t1.xi, t2.xi)
    assert np.array_equal(e1.breakpoints, e2.breakpoints)


def test_stochastic_phase_identical(leb):
    f1, f2 = _pair("fig2_composite")
    t1, e1 = refine.run_stochastic_phase(f1, 0.01, leb, backend="compiled")
    t2, e2 = refine.run_stochastic_phase(f2, 0.01, leb, backend="python")
    assert t1.tau == t2.tau
    assert np.array_equal(t1.sumsq, t2.sumsq)
    assert np.array_equal(e1.breakpoints, e2.breakpoints)


def test_long_run_certificate_recompute_identical(leb):
    # crosses the 1024-split refresh boundary on both engines
    f1, f2 = _pair("power_tenth")
    t1, _ = refine.run_fixed_budget(f1, 2500, 1, leb, backend="compiled")
    t2, _ = refine.run_fixed_budget(f2, 2500, 1, leb, backend="python")
    assert np.array_equal(t1.xi, t2.xi)


def test_default_backend_is_compiled():
    assert refine.backend_name() == "compiled"


def test_env_override_forces_python(monkeypatch, leb):
    monkeypatch.setenv("MONOBOX_BACKEND", "python")
    assert refine.backend_name() == "python"
    monkeypatch.delenv("MONOBOX_BACKEND")
    assert refine.backend_name() == "compiled"
