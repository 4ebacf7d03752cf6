import numpy as np
import pytest

from monobox import funcs, measure

SUITE_NAMES = ("square", "power_tenth", "step_03", "fig2_composite", "identity")


@pytest.fixture
def leb():
    return measure.lebesgue()


@pytest.fixture
def twopc():
    return measure.two_piece()


@pytest.fixture
def atomic():
    # one interior atom plus a flat density: exercises every atom code path
    return measure.Measure(density_pieces=((0.0, 1.0, 0.5),),
                           atoms=((0.3, 0.5),))


def suite_oracles():
    """Fresh catalog oracles plus the k=2 worst case."""
    oracles = [funcs.catalog(n) for n in SUITE_NAMES]
    oracles.append(funcs.worst_case_f(funcs.OscillatorParams(2)))
    return oracles


def riemann_lp_pow(fa, fb, p, m: measure.Measure, n: int = 200001) -> float:
    """Independent midpoint-Riemann oracle for integral |fa - fb|^p d(mu).

    Deliberately avoids the package quadrature: plain midpoint sums over the
    density pieces plus explicit atom terms.  Accuracy is O(1/n) near kinks,
    good enough for the tolerances the tests assert.
    """
    total = 0.0
    for lo, hi, d in m.density_pieces:
        if d <= 0.0:
            continue
        xs = np.linspace(lo, hi, n)
        mids = 0.5 * (xs[1:] + xs[:-1])
        vals = np.array([abs(fa(float(x)) - fb(float(x))) ** p for x in mids])
        total += d * float(np.sum(vals)) * (hi - lo) / (n - 1)
    for x, w in m.atoms:
        total += w * abs(fa(float(x)) - fb(float(x))) ** p
    return total
