import itertools
import math

import numpy as np
import pytest

from conftest import suite_oracles
from monobox import boxcover, funcs, lebesgue, metrics, two_piece
from monobox.boxcover import (Box, BoxCover, GridSamples, breakpoint_grid,
                              constructive_cover, cover_total,
                              cover_total_pow, generalized_area, oracle_N,
                              split_cover, width)


def test_area_and_width_basics(leb):
    b = Box(0.0, 1.0, 0.0, 1.0)
    assert generalized_area(b, 1, leb) == 1.0
    assert width(b, leb) == 1.0
    half = Box(0.0, 0.5, 0.0, 1.0)
    assert generalized_area(half, 2, leb) == pytest.approx(
        math.sqrt(0.5), abs=1e-15)
    fig1_box = Box(0.25, 0.5, 0.0625, 0.25)
    assert generalized_area(fig1_box, 1, leb) == pytest.approx(
        0.046875, abs=1e-15)


def test_width_zero_density_and_atoms(atomic):
    assert width(Box(0.35, 0.4, 0.0, 1.0), atomic) == pytest.approx(
        0.025, abs=1e-15)
    # interior atom counts toward the width
    assert width(Box(0.2, 0.4, 0.0, 1.0), atomic) == pytest.approx(
        0.5 + 0.1, abs=1e-15)
    zero = boxcover.Box(0.6, 0.9, 0.0, 1.0)
    m = boxcover.Measure(density_pieces=((0.0, 0.5, 2.0),))
    assert width(zero, m) == 0.0


def test_cover_total_cases(leb):
    single = BoxCover(np.array([0.0, 1.0]), np.array([0.0]), np.array([1.0]))
    assert cover_total(single, 1, leb) == 1.0
    flat = BoxCover(np.array([0.0, 0.4, 1.0]), np.array([0.2, 0.5]),
                    np.array([0.2, 0.5]))
    assert cover_total(flat, 3, leb) == 0.0


def test_constructive_cover_identity(leb):
    cover = constructive_cover(funcs.catalog("identity"), 4, 1, leb)
    assert np.allclose(cover.breakpoints, [0.0, 0.25, 0.5, 0.75, 1.0],
                       atol=1e-12)
    assert cover_total(cover, 1, leb) == pytest.approx(0.25, abs=1e-9)
    assert cover.covers(funcs.catalog("identity"))


def test_constructive_cover_constant(leb):
    cover = constructive_cover(funcs.catalog("constant(0.5)"), 6, 1, leb)
    assert len(cover) == 1
    assert cover_total(cover, 1, leb) <= 1.0 / 6.0 + 1e-12


def test_constructive_cover_step(leb):
    cover = constructive_cover(funcs.catalog("step_03"), 2, 1, leb)
    assert np.allclose(cover.breakpoints, [0.0, 0.3, 1.0], atol=1e-9)


@pytest.mark.parametrize("oracle", suite_oracles(), ids=lambda f: f.name)
@pytest.mark.parametrize("p", [1, 2, 3])
def test_ladder_bound_sweep(oracle, p, leb):
    # total area of the n-band ladder is at most 1/n, any measure, any p
    for n in (1, 2, 4, 16, 64):
        cover = constructive_cover(oracle.fresh(), n, p, leb)
        assert len(cover) <= n
        assert cover_total(cover, p, leb) <= 1.0 / n + 1e-9
        assert cover.covers(oracle.fresh(), n_grid=512)


def test_split_cover_single_box(leb):
    single = BoxCover(np.array([0.0, 1.0]), np.array([0.0]), np.array([1.0]))
    out = split_cover(single, 1, 1, leb, eps=1.0)
    # k_1 = floor(1*1/1) + 1 = 2 halves of area one half each
    assert len(out) == 2
    areas = [generalized_area(b, 1, leb) for b in out.boxes()]
    assert areas == pytest.approx([0.5, 0.5], abs=1e-12)


def test_split_cover_already_small(leb):
    cover = BoxCover(np.array([0.0, 0.5, 1.0]), np.array([0.0, 0.1]),
                     np.array([0.1, 0.2]))
    # every area^p strictly below eps^p / n: k_i = 1, boxes unchanged
    out = split_cover(cover, 4, 1, leb, eps=0.9)
    assert len(out) == len(cover)
    assert np.array_equal(out.breakpoints, cover.breakpoints)


def test_split_cover_identity_ladder(leb):
    cover = constructive_cover(funcs.catalog("identity"), 4, 1, leb)
    out = split_cover(cover, 4, 1, leb, eps=0.25)
    assert len(out) <= 8
    cap = 0.25 / 4
    for b in out.boxes():
        assert generalized_area(b, 1, leb) <= cap + 1e-12


@pytest.mark.parametrize("p", [1, 2])
def test_split_cover_lemma_sweep(p, twopc):
    for oracle in suite_oracles():
        for n_pow in range(0, 9):
            n = 2 ** n_pow
            cover = constructive_cover(oracle.fresh(), n, p, twopc)
            eps = cover_total(cover, p, twopc)
            if eps <= 0.0:
                continue
            out = split_cover(cover, n, p, twopc, eps=eps)
            assert len(out) <= 2 * n
            cap = eps / n ** (1.0 / p)
            for b in out.boxes():
                assert generalized_area(b, p, twopc) <= cap + 1e-12


# ---------------------------------------------------------------------------
# grid oracle


def brute_force_total(g: GridSamples, eps, p, m):
    """Enumerate every subset of interior cuts; tiny grids only."""
    n = len(g.x)
    idx = range(1, n - 1)
    best = None
    for r in range(0, n - 1):
        for combo in itertools.combinations(idx, r):
            cuts = [0] + list(combo) + [n - 1]
            total = 0.0
            for i, j in zip(cuts, cuts[1:]):
                h = max(0.0, g.f_left[j] - g.f_right[i])
                total += h ** p * m.mass_open(float(g.x[i]), float(g.x[j]))
            if total <= eps ** p + 1e-15:
                best = len(cuts) - 1
                break
        if best is not None:
            return best
    raise AssertionError("no feasible brute-force cover")


@pytest.mark.parametrize("name", ["identity", "square", "step_03"])
@pytest.mark.parametrize("eps", [0.6, 0.3, 0.17])
def test_oracle_total_matches_brute_force(name, eps, leb):
    f = funcs.catalog(name)
    grid = np.unique(np.concatenate([np.linspace(0, 1, 9),
                                     f.meta.breakpoints]))
    g = GridSamples.from_oracle(f, grid)
    assert oracle_N(g, eps, 1, leb, "total") == brute_force_total(g, eps, 1, leb)


def test_oracle_identity_quarter(leb):
    f = funcs.catalog("identity")
    g = GridSamples.from_oracle(f, np.linspace(0, 1, 33))
    # equal-split covers of the identity cost 1/t, so 4 boxes are needed
    assert oracle_N(g, 0.25, 1, leb, "total") == 4


def test_oracle_constant_and_step(leb):
    g = GridSamples.from_oracle(funcs.catalog("constant(0.4)"),
                                np.linspace(0, 1, 17))
    assert oracle_N(g, 0.01, 1, leb, "total") == 1
    f = funcs.catalog("step_03")
    g = GridSamples.from_oracle(f, breakpoint_grid(f, 65))
    # boxes hugging the jump have zero area
    assert oracle_N(g, 0.01, 1, leb, "total") <= 3


@pytest.mark.parametrize("oracle", suite_oracles(), ids=lambda f: f.name)
@pytest.mark.parametrize("p", [1, 2])
def test_oracle_invariants(oracle, p, leb):
    # The grid oracle only upper-bounds the true optimum, so grids must
    # contain a feasible witness; merging in the ladder cuts guarantees one.
    prev = None
    for j in range(1, 9):
        eps = 2.0 ** (-j)
        ladder = constructive_cover(oracle.fresh(), math.ceil(1.0 / eps), p, leb)
        grid = np.unique(np.concatenate([
            breakpoint_grid(oracle, 65), ladder.breakpoints]))
        g = GridSamples.from_oracle(oracle, grid)
        n_total = oracle_N(g, eps, p, leb, "total")
        n_per_box = oracle_N(g, eps, p, leb, "per_box")
        assert n_total <= math.ceil(1.0 / eps)
        assert n_per_box <= n_total
        if prev is not None:
            assert n_total >= prev  # non-increasing in eps means this order
        prev = n_total


def test_oracle_deepest_eps_at_grid_cap(leb):
    # 2^-9 is the deepest scale the <=~512-point grid restriction can host
    # for functions that genuinely need ~1/eps boxes
    eps = 2.0 ** (-9)
    for name in ("identity", "step_03"):
        f = funcs.catalog(name)
        g = GridSamples.from_oracle(f, breakpoint_grid(f, 513))
        assert oracle_N(g, eps, 1, leb, "total") <= math.ceil(1.0 / eps)


def test_ladder_upper_bounds_oracle(leb):
    # oracle(total) <= ladder count <= ceil(1/eps) on a shared grid
    for name in ("identity", "square", "fig2_composite"):
        f = funcs.catalog(name)
        g = GridSamples.from_oracle(f, breakpoint_grid(f, 257))
        for j in range(1, 8):
            eps = 2.0 ** (-j)
            ladder = constructive_cover(f.fresh(), math.ceil(1 / eps), 1, leb)
            assert oracle_N(g, eps, 1, leb, "total") <= len(ladder) + 1
            assert len(ladder) <= math.ceil(1.0 / eps)


def test_grid_cap():
    f = funcs.catalog("identity")
    g = GridSamples.from_oracle(f, np.linspace(0, 1, 600))
    with pytest.raises(boxcover.GridTooLargeError):
        oracle_N(g, 0.5, 1, lebesgue(), "total")


def test_cover_total_equals_lp_gap(twopc):
    cover = constructive_cover(funcs.catalog("fig2_composite"), 8, 2, twopc)
    lo_view, hi_view = metrics.bracket_views(cover)
    gap = metrics.lp_error(hi_view, lo_view, 2, twopc)
    assert gap == pytest.approx(cover_total(cover, 2, twopc), abs=1e-9)


def test_cover_total_pow_consistent(leb):
    cover = constructive_cover(funcs.catalog("square"), 5, 3, leb)
    assert cover_total_pow(cover, 3, leb) == pytest.approx(
        cover_total(cover, 3, leb) ** 3, rel=1e-12)
