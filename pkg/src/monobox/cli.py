"""Experiment harness: refinement runs, complexity tables, rate figures.

Subcommands: run, integrate, complexity, rates, certificates, fig2,
adversary.  Options come from flags, optionally backed by a TOML config
(--config; flags win).  CSV output is UTF-8 with '.' decimals and 12
significant digits; charts are self-contained deterministic SVG.  Exit
codes: 0 success, 2 config error, 3 assertion-mode failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import tomllib as _toml
except ImportError:  # Python 3.10
    import tomli as _toml

from . import boxcover, funcs, measure, metrics, refine, stochastic, svgplot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSERT = 3

ALGO_POLICY = {
    "greedybox": refine.SelectionPolicy.LARGEST_AREA,
    "greedywidthbox": refine.SelectionPolicy.ALTERNATE_WIDTH_AREA,
    "trapezoid": refine.SelectionPolicy.LARGEST_WIDTH,
}


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.11e}"


def _write_csv(path: str, header, rows) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else _fmt(c)
                              for c in row) + "\n")


def _pool_size() -> int:
    raw = os.environ.get("MONOBOX_THREADS", "").strip()
    if raw:
        return max(1, int(raw))
    return min(4, os.cpu_count() or 1)


def _pool_map(fn, jobs):
    """Run jobs in a bounded pool; results return in submission order."""
    with ThreadPoolExecutor(max_workers=_pool_size()) as pool:
        return list(pool.map(fn, jobs))


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            return _toml.load(fh)
    except (OSError, _toml.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def _opt(args, cfg: dict, key: str, default=None):
    """Flag value if given, else config value, else default."""
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if key in cfg:
        return cfg[key]
    return default


def _parse_list(raw, cast=str):
    if raw is None:
        return None
    if isinstance(raw, (list, tuple)):
        return [cast(v) for v in raw]
    return [cast(v.strip()) for v in str(raw).split(",") if v.strip()]


def _budgets(args, cfg) -> list:
    raw = _opt(args, cfg, "budgets")
    if raw is not None:
        return sorted({int(b) for b in _parse_list(raw, int)})
    pows = str(_opt(args, cfg, "budget_pows", "3:10"))
    lo, hi = (int(s) for s in pows.split(":"))
    return [2 ** j for j in range(lo, hi + 1)]


def _eps_grid(args, cfg) -> list:
    raw = _opt(args, cfg, "eps_grid")
    if raw is not None:
        return [float(e) for e in _parse_list(raw, float)]
    return [2.0 ** (-j) for j in range(2, 9)]


def _measure_from(args, cfg) -> measure.Measure:
    spec = _opt(args, cfg, "measure", cfg.get("measure", "lebesgue"))
    return measure.from_config(spec)


def _function_factory(name: str, cfg: dict, gt_exponent: float):
    """Return (pretty name, budget -> fresh oracle).  Most functions ignore
    the budget; the time-indexed worst-case family rebuilds per budget."""
    if name == "gt_family":
        def make(budget):
            params = funcs.params_for_budget(budget, gt_exponent)
            return funcs.experiment_g(params)
        return name, make
    if name == "custom":
        table = cfg.get("function")
        if not isinstance(table, dict):
            raise ConfigError("custom function requires a [function] table")
        oracle = funcs.from_config(table)
        return oracle.name, lambda budget: oracle.fresh()
    oracle = funcs.from_config(name)
    return name, lambda budget: oracle.fresh()


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    m = _measure_from(args, cfg)
    name = _opt(args, cfg, "function", "identity")
    _, make = _function_factory(name, cfg, 1.0)
    f = make(0)
    p = int(_opt(args, cfg, "p", 1))
    eps = float(_opt(args, cfg, "eps", 0.01))
    policy = refine.SelectionPolicy.parse(_opt(args, cfg, "policy", "area"))
    max_iters = int(_opt(args, cfg, "max_iters", refine.DEFAULT_MAX_ITERS))
    meter = None
    if args.true_error:
        meter = metrics.ChordErrorMeter(f, p, m)
    try:
        trace, est = refine.run(f, eps, p, m, policy=policy,
                                max_iters=max_iters, true_error=meter)
    except refine.ResolutionExhaustedError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 1
    print(f"function={name} policy={policy.value} p={p} eps={_fmt(eps)}")
    print(f"tau={trace.tau} evaluations={trace.evaluations} "
          f"certificate={_fmt(trace.xi[-1])} stop={trace.stop_reason}")
    out = _opt(args, cfg, "trace_out")
    if out:
        rows = []
        for j in range(trace.tau):
            err = ""
            if trace.true_error_pow is not None:
                err = _fmt(trace.true_error_pow[j] ** (1.0 / p))
            rows.append((j + 1, j + 2,
                         "" if math.isnan(trace.x_new[j]) else _fmt(trace.x_new[j]),
                         _fmt(trace.xi[j]), err))
        _write_csv(out, ["t", "evaluations", "x_new", "xi_t", "true_error_p"],
                   rows)
        print(f"trace written to {out}")
    return EXIT_OK


def cmd_integrate(args) -> int:
    cfg = _load_config(args.config)
    m = _measure_from(args, cfg)
    name = _opt(args, cfg, "function", "identity")
    _, make = _function_factory(name, cfg, 1.0)
    f = make(0)
    eps = float(_opt(args, cfg, "eps", 0.01))
    n_seeds = int(_opt(args, cfg, "seeds", 100))
    base = int(_opt(args, cfg, "base_seed", 0))
    runs = stochastic.replicate(f, eps, m, range(base, base + n_seeds))
    exact = None
    if f.meta is not None:
        exact = metrics.reference_integral(f, m)
    rows = []
    for r in runs:
        abs_err = "" if exact is None else _fmt(abs(r.estimate - exact))
        rows.append((r.seed, r.tau, r.evaluations, _fmt(r.estimate), abs_err,
                     _fmt(r.certificate)))
    out = _opt(args, cfg, "out", "integrate.csv")
    _write_csv(out, ["seed", "tau", "evals", "I_hat", "abs_err", "certificate"],
               rows)
    mean = float(np.mean([r.estimate for r in runs]))
    print(f"function={name} eps={_fmt(eps)} tau={runs[0].tau} "
          f"certificate={_fmt(runs[0].certificate)} mean_I_hat={_fmt(mean)}"
          + ("" if exact is None else f" exact={_fmt(exact)}"))
    print(f"rows written to {out}")
    return EXIT_OK


def cmd_complexity(args) -> int:
    cfg = _load_config(args.config)
    m = _measure_from(args, cfg)
    p = int(_opt(args, cfg, "p", 1))
    names = _parse_list(_opt(args, cfg, "functions", "identity,step_03")) or []
    eps_grid = _eps_grid(args, cfg)
    grid_n = int(_opt(args, cfg, "grid_n", 257))
    rows = []
    for name in names:
        _, make = _function_factory(name, cfg, 1.0)
        for eps in eps_grid:
            f = make(0)
            cover = boxcover.constructive_cover(f, math.ceil(1.0 / eps), p, m)
            g = boxcover.GridSamples.from_oracle(f, boxcover.breakpoint_grid(f, grid_n))
            n_total = boxcover.oracle_N(g, eps, p, m, mode="total")
            n_per_box = boxcover.oracle_N(g, eps, p, m, mode="per_box")
            rows.append((name, _fmt(eps), p, len(cover), n_total, n_per_box))
    out = _opt(args, cfg, "out", "complexity.csv")
    _write_csv(out, ["function", "eps", "p", "constructive_n",
                     "oracle_total", "oracle_per_box"], rows)
    for row in rows:
        print(",".join(str(c) for c in row))
    return EXIT_OK


def _sweep_rows(args, cfg):
    """Shared (function x algorithm x budget) sweep for rates/certificates."""
    m = _measure_from(args, cfg)
    p = int(_opt(args, cfg, "p", 1))
    gt_exp = float(_opt(args, cfg, "gt_exponent", 1.0))
    names = _parse_list(_opt(args, cfg, "functions",
                             "square,power_tenth,step_03,gt_family")) or []
    algos = _parse_list(_opt(args, cfg, "algorithms",
                             "greedybox,greedywidthbox,trapezoid")) or []
    budgets = _budgets(args, cfg)
    eps_grid = _eps_grid(args, cfg)
    n_seeds = int(_opt(args, cfg, "seeds", 32))
    for algo in algos:
        if algo not in ALGO_POLICY and algo != "stochastic":
            raise ConfigError(f"unknown algorithm {algo!r}")
    if not names or not algos or not budgets:
        raise ConfigError("need at least one function, algorithm and budget")

    jobs = []
    for name in names:
        pretty, make = _function_factory(name, cfg, gt_exp)
        for algo in algos:
            if algo == "stochastic":
                for eps in eps_grid:
                    jobs.append((pretty, make, algo, None, eps))
            else:
                for budget in budgets:
                    jobs.append((pretty, make, algo, budget, None))

    def one(job):
        pretty, make, algo, budget, eps = job
        if algo == "stochastic":
            f = make(0)
            runs = stochastic.replicate(f, eps, m, range(n_seeds))
            exact = metrics.reference_integral(f, m)
            err = float(np.mean([abs(r.estimate - exact) for r in runs]))
            return (pretty, algo, runs[0].tau, runs[0].evaluations, n_seeds,
                    err, runs[0].certificate, runs[0].stop_reason)
        f = make(budget)
        trace, est = refine.run_fixed_budget(
            f, budget, p, m, policy=ALGO_POLICY[algo], on_resolution="stop")
        err = metrics.lp_error(est, f, p, m)
        cert = trace.xi[-1] ** (1.0 / p)
        return (pretty, algo, budget, trace.evaluations, 0, err, cert,
                trace.stop_reason)

    rows = _pool_map(one, jobs)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows, names, algos, p


_SWEEP_HEADER = ["function", "algorithm", "budget_t", "evaluations", "seed",
                 "true_error", "certificate", "stop_reason"]


def _chart_series(rows, func_name, algos, with_cert: bool):
    series = []
    for algo in algos:
        pts = [(r[3], r[5]) for r in rows
               if r[0] == func_name and r[1] == algo and r[5] and r[5] > 0]
        series.append((algo, [q[0] for q in pts],
                       [1.0 / q[1] for q in pts]))
        if with_cert:
            cps = [(r[3], r[6]) for r in rows
                   if r[0] == func_name and r[1] == algo and r[6] and r[6] > 0]
            series.append((f"{algo} certificate", [q[0] for q in cps],
                           [1.0 / q[1] for q in cps]))
    return series


def _emit_sweep(args, cfg, rows, names, algos, with_cert: bool, stem: str) -> None:
    out_dir = _opt(args, cfg, "out_dir", "monobox_out")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    _write_csv(csv_path, _SWEEP_HEADER, rows)
    print(f"rows written to {csv_path}")
    for name in names:
        pretty = name if name != "custom" else rows[0][0]
        series = _chart_series(rows, pretty, algos, with_cert)
        svg = svgplot.loglog_chart(series, f"{stem}: {pretty}",
                                   "evaluations", "1 / error")
        path = os.path.join(out_dir, f"{stem}_{pretty}.svg")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
        print(f"chart written to {path}")


def cmd_rates(args) -> int:
    cfg = _load_config(args.config)
    rows, names, algos, _ = _sweep_rows(args, cfg)
    _emit_sweep(args, cfg, rows, names, algos, with_cert=False, stem="rates")
    return EXIT_OK


def cmd_certificates(args) -> int:
    cfg = _load_config(args.config)
    rows, names, algos, _ = _sweep_rows(args, cfg)
    _emit_sweep(args, cfg, rows, names, algos, with_cert=True,
                stem="certificates")
    return EXIT_OK


FIG2_ITERATIONS = 12
FIG2_GREEDY_WINDOW = (0.003, 0.007)
FIG2_TRAPEZOID_WINDOW = (0.012, 0.018)


def cmd_fig2(args) -> int:
    m = measure.lebesgue()
    results = {}
    f = funcs.catalog("fig2_composite")
    _, est = refine.run_fixed_budget(f, FIG2_ITERATIONS, 1, m,
                                     policy=ALGO_POLICY["greedybox"])
    results["greedybox"] = metrics.lp_error(est, f, 1, m)
    f = funcs.catalog("fig2_composite")
    est = refine.uniform_trapezoid(f, FIG2_ITERATIONS)
    results["trapezoid"] = metrics.lp_error(est, f, 1, m)
    for algo in ("greedybox", "trapezoid"):
        print(f"{algo}: L1 error after {FIG2_ITERATIONS} iterations = "
              f"{_fmt(results[algo])}")
    if args.check:
        ok = (FIG2_GREEDY_WINDOW[0] <= results["greedybox"] <= FIG2_GREEDY_WINDOW[1]
              and FIG2_TRAPEZOID_WINDOW[0] <= results["trapezoid"]
              <= FIG2_TRAPEZOID_WINDOW[1])
        print(f"check: {'PASS' if ok else 'FAIL'} "
              f"(windows {FIG2_GREEDY_WINDOW} / {FIG2_TRAPEZOID_WINDOW})")
        if not ok:
            return EXIT_ASSERT
    return EXIT_OK


def cmd_adversary(args) -> int:
    cfg = _load_config(args.config)
    p = int(_opt(args, cfg, "p", 1))
    ks = _parse_list(_opt(args, cfg, "k_values", "1,2,3"), int) or []
    m = measure.lebesgue()
    failures = 0
    for k in ks:
        params = funcs.OscillatorParams(k)
        f = funcs.worst_case_f(params)
        trace, est = refine.run_fixed_budget(
            f, params.t_star, 1, m, policy=refine.SelectionPolicy.LARGEST_AREA)
        err = metrics.lp_error(est, f, 1, m)
        predicted = 1.0 / (12.0 * params.s_prime ** 2)
        pair_lo, pair_hi = funcs.surrounding_pair(est.breakpoints, f.fresh())
        gap = metrics.lp_error(pair_hi, pair_lo, p, m)
        print(f"k={k} t={params.t_star} L1_error={_fmt(err)} "
              f"predicted={_fmt(predicted)} bracket_gap_p{p}={_fmt(gap)} "
              f"certificate={_fmt(trace.xi[-1])}")
        if args.check and k == 2 and abs(err - predicted) > 1e-6:
            failures += 1
    if failures:
        print("check: FAIL")
        return EXIT_ASSERT
    if args.check:
        print("check: PASS")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="monobox",
        description="Adaptive refinement of monotone functions with "
                    "observable error certificates.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML config file; flags override it")
        p.add_argument("--measure", help="lebesgue | two_piece "
                                          "(tables only via --config)")

    p = sub.add_parser("run", help="one refinement run with a trace CSV")
    common(p)
    p.add_argument("--function")
    p.add_argument("--eps", type=float)
    p.add_argument("--p", type=int)
    p.add_argument("--policy", choices=["area", "width", "alternate"])
    p.add_argument("--max-iters", type=int)
    p.add_argument("--trace-out")
    p.add_argument("--true-error", action="store_true",
                   help="meter the true error per iteration (needs metadata)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("integrate", help="randomized integral estimation")
    common(p)
    p.add_argument("--function")
    p.add_argument("--eps", type=float)
    p.add_argument("--seeds", type=int)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_integrate)

    p = sub.add_parser("complexity", help="covering-number estimates as CSV")
    common(p)
    p.add_argument("--functions")
    p.add_argument("--p", type=int)
    p.add_argument("--eps-grid")
    p.add_argument("--grid-n", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_complexity)

    for name, fn, help_ in (("rates", cmd_rates, "error-rate sweep + charts"),
                            ("certificates", cmd_certificates,
                             "certificate-vs-error sweep + charts")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--functions")
        p.add_argument("--algorithms")
        p.add_argument("--budgets")
        p.add_argument("--budget-pows")
        p.add_argument("--eps-grid")
        p.add_argument("--seeds", type=int)
        p.add_argument("--p", type=int)
        p.add_argument("--gt-exponent", type=float)
        p.add_argument("--out-dir")
        p.set_defaults(fn=fn)

    p = sub.add_parser("fig2", help="12-iteration comparison on the composite")
    p.add_argument("--check", action="store_true")
    p.set_defaults(fn=cmd_fig2)

    p = sub.add_parser("adversary", help="worst-case oscillator reproduction")
    common(p)
    p.add_argument("--k-values")
    p.add_argument("--p", type=int)
    p.add_argument("--check", action="store_true")
    p.set_defaults(fn=cmd_adversary)

    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, measure.MeasureError, funcs.FunctionSpecError,
            ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
