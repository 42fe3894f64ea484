"""Command-line front end.

Exit codes: 0 ok, 1 I/O error, 2 usage error, 3 tolerance exceeded,
4 numerical/bracket failure, 5 validation failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import binomial, fluid, montecarlo
from .errors import BracketError, CouplingError, ParameterError
from .export import (FLUID_COLUMNS, SIM_COLUMNS, ensemble_rows, fluid_rows, parse_csv, render_csv,
                     single_value, svg_from_rows, table_from_rows)
from .graph import sample_er_graph, sample_permutation, write_edge_list
from .processes import Kind, ModelSpec, make_grid, run_direct, run_explore_coupled, write_labels

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_TOL, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3, 4, 5
U64_MAX = (1 << 64) - 1


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def parse_range(text: str) -> np.ndarray:
    """``lo:hi:step`` -> inclusive, evenly spaced values."""
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"range must look like lo:hi:step, got {text!r}") from None
    if step <= 0:
        raise UsageError("range step must be > 0")
    if hi < lo:
        raise UsageError("range is empty (hi < lo)")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


def parse_pair(text: str, sep: str, cast=float) -> tuple:
    parts = text.split(sep)
    if len(parts) != 2:
        raise UsageError(f"expected two values separated by {sep!r}, got {text!r}")
    try:
        return cast(parts[0]), cast(parts[1])
    except ValueError:
        raise UsageError(f"could not parse {text!r}") from None


def _c_values(args) -> np.ndarray:
    if args.c_range is not None and args.c is not None:
        raise UsageError("give either --c or --c-range, not both")
    if args.c_range is not None:
        values = parse_range(args.c_range)
    elif args.c is not None:
        values = np.array([args.c])
    else:
        raise UsageError("--c or --c-range is required")
    if np.any(values < 0):
        raise UsageError("c must be ≥ 0")
    return values


def _check_common(args) -> None:
    if getattr(args, "K", None) is not None and args.K < 1:
        raise UsageError("K must be ≥ 1")
    if getattr(args, "n", None) is not None and args.n < 1:
        raise UsageError("n must be ≥ 1")
    if getattr(args, "reps", None) is not None and args.reps < 1:
        raise UsageError("reps must be ≥ 1")
    if getattr(args, "grid", None) is not None and args.grid < 2:
        raise UsageError("grid must be ≥ 2")
    step = getattr(args, "step", None)
    if step is not None and not 0 < step <= fluid.MAX_STEP:
        raise UsageError(f"step must lie in (0, {fluid.MAX_STEP}]")


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _write_outputs(args, columns, rows, value: str) -> None:
    text = render_csv(columns, rows)
    _emit(text, args.out)
    if args.svg:
        Path(args.svg).write_text(svg_from_rows(parse_csv(text, columns), value))


# --------------------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    _check_common(args)
    grid = make_grid(args.grid)
    rows = []
    for c in _c_values(args):
        spec = ModelSpec(args.model, args.K, float(c), args.n)
        ens = montecarlo.run_ensemble(spec, args.reps, args.seed, grid)
        rows.extend(ensemble_rows(ens))
    _write_outputs(args, SIM_COLUMNS, rows, "alpha_mean")
    return EXIT_OK


def cmd_fluid(args) -> int:
    _check_common(args)
    cs = _c_values(args)
    sol = fluid.integrate(args.model, args.K, cs, step=args.step, points=args.grid)
    _write_outputs(args, FLUID_COLUMNS, fluid_rows(sol), "alpha")
    return EXIT_OK


def _tables_from_csv(sim_path, fluid_path):
    sim = parse_csv(Path(sim_path).read_text(), SIM_COLUMNS)
    flu = parse_csv(Path(fluid_path).read_text(), FLUID_COLUMNS)
    keys = []
    for rows in (sim, flu):
        try:
            keys.append(tuple(single_value(rows, k) for k in ("model", "K", "c")))
        except ParameterError as exc:
            raise UsageError(str(exc)) from None
    (sm, sk, sc), (fm, fk, fc) = keys
    if sm != fm or int(sk) != int(fk) or not np.isclose(float(sc), float(fc), rtol=0, atol=1e-12):
        raise UsageError(f"simulation ({sm}, K={sk}, c={sc}) and fluid ({fm}, K={fk}, c={fc}) inputs differ")
    g_sim, cl_sim, a_sim = table_from_rows(sim, "alpha_mean")
    g_flu, cl_flu, a_flu = table_from_rows(flu, "alpha")
    if cl_sim != cl_flu or len(g_sim) != len(g_flu) or not np.allclose(g_sim, g_flu, rtol=0, atol=1e-9):
        raise UsageError("simulation and fluid grids or classes differ")
    return float(np.max(np.abs(a_sim - a_flu)))


def cmd_compare(args) -> int:
    if (args.sim_csv is None) != (args.fluid_csv is None):
        raise UsageError("--sim-csv and --fluid-csv must be given together")
    if args.sim_csv is not None:
        dev = _tables_from_csv(args.sim_csv, args.fluid_csv)
    else:
        for flag in ("model", "K", "c", "n"):
            if getattr(args, flag) is None:
                raise UsageError(f"--{flag} is required without CSV inputs")
        _check_common(args)
        spec = ModelSpec(args.model, args.K, args.c, args.n)
        grid = make_grid(args.grid)
        ens = montecarlo.run_ensemble(spec, args.reps, args.seed, grid)
        sol = fluid.integrate(args.model, args.K, args.c, step=args.step, points=args.grid)
        dev = montecarlo.deviation_from_fluid(ens, sol)
    print(f"deviation {dev:.9g}")
    if dev > args.tol:
        print(f"deviation exceeds tolerance {args.tol:g}", file=sys.stderr)
        return EXIT_TOL
    return EXIT_OK


def cmd_crossing(args) -> int:
    _check_common(args)
    k_low, k_high = parse_pair(args.classes, ",", int)
    if k_low == k_high:
        raise UsageError("--classes needs two different heights")
    if not (1 <= k_low <= args.K and 1 <= k_high <= args.K):
        raise UsageError(f"heights must lie in 1..{args.K}")
    lo, hi = parse_pair(args.bracket, ":")
    if lo > hi or lo < 0:
        raise UsageError("bracket must satisfy 0 <= lo <= hi")
    try:
        c_star = fluid.tetris_crossing(args.K, k_low, k_high, (lo, hi), tol=args.tol, step=args.step)
    except BracketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{c_star:.4f}")
    return EXIT_OK


def _trial_spec(rng, kind, max_n, max_c, max_K):
    n = int(rng.integers(1, max_n + 1))
    K = int(rng.integers(1, max_K + 1))
    c = round(float(rng.uniform(0.0, max_c)), 3)
    return ModelSpec(kind, K, c, n)


def coupling_sweep(kind, trials: int, seed: int = 0, max_n: int = 200, max_c: float = 8.0,
                   max_K: int = 4, corrupt: bool = False) -> dict:
    """Run coupled exploration against the direct process on random small specs.

    With ``corrupt`` the coupled run reads the edge keys of a different
    replication, which should break the coupling.
    """
    kind = Kind(kind)
    rng = np.random.default_rng([seed, list(Kind).index(kind)])
    mismatches = 0
    first = None
    for trial in range(trials):
        spec = _trial_spec(rng, kind, max_n, max_c, max_K)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # c >= n is expected for tiny n
            graph = sample_er_graph(spec.n, spec.c, seed, trial)
        order = sample_permutation(spec.n, seed, trial)
        direct, _ = run_direct(graph, order, spec)
        try:
            coupled, _ = run_explore_coupled(
                graph, order, spec, replication=trial + 1_000_003 if corrupt else None,
                verify_graph=not corrupt)
        except CouplingError:
            mismatches += 1
            first = first or (trial, spec, None)
            continue
        diff = np.flatnonzero(direct != coupled)
        if len(diff):
            mismatches += 1
            if first is None:
                first = (trial, spec, int(diff[0]))
    return {"trials": trials, "mismatches": mismatches, "first": first}


def cmd_validate(args) -> int:
    if args.trials < 1:
        raise UsageError("trials must be ≥ 1")
    if args.max_n < 1:
        raise UsageError("max-n must be ≥ 1")
    ok = True
    print(f"{'check':<24}{'cases':>8}{'failures':>10}  status")
    for kind in Kind:
        res = coupling_sweep(kind, args.trials, args.seed, args.max_n, corrupt=args.corrupt_edge_keys)
        passed = res["mismatches"] == 0
        ok &= passed
        print(f"{'coupling/' + kind.value:<24}{res['trials']:>8}{res['mismatches']:>10}  {'PASS' if passed else 'FAIL'}")
        if res["first"] is not None:
            trial, spec, vertex = res["first"]
            where = "graph mismatch" if vertex is None else f"first mismatching vertex {vertex + 1}"
            print(f"  trial {trial} ({spec.kind.value}, K={spec.K}, c={spec.c}, n={spec.n}): {where}")
    if not args.skip_lemma:
        lem = binomial.lemma_sweep()
        passed = lem["max_mean_error"] <= 1e-10 and lem["bound_failures"] == 0
        ok &= passed
        print(f"{'lemma/conditional-mean':<24}{lem['cases']:>8}{lem['bound_failures']:>10}  "
              f"{'PASS' if passed else 'FAIL'} (max error {lem['max_mean_error']:.2e})")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_oracle(args) -> int:
    _check_common(args)
    if args.c is None:
        raise UsageError("--c is required")
    spec = ModelSpec(args.model, args.K, args.c, args.n)
    graph = sample_er_graph(spec.n, spec.c, args.seed, args.replication)
    order = sample_permutation(spec.n, args.seed, args.replication)
    runner = run_explore_coupled if args.mode == "coupled" else run_direct
    labels, traj = runner(graph, order, spec, make_grid(args.grid))
    if args.graph_out:
        write_edge_list(graph, args.graph_out)
    if args.labels_out:
        write_labels(labels, spec.kind, args.labels_out)
    print(f"edges {graph.num_edges}")
    print(f"total_active {traj.final.total_active:.9g}")
    return EXIT_OK


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsajam", description="Random sequential adsorption on G(n, c/n).")
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p, required=True):
        p.add_argument("--model", choices=[k.value for k in Kind], required=required)
        p.add_argument("--K", type=int, required=required)

    def c_flags(p):
        p.add_argument("--c", type=float)
        p.add_argument("--c-range", help="lo:hi:step, inclusive")

    def out_flags(p):
        p.add_argument("--out", help="CSV path (default: stdout)")
        p.add_argument("--svg", help="also write an SVG plot of the CSV data")

    p = sub.add_parser("simulate", help="counts-only simulation ensemble")
    model_flags(p)
    c_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--grid", type=int, default=fluid.DEFAULT_GRID)
    out_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fluid", help="integrate the fluid limit")
    model_flags(p)
    c_flags(p)
    p.add_argument("--step", type=float, default=fluid.DEFAULT_STEP)
    p.add_argument("--grid", type=int, default=fluid.DEFAULT_GRID)
    out_flags(p)
    p.set_defaults(func=cmd_fluid)

    p = sub.add_parser("compare", help="sup-norm deviation between simulation and fluid limit")
    model_flags(p, required=False)
    p.add_argument("--c", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--grid", type=int, default=fluid.DEFAULT_GRID)
    p.add_argument("--step", type=float, default=fluid.DEFAULT_STEP)
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--sim-csv")
    p.add_argument("--fluid-csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("crossing", help="locate the c where two Tetris heights have equal density")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--classes", default="1,2")
    p.add_argument("--bracket", default="1:10")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--step", type=float, default=fluid.DEFAULT_STEP)
    p.set_defaults(func=cmd_crossing)

    p = sub.add_parser("validate", help="coupling and binomial-identity checks")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-n", type=int, default=200)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--corrupt-edge-keys", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--skip-lemma", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="run one model on an explicit graph and dump it")
    model_flags(p)
    p.add_argument("--c", type=float)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--mode", choices=["direct", "coupled"], default="direct")
    p.add_argument("--grid", type=int, default=fluid.DEFAULT_GRID)
    p.add_argument("--graph-out")
    p.add_argument("--labels-out")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
