"""Command-line entry point ``xyzot``.

Every subcommand recomputes the model constants at startup.  Stochastic
subcommands require ``--seed``; identical arguments give byte-identical
output.  Exit codes: 0 success, 1 usage error, 2 numerical failure,
3 runtime invariant violation.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .constants import solve_constants
from .errors import (ConvergenceError, DomainError, InvalidPartitionError, InvariantViolation,
                     SizeLimitError)

SUBCOMMANDS = ("constants", "check-m", "inertia", "densities", "sample-primal", "marginal-test",
               "dual", "duality-gap", "heuristic", "discrete", "partition")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    """Invalid command line; the message names the offending token."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    subcommand: str
    tolerance: float = 1e-12
    n: int = 1
    seed: Optional[int] = None
    output_path: Optional[str] = None
    format: str = "text"
    threads: int = 1
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if not self.tolerance > 0:
            raise UsageError(f"tolerance must be > 0, got {self.tolerance!r}")
        if self.n < 1:
            raise UsageError(f"n must be >= 1, got {self.n!r}")
        if self.format not in ("csv", "json", "text"):
            raise UsageError(f"unknown format {self.format!r}")


# -- argument types -----------------------------------------------------------

def _count(token: str, minimum: int = 1) -> int:
    try:
        value = int(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {token!r}") from None
    if value < minimum:
        raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {token!r}")
    return value


def _nonneg(token: str) -> int:
    return _count(token, 0)


def _positive_real(token: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {token!r}") from None
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {token!r}")
    return value


def _real(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {token!r}") from None


def _seed(token: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {token!r}") from None
    if not -(2 ** 63) <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed outside the 64-bit range: {token!r}")
    return value % (2 ** 64)


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    # SUPPRESS keeps a subcommand-level default from clobbering a global value
    common.add_argument("--threads", type=_count, default=argparse.SUPPRESS,
                        help="worker threads (default: machine parallelism)")

    parser = _Parser(prog="xyzot", parents=[common],
                     description="Three-marginal transport with cost xyz.")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("constants", parents=[common], help="solve for l, r, alpha, c, C_P")
    p.add_argument("--tol", type=_positive_real, default=1e-12)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("check-m", parents=[common], help="test membership in M")
    for name in ("x", "y", "z"):
        p.add_argument(name, type=_real)
    p.add_argument("--tol", type=_positive_real, default=1e-9)

    p = sub.add_parser("inertia", parents=[common], help="histogram of positive indices")
    p.add_argument("--samples", type=_count, required=True)
    p.add_argument("--seed", type=_seed, required=True)

    p = sub.add_parser("densities", parents=[common], help="tabulate the triangle densities")
    p.add_argument("--grid", type=_count, default=1000)
    p.add_argument("--out")

    p = sub.add_parser("sample-primal", parents=[common], help="sample the primal solution")
    p.add_argument("--n", type=_count, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out")

    p = sub.add_parser("marginal-test", parents=[common], help="KS test of the marginals")
    p.add_argument("--n", type=_count, required=True)
    p.add_argument("--seed", type=_seed, required=True)

    p = sub.add_parser("dual", parents=[common], help="tabulate the dual potential")
    p.add_argument("--cost", default="identity")
    p.add_argument("--grid", type=_count, default=1000)
    p.add_argument("--out")

    p = sub.add_parser("duality-gap", parents=[common], help="primal value, dual value, gap")
    p.add_argument("--cost", default="identity")
    p.add_argument("--tol", type=_positive_real, default=1e-8)

    p = sub.add_parser("heuristic", parents=[common], help="monotonize a random coupling")
    p.add_argument("--algo", choices=("general", "sorting"), required=True)
    p.add_argument("--n", type=_count, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--marginal", choices=("uniform", "sf"), default="uniform")
    p.add_argument("--cost", default="identity")
    p.add_argument("--max-iters", type=_nonneg, default=None,
                   help="passes for sorting (default 200), swaps for general (default 10^7)")
    p.add_argument("--out")

    p = sub.add_parser("discrete", parents=[common], help="triple partition minimum")
    p.add_argument("--n", type=_count, required=True)
    p.add_argument("--brute", action="store_true")
    p.add_argument("--restarts", type=_count, default=10)
    p.add_argument("--seed", type=_seed, default=None)

    p = sub.add_parser("partition", parents=[common], help="partition built from the measure")
    p.add_argument("--n", type=_count, required=True)
    p.add_argument("--m", type=_count, required=True)
    p.add_argument("--samples", type=_count, default=10 ** 6)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out")
    return parser


def parse_args(argv: Sequence[str]) -> RunConfig:
    """Validate ``argv`` into a :class:`RunConfig`; raises :class:`UsageError`."""
    ns = _build_parser().parse_args(list(argv))
    opts = vars(ns).copy()
    cmd = opts.pop("subcommand")
    threads = opts.pop("threads", None) or os.cpu_count() or 1
    seed = opts.pop("seed", None)
    out = opts.pop("out", None)
    tol = opts.pop("tol", 1e-12)
    n = opts.pop("n", 1)
    if cmd == "discrete" and not opts["brute"] and seed is None:
        raise UsageError("xyzot discrete: --seed is required unless --brute is given")
    if cmd == "constants":
        fmt = "json" if opts["json"] else "text"
    else:
        fmt = "csv" if out else "text"
    return RunConfig(subcommand=cmd, tolerance=tol, n=n, seed=seed, output_path=out,
                     format=fmt, threads=threads, options=opts)


# -- output helpers -----------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.16e" % float(v)


def write_csv(path: Optional[str], columns: Dict[str, Sequence], out) -> None:
    """Header row plus one row per entry; floats in 17-digit scientific notation."""
    names = list(columns)
    buf = io.StringIO()
    buf.write(",".join(names) + "\n")
    cols = [columns[k] for k in names]
    for row in zip(*cols):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    if path is None:
        out.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _line(out, label, value):
    out.write(f"{label}: {value}\n")


# -- subcommands --------------------------------------------------------------

def _cmd_constants(cfg, k, out):
    k = solve_constants(cfg.tolerance)
    values = k.as_dict()
    if cfg.format == "json":
        out.write(json.dumps(values, indent=2) + "\n")
    else:
        for name, v in values.items():
            out.write(f"{name} = {v:.15g}\n")
    return EXIT_OK


def _cmd_check_m(cfg, k, out):
    from .geometry import support_residual
    o = cfg.options
    res = support_residual(o["x"], o["y"], o["z"], k)
    for name in ("rx", "ry", "rz"):
        _line(out, name, "%.16e" % getattr(res, name))
    _line(out, "verdict", "ON" if res.on_m(cfg.tolerance) else "OFF")
    return EXIT_OK


def _cmd_inertia(cfg, k, out):
    from .geometry import inertia_index
    rng = np.random.default_rng(cfg.seed)
    count = cfg.options["samples"]
    vals = 1.0 - rng.random((count, 6))  # (0, 1]
    hist = [0, 0, 0, 0]
    for row in vals:
        hist[inertia_index(*row).positive_index] += 1
    for idx, c in enumerate(hist):
        _line(out, f"positive_index={idx}", c)
    if hist[2] or hist[3]:
        out.write("VIOLATION: positive index above 1\n")
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_densities(cfg, k, out):
    from .primal import density_table
    write_csv(cfg.output_path, density_table(cfg.options["grid"], k), out)
    return EXIT_OK


def _cmd_sample_primal(cfg, k, out):
    from .primal import COMPONENTS, cloud_residuals, estimate_cost, sample_primal
    cloud = sample_primal(cfg.n, cfg.seed, k)
    res = cloud_residuals(cloud, k)
    pts = cloud.points
    cols = {"x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2],
            "component": [COMPONENTS[c] for c in cloud.components], "residual": res}
    write_csv(cfg.output_path, cols, out)
    if cfg.output_path is not None:
        mean, se = estimate_cost(cloud)
        _line(out, "samples", cfg.n)
        _line(out, "cost_estimate", "%.16e" % mean)
        _line(out, "standard_error", "%.16e" % se)
        _line(out, "max_residual", "%.3e" % float(res.max()))
    return EXIT_OK


def _cmd_marginal_test(cfg, k, out):
    from .primal import sample_primal
    from .stats import ks_uniform_test
    cloud = sample_primal(cfg.n, cfg.seed, k)
    ok = True
    for ax, name in enumerate("xyz"):
        d, crit, passed = ks_uniform_test(cloud.points[:, ax])
        ok &= passed
        out.write(f"{name}: D = {d:.6e} critical = {crit:.6e} {'PASS' if passed else 'FAIL'}\n")
    return EXIT_OK if ok else EXIT_INVARIANT


def _cmd_dual(cfg, k, out):
    from .dual import cost_profile, dual_table
    cost = cost_profile(cfg.options["cost"])
    write_csv(cfg.output_path, dual_table(cost, cfg.options["grid"], k), out)
    return EXIT_OK


def _cmd_duality_gap(cfg, k, out):
    from .dual import cost_profile, duality_report
    rep = duality_report(cost_profile(cfg.options["cost"]), k)
    _line(out, "primal", "%.16e" % rep.primal)
    _line(out, "dual", "%.16e" % rep.dual)
    _line(out, "gap", "%.3e" % rep.gap)
    return EXIT_OK if rep.gap < cfg.tolerance else EXIT_INVARIANT


def _cmd_heuristic(cfg, k, out):
    from .dual import cost_profile
    from .geometry import support_residuals
    from .heuristic import MARGINALS, initial_state, run_general, run_sorting
    o = cfg.options
    cost = cost_profile(o["cost"])
    spec = MARGINALS[o["marginal"]]()
    state = initial_state(cfg.n, cfg.seed, spec)
    if o["algo"] == "sorting":
        if not cost.is_identity:
            raise DomainError("the sorting algorithm is only defined for the identity cost")
        limit = 200 if o["max_iters"] is None else o["max_iters"]
        final = run_sorting(state, max_passes=limit)
    else:
        limit = 10 ** 7 if o["max_iters"] is None else o["max_iters"]
        rng = np.random.default_rng([cfg.seed, 1])
        final = run_general(state, cost, max_swaps=limit, rng=rng)
    tr = final.triples
    if spec.kind == "uniform01":
        res = support_residuals(np.clip(tr, 0.0, 1.0), k)
    else:
        res = np.full(len(tr), np.nan)
    if cfg.output_path is not None:
        write_csv(cfg.output_path, {"x": tr[:, 0], "y": tr[:, 1], "z": tr[:, 2],
                                    "residual": res}, out)
    _line(out, "passes", final.pass_count)
    _line(out, "final_cost", "%.16e" % final.mean_cost(cost))
    _line(out, "status", final.status)
    return EXIT_OK


def _cmd_discrete(cfg, k, out):
    from .discrete import brute_force_min, heuristic_min
    o = cfg.options
    if o["brute"]:
        cost, _ = brute_force_min(cfg.n, threads=cfg.threads)
    else:
        cost, _ = heuristic_min(cfg.n, cfg.seed, restarts=o["restarts"])
    _line(out, "min_cost", cost)
    _line(out, "cost_over_n4", "%.16e" % (cost / cfg.n ** 4))
    _line(out, "C_P", "%.16e" % k.primal_value)
    return EXIT_OK


def _cmd_partition(cfg, k, out):
    from .discrete import block_membership_ok, construct_partition, partition_cost
    o = cfg.options
    part, counts = construct_partition(cfg.n, o["m"], o["samples"], cfg.seed, k)
    if not block_membership_ok(part, counts):
        raise InvariantViolation("constructed partition leaves its boxes")
    tr = part.triples
    if cfg.output_path is not None:
        write_csv(cfg.output_path, {"a": tr[:, 0], "b": tr[:, 1], "c": tr[:, 2]}, out)
    size = cfg.n * o["m"]
    cost = partition_cost(part)
    _line(out, "size", size)
    _line(out, "cost", cost)
    _line(out, "cost_over_size4", "%.16e" % (cost / size ** 4))
    _line(out, "C_P", "%.16e" % k.primal_value)
    return EXIT_OK


_HANDLERS = {
    "constants": _cmd_constants, "check-m": _cmd_check_m, "inertia": _cmd_inertia,
    "densities": _cmd_densities, "sample-primal": _cmd_sample_primal,
    "marginal-test": _cmd_marginal_test, "dual": _cmd_dual, "duality-gap": _cmd_duality_gap,
    "heuristic": _cmd_heuristic, "discrete": _cmd_discrete, "partition": _cmd_partition,
}


def execute(cfg: RunConfig, out=None, err=None) -> int:
    """Run the subcommand and map failures onto exit codes."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        k = solve_constants()
        return _HANDLERS[cfg.subcommand](cfg, k, out)
    except (InvariantViolation, InvalidPartitionError) as exc:
        err.write(f"invariant violation: {exc}\n")
        return EXIT_INVARIANT
    except ConvergenceError as exc:
        err.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (SizeLimitError, DomainError, UsageError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
