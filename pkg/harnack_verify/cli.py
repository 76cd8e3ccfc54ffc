"""Command-line entry point: ``harnack-verify <command> [options]``.

Exit codes: 0 success, 1 verification or numeric failure, 2 usage, parse,
input or interval error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from harnack_verify import __version__, config
from harnack_verify.core.export import (
    get_output_summary,
    load_curvature_point,
    point_to_record,
    save_curvature_point,
    save_report,
    sphere_csv,
    write_sphere_csv,
)
from harnack_verify.core.harnack import (
    SphereFamily,
    parse_t_grid,
    quadratic_report,
    sphere_point,
    sphere_sweep,
)
from harnack_verify.errors import (
    DependencyError,
    EvaluationError,
    ExpressionSyntaxError,
    FreeIndexMismatchError,
    FrameConstructionError,
    IndexStructureError,
    IntervalError,
    RuleError,
    SingularCurvatureOperator,
)
from harnack_verify.numeric.oracle import FAMILIES, check_rule_soundness, randomized_equal, sample_point
from harnack_verify.rewrite.catalog import default_catalog
from harnack_verify.rewrite.derivation import bundled_script, run_script
from harnack_verify.schemas.data_models import RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _dimensions(text: str) -> List[int]:
    try:
        return [int(n) for n in text.split(",") if n.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _vector(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _written(label: str, path: Path) -> None:
    print(get_output_summary({label: path}), file=sys.stderr)


def cmd_verify(args: argparse.Namespace) -> int:
    """Replays a derivation script; 0 iff every step passes."""
    script = Path(args.script) if args.script else bundled_script()
    if not script.exists():
        _error(f"script not found: {script}")
        return EXIT_USAGE
    try:
        report = run_script(script)
    except (IOError, ExpressionSyntaxError, DependencyError) as e:
        _error(str(e))
        return EXIT_USAGE
    if args.format == "json":
        print(report.model_dump_json(indent=2))
    else:
        print(report.summary())
    if args.output:
        _written("report", save_report(report, args.output))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_check_identity(args: argparse.Namespace) -> int:
    """Compares two expressions numerically on random models."""
    try:
        run = RunConfig(seed=args.seed, trials=args.trials, tolerance=args.tol, dimensions=args.dim)
        verdict = randomized_equal(
            args.lhs, args.rhs, args.family, run.trials, run.tolerance, run.seed, run.dimensions
        )
    except ValidationError as e:
        _error(str(e))
        return EXIT_USAGE
    except (ExpressionSyntaxError, IndexStructureError, FreeIndexMismatchError, EvaluationError) as e:
        _error(str(e))
        return EXIT_USAGE
    except RuleError as e:
        _error(str(e))
        return EXIT_USAGE
    except SingularCurvatureOperator as e:
        _error(f"{e} (offending eigenvalue {e.eigenvalue:.3e})")
        return EXIT_USAGE
    if args.format == "json":
        print(verdict.model_dump_json(indent=2))
    else:
        status = "PASS" if verdict.passed else "FAIL"
        print(
            f"{status} worst relative deviation {verdict.worst_deviation:.3e} "
            f"(seed {verdict.worst_seed}, n={verdict.worst_dimension}, "
            f"{verdict.trials} trial(s), {verdict.family} models)"
        )
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_sphere(args: argparse.Namespace) -> int:
    """Checks the Z evolution equation along a t-grid on the shrinking sphere."""
    try:
        run = RunConfig(fd_step=args.step, fd_tolerance=args.tol, dimensions=[args.dim])
        family = SphereFamily(args.dim, args.K0)
        grid = parse_t_grid(args.t_grid) if args.t_grid else parse_t_grid(f"0:{0.8 * family.blow_up}:10")
        report = sphere_sweep(family, grid, run.fd_step, run.fd_tolerance)
    except (IntervalError, ValidationError, ValueError) as e:
        _error(str(e))
        return EXIT_USAGE
    except FrameConstructionError as e:
        _error(str(e))
        return EXIT_FAIL
    if args.format == "json":
        print(report.model_dump_json(indent=2))
    elif args.format == "csv":
        print(sphere_csv(report), end="")
    else:
        print(f"{'t':>10} {'K':>12} {'z_min':>12} {'z_max':>12} {'traceZ':>12} {'mt_residual':>12}")
        for row in report.rows:
            print(
                f"{row.t:10.5f} {row.K:12.6g} {row.z_min:12.6g} {row.z_max:12.6g} "
                f"{row.traceZ:12.6g} {row.mt_residual:12.3e}"
            )
        print("PASS" if report.passed else "FAIL")
    if args.output and args.format == "csv":
        _written("table", write_sphere_csv(report, args.output))
    elif args.output:
        _written("report", save_report(report, args.output))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_quadratic(args: argparse.Namespace) -> int:
    """Inverts the curvature operator at a point and minimizes the Harnack quadratic."""
    try:
        pt = load_curvature_point(args.point)
        W = np.array(args.W if args.W else np.eye(pt.n)[0], dtype=float)
        if W.shape != (pt.n,):
            raise ValueError(f"W must have {pt.n} components, got {W.shape[0]}")
    except (IOError, ValueError) as e:
        _error(str(e))
        return EXIT_USAGE
    try:
        report = quadratic_report(pt, W)
    except SingularCurvatureOperator as e:
        _error(f"{e} (offending eigenvalue {e.eigenvalue:.3e})")
        return EXIT_FAIL
    if args.format == "json":
        print(report.model_dump_json(indent=2))
    else:
        print(f"inverse residual   {report.inverse_residual:.3e}")
        print(f"U*                 {np.array(report.U_star).reshape(pt.n, pt.n).tolist()}")
        print(f"Z(U*, W)           {report.Z_at_minimum:.12g}")
        print(f"Z_ab W_a W_b       {report.WZW:.12g}")
        print(f"Z eigenvalues      {[round(z, 12) for z in report.z_eigenvalues]}")
        print(f"trace Z            {report.trace_z:.12g} (formula {report.trace_z_formula:.12g})")
        for name, value in report.extras.items():
            print(f"{name:<18} {value:.12g}")
        print(f"brute-force minimizer {'PASS' if report.brute_force_match else 'FAIL'}")
    return EXIT_OK if report.brute_force_match else EXIT_FAIL


def cmd_sample_point(args: argparse.Namespace) -> int:
    """Writes a curvature point: the shrinking sphere, or a random consistent model."""
    try:
        if args.sphere is not None:
            pt = sphere_point(SphereFamily(args.dim, args.sphere), args.t)
        else:
            pt = sample_point(args.dim, args.seed, args.t)
    except ValueError as e:
        _error(str(e))
        return EXIT_USAGE
    if args.output:
        _written("point", save_curvature_point(pt, args.output))
    else:
        print(point_to_record(pt).model_dump_json(indent=2))
    return EXIT_OK


def cmd_rules(args: argparse.Namespace) -> int:
    """Lists the rule catalog; with ``--check`` evaluates every rule identity numerically."""
    failures = 0
    for rule in default_catalog():
        kind = "axiom" if rule.axiom else f"derived by {rule.requires}" if rule.requires else "rule"
        print(f"{rule.name:<18} {kind:<28} {rule.description}")
        if not args.check:
            continue
        for identity, verdict in check_rule_soundness(rule, trials=args.trials, seed=args.seed).items():
            failures += 0 if verdict.passed else 1
            status = "PASS" if verdict.passed else "FAIL"
            print(f"    {status} {verdict.worst_deviation:.2e} {identity}")
    return EXIT_OK if failures == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harnack-verify",
        description="Replay and numerically cross-check the matrix Harnack derivation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log progress to stderr.")
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="Replay a derivation script.")
    verify.add_argument("script", nargs="?", help="Script path; the bundled proof when omitted.")
    verify.add_argument("--format", choices=["text", "json"], default="text")
    verify.add_argument("--output", help="Also write the JSON report here.")
    verify.set_defaults(handler=cmd_verify)

    identity = commands.add_parser("check-identity", help="Randomized numeric equality of two expressions.")
    identity.add_argument("lhs")
    identity.add_argument("rhs")
    identity.add_argument("--family", choices=FAMILIES, default="geometric")
    identity.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    identity.add_argument("--trials", type=int, default=config.DEFAULT_TRIALS)
    identity.add_argument("--tol", type=float, default=config.DEFAULT_TOLERANCE)
    identity.add_argument(
        "--dim", type=_dimensions, default=list(config.DEFAULT_DIMENSIONS), help="e.g. 3,4,5"
    )
    identity.add_argument("--format", choices=["text", "json"], default="text")
    identity.set_defaults(handler=cmd_check_identity)

    sphere = commands.add_parser("sphere", help="Finite-difference check on the shrinking sphere.")
    sphere.add_argument("--dim", type=int, default=3)
    sphere.add_argument("--K0", type=float, default=1.0)
    sphere.add_argument("--t-grid", dest="t_grid", help="a:b:k, the k points a + (b-a) i/k, i = 1..k")
    sphere.add_argument("--step", type=float, default=config.DEFAULT_FD_STEP, help="Stencil step relative to t.")
    sphere.add_argument("--tol", type=float, default=config.DEFAULT_FD_TOLERANCE)
    sphere.add_argument("--format", choices=["text", "json", "csv"], default="text")
    sphere.add_argument("--output", help="Also write the report here: CSV with --format csv, JSON otherwise.")
    sphere.set_defaults(handler=cmd_sphere)

    quadratic = commands.add_parser("quadratic", help="Minimize the Harnack quadratic at a point.")
    quadratic.add_argument("point", help="Curvature point JSON.")
    quadratic.add_argument("--W", type=_vector, help="Comma-separated vector; e1 when omitted.")
    quadratic.add_argument("--format", choices=["text", "json"], default="text")
    quadratic.set_defaults(handler=cmd_quadratic)

    point = commands.add_parser("sample-point", help="Write a curvature point as JSON.")
    point.add_argument("--dim", type=int, default=3)
    point.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    point.add_argument("--t", type=float, default=1.0)
    point.add_argument("--sphere", type=float, metavar="K0", help="Shrinking sphere instead of a random model.")
    point.add_argument("--output")
    point.set_defaults(handler=cmd_sample_point)

    rules = commands.add_parser("rules", help="List the rule catalog.")
    rules.add_argument("--check", action="store_true", help="Test every rule check numerically.")
    rules.add_argument("--trials", type=int, default=config.DEFAULT_TRIALS)
    rules.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    rules.set_defaults(handler=cmd_rules)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
