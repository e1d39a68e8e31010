"""コマンドライン front end

サブコマンド: exponents / orbit / bifurcation / solve / verify / critical / lambda-star / sweep。
要約は標準出力に JSON で、データは --out（solve は --out-dir）に書く。
終了コード: 0 成功、2 入力検証、3 指数域、4 数値計算。
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

from .closed_forms import critical_solutions
from .config import SolverConfig
from .errors import DomainError, HessianError
from .export import dumps_json, metadata, read_solution, write_table
from .multiplicity import (
    bifurcation_curve,
    count_solutions,
    estimate_lambda_star,
    lambda_star_lower_bound,
    solve_all,
    turning_points,
)
from .params import (
    ProblemParams,
    c_nk,
    make_params,
    mu_star,
    q_jl,
    q_singular,
    q_star,
    validate_dimension,
)
from .phase_plane import to_phase, winding_count
from .radial_ivp import integrate_ivp
from .solution import RadialSolution, sampled_residuals

logger = logging.getLogger(__name__)

OUT_FORMATS = ("json", "csv")


@dataclass(frozen=True)
class RunConfig:
    """1回の実行の設定（乱数を使わないので同じ設定なら同じ出力）"""
    command: str
    params: Optional[ProblemParams]
    solver: SolverConfig
    s_max: Optional[float] = None
    out_format: str = "json"
    out_path: Optional[Path] = None
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    def meta(self, **extra) -> dict:
        params = {} if self.params is None else self.params.to_dict()
        run = {"s_max": self.s_max, "tol": self.solver.tol}
        run.update(self.extra)
        return metadata(self.command, params, run=run, **extra)


def _add_problem_args(parser: argparse.ArgumentParser, need_q: bool = True,
                      need_lambda: bool = False) -> None:
    parser.add_argument("--n", type=int, required=True, help="dimension")
    parser.add_argument("--k", type=int, required=True, help="Hessian order")
    if need_q:
        parser.add_argument("--q", type=float, required=True, help="power exponent")
    if need_lambda:
        parser.add_argument("--lambda", dest="lam", type=float, required=True,
                            help="physical lambda")


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", dest="out_format", choices=OUT_FORMATS, default="json")
    parser.add_argument("--out", dest="out_path", type=Path, default=None,
                        help="data file (omitted: summary only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="khessian",
        description="Radial k-Hessian problem S_k(D^2 u) = lambda (1-u)^q on the unit ball")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log INFO (-v) or DEBUG (-vv) to stderr")
    parser.add_argument("--tol", type=float, default=None,
                        help="integration tolerance (default: $HF_TOL or 1e-10)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="critical exponents and constants")
    _add_problem_args(p, need_q=False)
    p.add_argument("--q", type=float, default=None)

    p = sub.add_parser("orbit", help="Emden-Fowler phase orbit (t, y, z)")
    _add_problem_args(p)
    p.add_argument("--s-max", type=float, default=None)
    _add_output_args(p)

    p = sub.add_parser("bifurcation", help="branch (s, lambda, A)")
    _add_problem_args(p)
    p.add_argument("--s-max", type=float, default=None)
    _add_output_args(p)

    p = sub.add_parser("solve", help="every solution for a given lambda")
    _add_problem_args(p, need_lambda=True)
    p.add_argument("--s-max", type=float, default=None)
    p.add_argument("--format", dest="out_format", choices=OUT_FORMATS, default="json")
    p.add_argument("--out-dir", dest="out_path", type=Path, default=None)

    p = sub.add_parser("critical", help="closed-form solutions at q = q*(k)")
    _add_problem_args(p, need_q=False, need_lambda=True)
    p.add_argument("--format", dest="out_format", choices=OUT_FORMATS, default="json")
    p.add_argument("--out-dir", dest="out_path", type=Path, default=None)

    p = sub.add_parser("verify", help="residuals of a solution file")
    p.add_argument("path", type=Path)
    p.add_argument("--threshold", type=float, default=None,
                   help="exit 4 when a residual exceeds this value")

    p = sub.add_parser("lambda-star", help="estimate lambda* by Picard bisection")
    _add_problem_args(p)
    p.add_argument("--rtol", type=float, default=None)

    p = sub.add_parser("sweep", help="multiplicity over several q")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=float, nargs="+", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--s-max", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """引数を検証して RunConfig にする"""
    solver = SolverConfig.from_env()
    if args.tol is not None:
        solver = solver.with_overrides(tol=args.tol)
    params = None
    command = args.command
    if command in ("orbit", "bifurcation", "solve", "lambda-star"):
        params = make_params(args.n, args.k, args.q, getattr(args, "lam", None))
    elif command == "exponents":
        if args.q is None:
            validate_dimension(args.n, args.k)
        else:
            params = make_params(args.n, args.k, args.q)
    elif command == "critical":
        n, k = validate_dimension(args.n, args.k)
        params = make_params(n, k, q_star(n, k), args.lam)
    elif command == "sweep":
        for q in args.q:
            make_params(args.n, args.k, q, args.lam)
        if args.jobs < 1:
            raise DomainError([f"--jobs must be >= 1 (jobs={args.jobs})"])
    s_max = getattr(args, "s_max", None)
    if s_max is not None and not s_max > solver.s_init:
        raise DomainError([f"--s-max must exceed s_init={solver.s_init}"])
    return RunConfig(
        command=command,
        params=params,
        solver=solver,
        s_max=s_max,
        out_format=getattr(args, "out_format", "json"),
        out_path=getattr(args, "out_path", None),
        jobs=getattr(args, "jobs", 1),
    )


def cmd_exponents(args, run: RunConfig) -> dict:
    n, k = validate_dimension(args.n, args.k)
    report = {
        "n": n,
        "k": k,
        "c_nk": str(c_nk(n, k)),
        "q_star": q_star(n, k),
        "q_star_exact": str(Fraction((n + 2) * k, n - 2 * k)),
        "q_singular": q_singular(n, k),
        "q_jl": q_jl(n, k),
        "mu_star": float(mu_star(n, k)),
        "mu_star_exact": str(mu_star(n, k)),
    }
    if run.params is not None:
        c = run.params.constants
        regime = run.params.regime
        report.update({
            "q": run.params.q,
            "tau": c.tau,
            "a": c.a,
            "lambda_tilde": c.lambda_tilde,
            "lambda_singular": float(c.c_nk) * c.lambda_tilde,
            "discriminant": c.discriminant,
            "trace_J": c.trace_J,
            "det_J": c.det_J,
            "eigenvalues": [[z.real, z.imag] for z in regime.eigenvalues],
            "regime": regime.tag.value,
            "eigen_case": regime.eigen_case.value,
        })
    return report


def cmd_orbit(args, run: RunConfig) -> dict:
    profile = integrate_ivp(run.params, s_max=run.s_max, config=run.solver)
    orbit = to_phase(profile)
    try:
        winding = winding_count(orbit, config=run.solver)
        winding_note = ""
    except HessianError as exc:
        winding, winding_note = None, str(exc)
    summary = {
        "regime": orbit.regime.to_dict(),
        "equilibria": {"O1": list(orbit.o1), "O2": list(orbit.o2)},
        "winding": winding,
        "winding_note": winding_note,
        "samples": int(orbit.t.size),
        "terminal": [float(orbit.y[-1]), float(orbit.z[-1])],
    }
    if run.out_path is not None:
        data = {"t": orbit.t, "y": orbit.y, "z": orbit.z}
        write_table(run.out_path, run.out_format, run.meta(summary=summary), data, ("t", "y", "z"))
        summary["file"] = str(run.out_path)
    return summary


def cmd_bifurcation(args, run: RunConfig) -> dict:
    profile = integrate_ivp(run.params, s_max=run.s_max, config=run.solver)
    curve = bifurcation_curve(run.params, profile=profile, config=run.solver)
    limit = float(c_nk(run.params.n, run.params.k)) * run.params.constants.lambda_tilde
    summary = {
        "conventions": curve.conventions,
        "regime": run.params.regime.tag.value,
        "branch_limit_physical": limit,
        "turning_points": [list(p) for p in turning_points(curve, run.solver)],
        "terminal": {"s": float(curve.s[-1]), "lambda_physical": float(curve.lambda_physical[-1]),
                     "A": float(curve.A[-1])},
        "samples": int(curve.s.size),
        "resolved_samples": int(curve.resolved(run.solver.resolution_floor).s.size),
    }
    if run.out_path is not None:
        columns = ("s", "lambda_rescaled", "lambda_physical", "A")
        data = {c: getattr(curve, c) for c in columns}
        write_table(run.out_path, run.out_format, run.meta(), data, columns)
        summary["file"] = str(run.out_path)
    return summary


def _write_solutions(run: RunConfig, solutions: Sequence[RadialSolution]) -> List[str]:
    if run.out_path is None:
        return []
    run.out_path.mkdir(parents=True, exist_ok=True)
    files = []
    for solution in solutions:
        path = run.out_path / f"solution_{solution.index}.{run.out_format}"
        header = {k: v for k, v in solution.to_dict().items() if k not in ("r", "u", "params")}
        meta = metadata(run.command, solution.params.to_dict(), solution=header)
        if run.out_format == "json":
            write_table(path, "json", meta, solution.to_dict(), ())
        else:
            write_table(path, "csv", meta, {"r": solution.r, "u": solution.u}, ("r", "u"))
        files.append(str(path))
    return files


def _solutions_summary(report: dict, solutions: Sequence[RadialSolution], files) -> dict:
    report = dict(report)
    report["solutions"] = [
        {"index": s.index, "origin_value": s.origin_value, "s0": s.s0,
         "lambda_physical": s.lambda_physical, "residuals": s.residuals}
        for s in solutions
    ]
    report["files"] = list(files)
    return report


def cmd_solve(args, run: RunConfig) -> dict:
    report, solutions = solve_all(run.params, run.params.lam, s_max=run.s_max, config=run.solver)
    return _solutions_summary(report.to_dict(), solutions, _write_solutions(run, solutions))


def cmd_critical(args, run: RunConfig) -> dict:
    solutions = critical_solutions(run.params.lam, run.params.n, run.params.k, config=run.solver)
    report = {"lambda_physical": run.params.lam, "count": len(solutions),
              "mu_star": float(mu_star(run.params.n, run.params.k))}
    return _solutions_summary(report, solutions, _write_solutions(run, solutions))


def cmd_verify(args, run: RunConfig) -> dict:
    solution = read_solution(args.path)
    residuals = sampled_residuals(solution)
    summary = {"file": str(args.path), "params": solution.params.to_dict(),
               "lambda_physical": solution.lambda_physical, "residuals": residuals}
    if args.threshold is not None:
        failed = sorted(name for name, value in residuals.items() if value > args.threshold)
        summary["threshold"] = args.threshold
        summary["failed"] = failed
    return summary


def cmd_lambda_star(args, run: RunConfig) -> dict:
    estimate = estimate_lambda_star(run.params, args.rtol, config=run.solver)
    data = estimate.to_dict()
    data["lower_bound"] = lambda_star_lower_bound(run.params.n, run.params.k, run.params.q)
    data["lambda_tilde"] = run.params.constants.lambda_tilde
    data["lambda_singular"] = float(run.params.constants.c_nk) * run.params.constants.lambda_tilde
    return data


def sweep_one(task) -> dict:
    """sweep の1点（別プロセスから呼べるようモジュール直下に置く）"""
    n, k, q, lam, s_max, tol = task
    config = SolverConfig.from_env().with_overrides(tol=tol)
    try:
        params = make_params(n, k, q, lam)
        report = count_solutions(params, lam, s_max=s_max, config=config)
        return dict(report.to_dict(), q=q)
    except HessianError as exc:
        return dict(exc.to_dict(), q=q)


def cmd_sweep(args, run: RunConfig) -> dict:
    tasks = [(args.n, args.k, q, args.lam, run.s_max, run.solver.tol) for q in args.q]
    if run.jobs > 1:
        with ProcessPoolExecutor(max_workers=run.jobs) as pool:
            results = list(pool.map(sweep_one, tasks))
    else:
        results = [sweep_one(task) for task in tasks]
    return {"n": args.n, "k": args.k, "lambda_physical": args.lam, "results": results}


COMMANDS = {
    "exponents": cmd_exponents,
    "orbit": cmd_orbit,
    "bifurcation": cmd_bifurcation,
    "solve": cmd_solve,
    "critical": cmd_critical,
    "verify": cmd_verify,
    "lambda-star": cmd_lambda_star,
    "sweep": cmd_sweep,
}


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    """CLI を実行して終了コードを返す"""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.verbose)
    try:
        run = build_run_config(args)
        summary = COMMANDS[args.command](args, run)
    except HessianError as exc:
        stderr.write(dumps_json(exc.to_dict()))
        return exc.exit_code
    stdout.write(dumps_json(summary))
    if args.command == "verify" and summary.get("failed"):
        return 4
    return 0
