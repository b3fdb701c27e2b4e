import os
import argparse
import json
import sys
from typing import Any, Optional

import pandas as pd

from .config import Config
from .core.errors import EXIT_OK, EXIT_SOLVER_FAILURE, ConfigurationError, SocopfError
from .core.windcost import density_table, load_wind_samples
from .orchestrator import Orchestrator, SolveOptions
from .sessions import WindSession, parse_wind_spec

SUMMARY_LABELS = [
    ("status", "Status"),
    ("total_cost", "Total cost ($/h)"),
    ("fossil_cost", "Fossil cost ($/h)"),
    ("wind_cost", "Wind cost ($/h)"),
    ("wind_schedule_MW", "Scheduled wind (MW)"),
    ("objective_error_pct", "Objective error (%)"),
    ("max_v_error", "Max voltage error (p.u.)"),
    ("max_theta_error", "Max angle error (rad)"),
    ("max_P_flow_error", "Max P flow error (p.u.)"),
    ("max_gamma", "Max |Γ| (p.u.)"),
    ("iterations", "Iterations"),
    ("cut_rounds", "Cut rounds"),
    ("seconds", "Time (s)"),
]


def format_summary(summary: dict[str, Any]) -> str:
    """Plain-text table of a solve summary, cost shares next to the costs"""
    lines = [f"Case {summary.get('case', '?')}"]
    for key, label in SUMMARY_LABELS:
        if key not in summary:
            continue
        value = summary[key]
        if isinstance(value, float):
            text = f"{value:.6g}"
            share = summary.get(f"{key}_pct")
            if share is not None:
                text += f" ({share:.2f}%)"
        else:
            text = str(value)
        lines.append(f"  {label:<28} {text}")
    return "\n".join(lines)


def _write_table(frame: pd.DataFrame, path_stem: str, fmt: str) -> str:
    if fmt == "csv":
        path = f"{path_stem}.csv"
        frame.to_csv(path, index=False)
    else:
        path = f"{path_stem}.json"
        frame.to_json(path, orient="records", indent=2)
    return path


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigurationError(f"bad number list {text!r}") from e


def cmd_solve(args: argparse.Namespace, config: Config) -> int:
    requests = [parse_wind_spec(text, config) for text in args.wind]
    for request in requests:
        path = request.gmm_path or request.data_path
        if not os.path.exists(path):
            raise ConfigurationError(f"wind farm at bus {request.bus}: file not found: {path}")

    options = SolveOptions.from_config(
        config,
        gap_tolerance=args.tol_gap,
        gamma_tolerance=args.tol_gamma,
        max_outer_iterations=args.max_iter,
        max_cut_rounds=args.max_cut_rounds,
        flow_limit_segments=args.segments,
        init_mode=args.init,
        damping=args.damping,
        debug_dumps=args.debug_dumps,
    )
    orchestrator = Orchestrator(session_id=args.session, config=config)
    try:
        network = orchestrator.load_network(args.case, requests, load_scale=args.load_scale)
        solution = orchestrator.solve_wind_opf(network, options)
    finally:
        orchestrator.close()

    out_dir = os.path.join(args.out, network.name)
    os.makedirs(out_dir, exist_ok=True)
    solution.to_json(os.path.join(out_dir, "solution.json"))
    solution.trace.to_json(os.path.join(out_dir, "trace.json"))
    if solution.report is not None:
        solution.report.to_csv(out_dir)
    summary = solution.summary()
    _write_table(pd.DataFrame([summary]), os.path.join(out_dir, "summary"), args.format)
    if solution.wind:
        wind = pd.DataFrame([vars(w) | {"pwl_gap": w.pwl_gap} for w in solution.wind])
        _write_table(wind, os.path.join(out_dir, "wind"), args.format)

    print(format_summary(summary))
    print(f"Artifacts written to {out_dir}")
    return solution.status.exit_code


def cmd_fit_gmm(args: argparse.Namespace, config: Config) -> int:
    session = WindSession(config=config, base_dir=args.out)
    samples = load_wind_samples(args.data)
    fit = session.fit(samples, K=args.components, seed=args.seed, support_max=args.cap)
    path = session.save_model(fit.model, args.model_out)

    print(f"Log-likelihood: {fit.log_likelihood:.6f} ({fit.iterations} EM iterations)")
    components = pd.DataFrame(
        {"weight": fit.model.weights, "mean_MW": fit.model.means, "stddev_MW": fit.model.stddevs}
    )
    print(components.to_string(index_names=False))
    if args.density_out:
        density = density_table(fit.model, samples, bins=args.bins)
        density.to_csv(session.artifact_path(args.density_out), index=False)
    print(f"GMM written to {path}")
    return EXIT_OK


def cmd_windcost(args: argparse.Namespace, config: Config) -> int:
    session = WindSession(config=config, base_dir=args.out)
    model = session.load_model(args.gmm)
    wind = config.get("wind")
    k_L_values = _float_list(args.kl) if args.kl is not None else [wind["k_L"]]
    k_H_values = _float_list(args.kh) if args.kh is not None else [wind["k_H"]]

    if args.sensitivity:
        frame = session.sensitivity(model, k_L_values, k_H_values, P_max=args.cap)
        stem = "schedule_sensitivity"
    else:
        frame = session.cost_curves(model, k_L_values, k_H_values, points=args.points)
        stem = "wind_cost_curves"
    path = session.artifact_path(args.curve_out or f"{stem}.csv")
    frame.to_csv(path, index=False)
    print(f"{len(frame)} rows written to {path}")
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace, config: Config) -> int:
    options = SolveOptions.from_config(
        config,
        gap_tolerance=args.tol_gap,
        gamma_tolerance=args.tol_gamma,
        max_outer_iterations=args.max_iter,
        flow_limit_segments=args.segments,
        init_mode=args.init,
    )
    load_scales = _float_list(args.load_scales) if args.load_scales else None
    orchestrator = Orchestrator(session_id=args.session, config=config)
    try:
        table = orchestrator.run_benchmark(args.cases, options, load_scales, workers=args.workers)
    finally:
        orchestrator.close()

    os.makedirs(args.out, exist_ok=True)
    path = _write_table(table, os.path.join(args.out, "benchmark"), args.format)
    if len(table):
        print(table[["case", "load_scale", "status", "objective_error_pct", "max_v_error",
                     "max_theta_error", "iterations", "seconds"]].to_string(index=False))
    print(f"Benchmark table written to {path}")
    return EXIT_OK


def _write_error(out_dir: str, error: Exception) -> None:
    payload = error.to_dict() if isinstance(error, SocopfError) else {
        "error": type(error).__name__,
        "message": str(error),
    }
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "error.json"), "w") as f:
            json.dump(payload, f, indent=2)
    except OSError:
        pass
    print(json.dumps(payload), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to custom configuration file", default="config.yaml")
    common.add_argument("--out", help="Output directory", default=None)
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--seed", type=int, default=None, help="Seed for GMM fitting")
    common.add_argument("--session", help="Session id used for the log file name")

    solve_opts = argparse.ArgumentParser(add_help=False)
    solve_opts.add_argument("--tol-gap", type=float, default=None, help="Relaxation gap tolerance (p.u.)")
    solve_opts.add_argument("--tol-gamma", type=float, default=None, help="Γ convergence limit (p.u.)")
    solve_opts.add_argument("--max-iter", type=int, default=None, help="Outer iteration cap")
    solve_opts.add_argument("--segments", type=int, default=None, help="Flow-limit segments M")
    solve_opts.add_argument("--init", choices=["flat", "dcopf"], default=None)

    parser = argparse.ArgumentParser(prog="wind-socopf", description="Wind-integrated SOCA-OPF")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common, solve_opts], help="Solve one case")
    solve.add_argument("case", help="MATPOWER case file or bundled case name")
    solve.add_argument("--wind", action="append", default=[],
                       help="bus=<id>,kl=<v>,kh=<v>,pf=<v>,{gmm=<path>|data=<path>}[,cap=<MW>][,segments=<L>]")
    solve.add_argument("--max-cut-rounds", type=int, default=None)
    solve.add_argument("--damping", type=float, default=None)
    solve.add_argument("--load-scale", type=float, default=1.0)
    solve.add_argument("--debug-dumps", action="store_true", help="Dump every conic program")
    solve.set_defaults(handler=cmd_solve)

    fit = sub.add_parser("fit-gmm", parents=[common], help="Fit a GMM to wind samples")
    fit.add_argument("--data", required=True, help="CSV of wind power samples (MW)")
    fit.add_argument("-K", "--components", type=int, default=None)
    fit.add_argument("--cap", type=float, default=None, help="Farm capacity (MW)")
    fit.add_argument("--model-out", default="gmm.json")
    fit.add_argument("--density-out", default=None, help="CSV of histogram vs fitted density")
    fit.add_argument("--bins", type=int, default=50)
    fit.set_defaults(handler=cmd_fit_gmm)

    cost = sub.add_parser("windcost", parents=[common], help="Wind cost curves from a GMM")
    cost.add_argument("--gmm", required=True, help="GMM JSON")
    cost.add_argument("--kl", default=None, help="Comma-separated k_L values")
    cost.add_argument("--kh", default=None, help="Comma-separated k_H values")
    cost.add_argument("--points", type=int, default=None)
    cost.add_argument("--cap", type=float, default=None)
    cost.add_argument("--sensitivity", action="store_true", help="Optimal schedule per (k_L, k_H)")
    cost.add_argument("--curve-out", default=None)
    cost.set_defaults(handler=cmd_windcost)

    bench = sub.add_parser("benchmark", parents=[common, solve_opts], help="Accuracy table over cases")
    bench.add_argument("cases", nargs="*", help="Case files or bundled case names")
    bench.add_argument("--load-scales", default=None, help="Comma-separated load multipliers")
    bench.add_argument("--workers", type=int, default=1)
    bench.set_defaults(handler=cmd_benchmark)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = args.out or os.getenv("SOCOPF_OUT_DIR", "results")

    try:
        overrides = {"wind": {"seed": args.seed}} if args.seed is not None else None
        config = Config(args.config, overrides)
        args.out = args.out or config.get("output", "dir")
        args.format = args.format or config.get("output", "format")
        out_dir = args.out
        return args.handler(args, config)
    except SocopfError as e:
        _write_error(out_dir, e)
        return e.exit_code
    except Exception as e:
        _write_error(out_dir, e)
        return EXIT_SOLVER_FAILURE


if __name__ == "__main__":
    sys.exit(main())
