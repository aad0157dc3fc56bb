"""
Subcommands of the ``pdro`` command line.

Every handler takes the parsed argparse namespace and returns an exit
code; ``main.py`` maps exceptions to exit codes.
"""
import argparse
import json
import sys

import numpy as np

from src.bench.coverage import check_bound_coverage
from src.bench.estimator import center_for
from src.bench.estimator_registry import EstimatorRegistry
from src.bench.experiment import ExperimentSpec, TrialRunner, build_problem, run_trials
from src.bench.methods import parse_method_id
from src.cli.data_loader import load_returns_csv, load_values, split_labels, load_table
from src.cli.results_table import ResultsTable, fmt, read_results, write_results
from src.constants.constants import DivergenceKind, ExitCode
from src.dist.bounds import EpsilonRule
from src.dist.estimators import (
    fit_beta_moment,
    fit_contextual_ols,
    fit_gaussian_full,
    fit_gaussian_mean,
    fit_gmm_labeled,
)
from src.dist.specs import EmpiricalDist
from src.dro.inner import chi2_worst_case, kl_worst_case, w1_worst_case_lipschitz
from src.dro.outer import SolverConfig, solve_outer
from src.utils.config_manager import WORKERS_ENV, RunConfig, load_config
from src.utils.exceptions import DataParseError, UsageError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

FIT_FAMILIES = ("normal", "normal-mean", "beta", "gmm", "context-ols")


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting on bad input."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def epsilon_rule_from_config(cfg: RunConfig) -> EpsilonRule:
    comp = cfg.comp_theta if cfg.comp_theta is not None else float(cfg.dim)
    return EpsilonRule(comp, cfg.alpha, cfg.e_apx, cfg.delta, cfg.eps_multiplier)


def experiment_spec_from_config(cfg: RunConfig) -> ExperimentSpec:
    covariate_rows = None
    if cfg.covariates_csv:
        covariate_rows = load_returns_csv(cfg.covariates_csv, cfg.covariates_percent)
    return ExperimentSpec(
        scenario=cfg.scenario,
        methods=tuple(cfg.methods),
        n_grid=tuple(cfg.n_grid),
        seeds=cfg.seeds,
        master_seed=cfg.master_seed,
        monte_carlo_ratio=cfg.monte_carlo_ratio,
        eps_grid=tuple(cfg.eps_grid),
        eps_mode=cfg.eps_mode,
        epsilon_rule=epsilon_rule_from_config(cfg),
        split_fraction=cfg.split_fraction,
        dim=cfg.dim,
        gamma=cfg.gamma,
        tau=cfg.tau,
        mu=cfg.mu,
        r=cfg.r,
        ball_radius=cfg.ball_radius,
        lam=cfg.lam,
        context_dim=cfg.context_dim,
        snr=cfg.snr,
        misspecified=cfg.misspecified,
        noise_std=cfg.noise_std,
        n_test_contexts=cfg.n_test_contexts,
        covariate_rows=covariate_rows,
        shift_c=cfg.shift_c,
        perturb_noise=cfg.perturb_noise,
        misspecification_noise=cfg.misspecification_noise,
        oracle_budget=cfg.oracle_budget,
        oracle_restarts=cfg.oracle_restarts,
        oracle_max_iter=cfg.oracle_max_iter,
        eval_budget=cfg.eval_budget,
        solver=SolverConfig(
            max_iter=cfg.max_iter, step_c=cfg.step_c, tol=cfg.tol,
            seed=cfg.master_seed, averaging=cfg.averaging,
        ),
        record_wallclock=cfg.record_wallclock,
    )


def _rows(array) -> list:
    return np.asarray(array, dtype=float).tolist()


def _fit_payload(args) -> dict:
    family = args.family
    if family == "context-ols":
        if not args.covariates:
            raise UsageError("--family context-ols needs --covariates")
        responses = load_returns_csv(args.data, args.percent)
        covariates = load_returns_csv(args.covariates, args.percent)
        fitted = fit_contextual_ols(covariates, responses)
        return {"family": family, "B": _rows(fitted.B), "cov": _rows(fitted.cov),
                "pseudo_inverse": bool(fitted.diagnostics["pseudo_inverse"])}

    columns, values = load_table(args.data)
    if args.percent:
        values = values / 100.0
    labels = None
    if family == "gmm":
        if not args.label_column:
            raise UsageError("--family gmm needs --label-column")
        # labels are integers, never percent-scaled
        _, raw = load_table(args.data)
        values, _ = split_labels(columns, values, args.label_column)
        _, labels = split_labels(columns, raw, args.label_column)
    samples = EmpiricalDist(values)

    if family == "normal":
        fitted = fit_gaussian_full(samples)
        return {"family": family, "mean": _rows(fitted.mean), "cov": _rows(fitted.cov)}
    if family == "normal-mean":
        if args.known_var is None:
            raise UsageError("--family normal-mean needs --known-var")
        fitted = fit_gaussian_mean(samples, args.known_var * np.eye(samples.dim))
        return {"family": family, "mean": _rows(fitted.mean), "cov": _rows(fitted.cov)}
    if family == "beta":
        fitted = fit_beta_moment(samples, args.r)
        return {
            "family": family, "eta": _rows(fitted.eta), "r": fitted.r,
            "clamped_coordinates": fitted.diagnostics["clamped_coordinates"],
            "clipped_atoms": fitted.diagnostics["clipped_atoms"],
        }
    fitted = fit_gmm_labeled(samples, labels)
    return {
        "family": family,
        "weights": _rows(fitted.weights),
        "components": [{"mean": _rows(c.mean), "cov": _rows(c.cov)} for c in fitted.components],
        "replicated_components": fitted.diagnostics["replicated_components"],
    }


def cmd_fit(args) -> int:
    print(json.dumps(_fit_payload(args), indent=2))
    return ExitCode.OK


def cmd_worst_case(args) -> int:
    values = load_values(args.values)
    if args.weights is None:
        weights = np.full(values.size, 1.0 / values.size)
    else:
        weights = load_values(args.weights)

    kind = DivergenceKind.normalize(args.kind)
    if kind == DivergenceKind.CHI2:
        result = chi2_worst_case(values, weights, args.eps)
    elif kind == DivergenceKind.KL:
        result = kl_worst_case(values, weights, args.eps)
    else:
        if args.lip is None:
            raise UsageError("--kind w1 needs --lip")
        if weights.size != values.size:
            raise UsageError(f"{values.size} values but {weights.size} weights")
        result = w1_worst_case_lipschitz(float(weights @ values), args.lip, args.eps)

    print(float(result.value))
    if args.show_weights and result.weights is not None:
        print(",".join(fmt(w) for w in result.weights))
    return ExitCode.OK


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    spec = experiment_spec_from_config(cfg)
    method = parse_method_id(args.method or spec.methods[0])
    n = args.n or spec.n_grid[0]

    instance, _ = build_problem(spec)
    runner = TrialRunner(spec, instance)
    estimator = runner.registry.get(method.estimator)
    data = runner.training_data(n, args.seed_index)
    eps = runner.choose_eps(method, estimator, data, n, args.seed_index)
    fitted = estimator.fit(data)
    # contextual fits are centered at the first test context
    center = center_for(estimator, fitted, spec.monte_carlo_ratio * n,
                        spec.seed_for("center", estimator.name, n, args.seed_index), instance.contexts[0])
    solution = solve_outer(instance.cost, instance.feasible, method.ambiguity(eps) or "erm", center, spec.solver)

    print(json.dumps({
        "method": method.method_id,
        "n": n,
        "eps": eps,
        "status": solution.status,
        "iterations": solution.iterations,
        "objective": solution.objective,
        "x": _rows(solution.x),
    }, indent=2))
    return ExitCode.OK


def _list_methods() -> int:
    print(EstimatorRegistry.get_instance().get_descriptors_json())
    return ExitCode.OK


def cmd_experiment(args) -> int:
    if args.list_methods:
        return _list_methods()
    if not args.config:
        raise UsageError("experiment needs --config")
    cfg = load_config(args.config)
    spec = experiment_spec_from_config(cfg)
    # flag beats PDRO_WORKERS, which ConfigManager already merged over the file
    workers = args.workers if args.workers is not None else cfg.workers
    output = args.output or cfg.output

    logger.info("running %s: %d methods x %d sizes x %d seeds on %d worker(s)",
                spec.scenario, len(spec.methods), len(spec.n_grid), spec.seeds, workers)
    results = run_trials(spec, workers=workers, progress=args.progress)
    write_results(ResultsTable(results), output)
    failed = sum(r.status != "ok" for r in results)
    if failed:
        logger.warning("%d of %d trials failed; their rows hold nan", failed, len(results))
    print(f"{len(results)} trials written to {output}")
    return ExitCode.OK


def cmd_check_bounds(args) -> int:
    cfg = load_config(args.config)
    spec = experiment_spec_from_config(cfg)
    report = check_bound_coverage(
        spec,
        epsilon_rule_from_config(cfg),
        args.seeds or cfg.coverage_seeds,
        estimator=args.estimator or cfg.coverage_estimator,
        kind=args.kind or cfg.coverage_kind,
        n=args.n or cfg.coverage_n,
    )
    covered = round(report.fraction * report.seeds)
    print(f"coverage {report.kind}: {fmt(report.fraction)} ({covered}/{report.seeds} seeds) eps={fmt(report.eps)}")
    return ExitCode.OK


def cmd_report(args) -> int:
    table = read_results(args.results)
    recomputed = table.aggregates()
    if table.stored_aggregates and [a.cells() for a in recomputed] != [a.cells() for a in table.stored_aggregates]:
        raise DataParseError(f"{args.results}: aggregate block does not match the trial rows")

    for agg in recomputed:
        label = f"{agg.scenario} {agg.method} n={agg.n}"
        print(f"{label:<48} objective {fmt(agg.objective_mean):>12}  gen_error {fmt(agg.gen_error_mean):>12}")
        print(f"{'':<48} {'':9} {fmt(agg.objective_sd):>12}  {'':9} {fmt(agg.gen_error_sd):>12}")
    return ExitCode.OK


def build_parser() -> CommandParser:
    parser = CommandParser(prog="pdro", description="Parametric distributionally robust optimization")
    parser.add_argument("--log-level", default="INFO", help="root log level")
    parser.add_argument("--log-dir", default=None, help="also write a rotated log file here")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CommandParser)

    p = sub.add_parser("fit", help="fit a parametric family to a sample file")
    p.add_argument("--family", choices=FIT_FAMILIES, required=True)
    p.add_argument("--data", required=True, help="CSV with a header and an index column")
    p.add_argument("--r", type=float, default=1.0, help="support radius of the Beta family")
    p.add_argument("--label-column", default=None, help="integer group column for gmm")
    p.add_argument("--covariates", default=None, help="covariate CSV for context-ols")
    p.add_argument("--known-var", type=float, default=None, help="per-coordinate variance for normal-mean")
    p.add_argument("--percent", action=argparse.BooleanOptionalAction, default=True,
                   help="divide sample values by 100 (on by default, --no-percent reads raw values)")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("worst-case", help="evaluate an inner worst-case solver")
    p.add_argument("--kind", choices=DivergenceKind.SOLVABLE, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--values", required=True, help="file or inline comma list of h values")
    p.add_argument("--weights", default=None, help="center weights, uniform when omitted")
    p.add_argument("--lip", type=float, default=None, help="Lipschitz constant for w1")
    p.add_argument("--show-weights", action="store_true", help="also print the worst-case weights")
    p.set_defaults(handler=cmd_worst_case)

    p = sub.add_parser("solve", help="solve one ERM / DRO problem from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--method", default=None, help="method id, default the first configured")
    p.add_argument("--n", type=int, default=None, help="training size, default the first of n_grid")
    p.add_argument("--seed-index", type=int, default=0)
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("experiment", help="run a benchmark config and write the results CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--output", default=None, help="results path, default from the config")
    p.add_argument("--workers", type=int, default=None, help=f"process count, overrides {WORKERS_ENV}")
    p.add_argument("--progress", action="store_true", help="show a progress bar")
    p.add_argument("--list-methods", action="store_true", help="list registered estimators and exit")
    p.set_defaults(handler=cmd_experiment)

    p = sub.add_parser("check-bounds", help="empirical coverage of the excess-risk bound")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--kind", choices=(DivergenceKind.W1, DivergenceKind.CHI2), default=None)
    p.add_argument("--estimator", default=None)
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(handler=cmd_check_bounds)

    p = sub.add_parser("report", help="print mean / sd per method and n from a results CSV")
    p.add_argument("--results", required=True)
    p.set_defaults(handler=cmd_report)
    return parser

