"""
Benchmark pipelines: scenario instances, per-trial method runs and the
parallel trial driver.

A run draws its scenario instance (market, shift, anchor or B), the
evaluation atoms and the oracle once from the master seed. Each trial
(n, seed index) draws one training sample that every method shares;
Monte Carlo centers are seeded by the estimator, so P-ERM and P-DRO at
eps = 0 solve the same problem.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.bench.epsilon import select_epsilon, theoretical_epsilon
from src.bench.estimator import TrainingData, center_for, uses_context
from src.bench.estimator_registry import EstimatorRegistry
from src.bench.generators import (
    ContextualSpec,
    ShiftSpec,
    gen_beta_market,
    gen_contextual_instance,
    gen_quadratic_instance,
    shifted_test_distribution,
)
from src.bench.methods import MethodSpec, parse_method_id
from src.bench.oracle import Evaluator, OracleResult, build_evaluator, estimate_gen_error, oracle_solution
from src.constants.constants import Defaults, Scenario, SignalToNoise, TrialStatus
from src.cost.complexity import comp_hypothesis_bound, sup_bound
from src.cost.costs import DownsideRiskCost
from src.cost.feasible_sets import SimplexFloorSet
from src.dist.bounds import EpsilonRule
from src.dist.sampling import sample_atoms
from src.dist.specs import UniformNoiseDist
from src.dro.objectives import monte_carlo_requirement
from src.dro.outer import SolverConfig, solve_outer
from src.utils.common_utils import derive_seed, make_rng, stopwatch
from src.utils.exceptions import ConfigurationError
from src.utils.logging_config import configure_worker_logging, get_logger

logger = get_logger(__name__)

EPS_MODES = ("cv", "rule")


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str
    methods: Tuple[str, ...]
    n_grid: Tuple[int, ...]
    seeds: int
    master_seed: int = 0
    monte_carlo_ratio: int = Defaults.MONTE_CARLO_RATIO
    eps_grid: Tuple[float, ...] = (0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0)
    eps_mode: str = "cv"
    epsilon_rule: Optional[EpsilonRule] = None
    split_fraction: float = 0.8
    # portfolio cost and decision set
    dim: int = 10
    gamma: float = 2.0
    tau: float = 2.0
    mu: float = 1.0
    r: float = 1.0
    # quadratic instance
    ball_radius: float = 10.0
    lam: float = 0.2
    # contextual instance
    context_dim: int = 3
    snr: str = SignalToNoise.HIGH
    misspecified: bool = True
    noise_std: float = 0.1
    n_test_contexts: int = 3
    covariate_rows: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    # shift and misspecification
    shift_c: Optional[float] = None
    perturb_noise: float = 2.0
    misspecification_noise: float = Defaults.MISSPECIFICATION_AMPLITUDE
    # oracle and evaluation
    oracle_budget: int = Defaults.ORACLE_BUDGET
    oracle_restarts: int = Defaults.ORACLE_RESTARTS
    oracle_max_iter: int = 1000
    eval_budget: int = Defaults.EVAL_BUDGET
    solver: SolverConfig = SolverConfig()
    record_wallclock: bool = False

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "eps_grid", tuple(float(e) for e in self.eps_grid))
        problems = []
        if self.scenario not in Scenario.ALL:
            problems.append(f"scenario must be one of {', '.join(Scenario.ALL)}, got {self.scenario!r}")
        if not self.methods:
            problems.append("methods must not be empty")
        if not self.n_grid or min(self.n_grid) < 1:
            problems.append("n_grid must be a nonempty list of positive integers")
        if self.seeds < 1:
            problems.append("seeds must be >= 1")
        if self.monte_carlo_ratio < 1:
            problems.append("monte_carlo_ratio must be >= 1")
        if self.eps_mode not in EPS_MODES:
            problems.append(f"eps_mode must be one of {EPS_MODES}")
        if self.eps_mode == "cv" and not self.eps_grid:
            problems.append("eps_grid must not be empty")
        if self.eps_mode == "rule" and self.epsilon_rule is None:
            problems.append("eps_mode=rule needs an epsilon rule")
        if self.n_test_contexts < 1:
            problems.append("n_test_contexts must be >= 1")
        registry = EstimatorRegistry.get_instance()
        for method_id in self.methods:
            try:
                method = parse_method_id(method_id)
                estimator = registry.get(method.estimator)
            except ConfigurationError as exc:
                problems.append(str(exc))
                continue
            if estimator.contextual and self.scenario != Scenario.CONTEXTUAL:
                problems.append(f"method {method_id} needs the {Scenario.CONTEXTUAL} scenario")
            if self.scenario == Scenario.CONTEXTUAL and not estimator.contextual:
                problems.append(f"method {method_id} is not a contextual estimator")
        if problems:
            raise ConfigurationError("invalid experiment", problems)

    @property
    def parsed_methods(self) -> List[MethodSpec]:
        return [parse_method_id(m) for m in self.methods]

    def seed_for(self, *tags) -> int:
        return derive_seed(self.master_seed, self.scenario, *tags)


@dataclass(frozen=True)
class TrialResult:
    scenario: str
    method: str
    n: int
    seed: int
    eps: float
    objective: float
    gen_error: float
    wallclock_ms: float = 0.0
    status: str = TrialStatus.OK


@dataclass
class ScenarioInstance:
    """Everything a trial needs that is shared across the whole run."""
    cost: object
    feasible: object
    train_truth: object
    contexts: List[Optional[np.ndarray]]
    evaluators: List[Evaluator]
    oracles: List[OracleResult]
    contextual: object = None
    notes: dict = field(default_factory=dict)


def _truths(spec: ExperimentSpec):
    """(cost, feasible, train truth, test truth, contextual instance, notes)."""
    seed = spec.seed_for("instance")
    if spec.scenario == Scenario.QUADRATIC_BALL:
        inst = gen_quadratic_instance(spec.dim, spec.lam, spec.ball_radius, seed)
        return inst.cost, inst.feasible, inst.truth, inst.truth, None, {}

    cost = DownsideRiskCost(spec.mu, spec.gamma)
    feasible = SimplexFloorSet(spec.tau, spec.dim)
    if spec.scenario == Scenario.CONTEXTUAL:
        contextual = gen_contextual_instance(
            ContextualSpec(spec.dim, spec.context_dim, spec.snr, spec.misspecified,
                           spec.noise_std ** 2 * np.eye(spec.dim)),
            seed,
            spec.covariate_rows,
        )
        return cost, feasible, contextual.truth, contextual.truth, contextual, {}

    market = gen_beta_market(spec.dim, seed, spec.r)
    notes = {"eta": market.eta.tolist()}
    if spec.scenario == Scenario.SHIFTED:
        shift_c = spec.shift_c
        if shift_c is None:
            shift_c = float(make_rng(spec.seed_for("shift")).uniform(-1.0, 1.0))
        notes["shift_c"] = shift_c
        test = shifted_test_distribution(market, ShiftSpec(shift_c, spec.perturb_noise))
        return cost, feasible, market, test, None, notes
    if spec.scenario == Scenario.MISSPECIFIED:
        truth = UniformNoiseDist(market, spec.misspecification_noise)
        return cost, feasible, truth, truth, None, notes
    return cost, feasible, market, market, None, notes


def build_problem(spec: ExperimentSpec):
    """
    The run's instance without evaluation atoms or oracles.

    Returns:
        Tuple[ScenarioInstance, object]: the instance and the test truth
    """
    cost, feasible, train_truth, test_truth, contextual, notes = _truths(spec)
    if contextual is not None:
        rows = contextual.covariates.draw(spec.n_test_contexts, spec.seed_for("test-contexts"))
        contexts = list(rows)
    else:
        contexts = [None]
    return ScenarioInstance(cost, feasible, train_truth, contexts, [], [], contextual, notes), test_truth


def _requirement_eps(spec: ExperimentSpec, n: int) -> float:
    if spec.epsilon_rule is not None:
        return theoretical_epsilon(spec.epsilon_rule, n)
    positive = [eps for eps in spec.eps_grid if eps > 0]
    return min(positive) if positive else 0.0


def monte_carlo_requirements(spec: ExperimentSpec, instance: ScenarioInstance) -> dict:
    """
    Monte Carlo size indicator per training size n, with M the portfolio
    sup bound, std* the spread of h(x*; ·) on the evaluation atoms and
    Comp(H) the polynomial VC bound.

    Only non-contextual portfolio scenarios with an integer exponent have
    the constants; every other run gets an empty mapping.
    """
    cost, feasible = instance.cost, instance.feasible
    if (instance.contextual is not None or not isinstance(cost, DownsideRiskCost)
            or not isinstance(feasible, SimplexFloorSet) or cost.gamma != int(cost.gamma)):
        return {}
    evaluator, oracle = instance.evaluators[0], instance.oracles[0]
    if evaluator.atoms is None:
        return {}
    values = cost.eval(oracle.x_star, evaluator.atoms.atoms)
    weights = evaluator.atoms.weights
    std_star = float(np.sqrt(weights @ (values - weights @ values) ** 2))
    bound = sup_bound(cost, feasible, spec.r)
    comp_h = comp_hypothesis_bound(feasible.dim, int(cost.gamma))
    return {n: monte_carlo_requirement(bound, std_star, _requirement_eps(spec, n), comp_h) for n in spec.n_grid}


def build_instance(spec: ExperimentSpec) -> ScenarioInstance:
    """Draw the run's instance, evaluation atoms and oracle(s)."""
    instance, test_truth = build_problem(spec)
    oracle_cfg = SolverConfig(max_iter=spec.oracle_max_iter, tol=1e-9)
    for t, context in enumerate(instance.contexts):
        instance.evaluators.append(build_evaluator(
            instance.cost, test_truth, spec.eval_budget, spec.seed_for("eval", t), context,
        ))
        instance.oracles.append(oracle_solution(
            instance.cost, instance.feasible, test_truth, spec.oracle_budget, spec.oracle_restarts,
            spec.seed_for("oracle", t), oracle_cfg, context,
        ))
    requirements = monte_carlo_requirements(spec, instance)
    if requirements:
        instance.notes["monte_carlo_requirement"] = requirements
        for n, required in requirements.items():
            logger.info("n=%d: %d center atoms, Monte Carlo requirement %.3g",
                        n, spec.monte_carlo_ratio * n, required)
    logger.info("%s instance ready: %s", spec.scenario, instance.notes or "no extra parameters")
    return instance


class TrialRunner:
    """Runs every method of one (n, seed index) trial on a shared training sample."""

    def __init__(self, spec: ExperimentSpec, instance: ScenarioInstance):
        self.spec = spec
        self.instance = instance
        self.registry = EstimatorRegistry.with_builtins(r=spec.r)
        self.methods = spec.parsed_methods

    def training_data(self, n: int, seed_index: int) -> TrainingData:
        seed = self.spec.seed_for("train", n, seed_index)
        if self.instance.contextual is not None:
            Y, X = self.instance.contextual.draw_pairs(n, seed)
            return TrainingData(X, Y)
        return TrainingData(sample_atoms(self.instance.train_truth, n, seed))

    def choose_eps(self, method: MethodSpec, estimator, data: TrainingData, n: int, seed_index: int) -> float:
        spec = self.spec
        if not method.is_dro:
            return 0.0
        if method.fixed_eps is not None:
            return method.fixed_eps
        if spec.eps_mode == "rule":
            return theoretical_epsilon(spec.epsilon_rule, n)
        return select_epsilon(
            spec.eps_grid, method, estimator, data, self.instance.cost, self.instance.feasible,
            spec.solver, spec.monte_carlo_ratio, spec.split_fraction,
            spec.seed_for(method.method_id, n, seed_index),
        )

    def run_method(self, method: MethodSpec, data: TrainingData, n: int, seed_index: int) -> TrialResult:
        spec, inst = self.spec, self.instance
        estimator = self.registry.get(method.estimator)
        center_seed = spec.seed_for("center", estimator.name, n, seed_index)

        eps = math.nan
        try:
            with stopwatch() as clock:
                eps = self.choose_eps(method, estimator, data, n, seed_index)
                objective = method.ambiguity(eps) or "erm"
                fitted = estimator.fit(data)
                m = spec.monte_carlo_ratio * n
                per_context = uses_context(estimator, fitted)
                shared = None
                z_values, gaps = [], []
                for t, context in enumerate(inst.contexts):
                    if per_context or shared is None:
                        seed = center_seed if context is None else derive_seed(center_seed, "context", t)
                        center = center_for(estimator, fitted, m, seed, context)
                        shared = solve_outer(inst.cost, inst.feasible, objective, center, spec.solver)
                    z_values.append(inst.evaluators[t].objective(shared.x))
                    gaps.append(estimate_gen_error(shared.x, inst.evaluators[t], inst.oracles[t]))
        except Exception as exc:
            logger.error_exc("trial %s n=%d seed=%d failed: %s", method.method_id, n, seed_index, exc)
            return TrialResult(spec.scenario, method.method_id, n, seed_index, eps, math.nan, math.nan,
                               0.0, TrialStatus.FAILED)

        wallclock = clock["ms"] if spec.record_wallclock else 0.0
        return TrialResult(
            spec.scenario, method.method_id, n, seed_index, float(eps),
            float(np.mean(z_values)), float(np.mean(gaps)), wallclock,
        )

    def run(self, n: int, seed_index: int) -> List[TrialResult]:
        data = self.training_data(n, seed_index)
        return [self.run_method(method, data, n, seed_index) for method in self.methods]


_WORKER_RUNNER: Optional[TrialRunner] = None


def _init_worker(spec: ExperimentSpec, instance: ScenarioInstance, log_level: int):
    global _WORKER_RUNNER
    configure_worker_logging(log_level)
    _WORKER_RUNNER = TrialRunner(spec, instance)


def _run_in_worker(task: Tuple[int, int]) -> List[TrialResult]:
    return _WORKER_RUNNER.run(*task)


def canonical_order(spec: ExperimentSpec, results: Sequence[TrialResult]) -> List[TrialResult]:
    method_rank = {parse_method_id(m).method_id: i for i, m in enumerate(spec.methods)}
    return sorted(results, key=lambda r: (method_rank[r.method], r.n, r.seed))


def run_trials(spec: ExperimentSpec, workers: int = 1, progress: bool = False) -> List[TrialResult]:
    """
    Run every (method, n, seed index) trial of ``spec``.

    Args:
        spec: experiment description including the master seed
        workers: process count; results do not depend on it
        progress: show a tqdm progress bar

    Returns:
        List[TrialResult]: ordered by (method as listed, n, seed index)
    """
    instance = build_instance(spec)
    tasks = [(n, s) for n in spec.n_grid for s in range(spec.seeds)]
    results: List[TrialResult] = []
    bar = tqdm(total=len(tasks), desc=spec.scenario, unit="trial", disable=not progress)
    try:
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                     initargs=(spec, instance, logging.getLogger().getEffectiveLevel())) as pool:
                futures = [pool.submit(_run_in_worker, task) for task in tasks]
                for future in as_completed(futures):
                    results.extend(future.result())
                    bar.update(1)
        else:
            runner = TrialRunner(spec, instance)
            for task in tasks:
                results.extend(runner.run(*task))
                bar.update(1)
    finally:
        bar.close()

    failed = sum(r.status == TrialStatus.FAILED for r in results)
    if failed:
        logger.warning("%d of %d trial records failed", failed, len(results))
    return canonical_order(spec, results)
