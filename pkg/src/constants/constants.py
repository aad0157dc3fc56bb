class DivergenceKind:
    """Ambiguity metrics"""
    CHI2 = "chi2"
    KL = "kl"
    TV = "tv"
    W1 = "w1"
    W2 = "w2"
    H2 = "h2"

    ALL = (CHI2, KL, TV, W1, W2)
    # metrics the inner solvers can optimise over
    SOLVABLE = (CHI2, KL, W1)

    @classmethod
    def normalize(cls, tag: str) -> str:
        value = str(tag).strip().lower().replace("²", "2").replace("-", "")
        if value in ("chisq", "chisquare", "x2"):
            value = cls.CHI2
        if value not in cls.ALL + (cls.H2,):
            raise ValueError(f"unknown divergence kind: {tag}")
        return value


class ObjectiveKind:
    """Outer objective"""
    ERM = "erm"
    DRO = "dro"


class SolveStatus:
    """Outer solver termination"""
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"


class TrialStatus:
    OK = "ok"
    FAILED = "failed"


class Scenario:
    """Benchmark scenarios"""
    BETA_PORTFOLIO = "BetaPortfolio"
    QUADRATIC_BALL = "QuadraticBall"
    SHIFTED = "Shifted"
    MISSPECIFIED = "Misspecified"
    CONTEXTUAL = "Contextual"

    ALL = (BETA_PORTFOLIO, QUADRATIC_BALL, SHIFTED, MISSPECIFIED, CONTEXTUAL)


class SignalToNoise:
    HIGH = "high"
    LOW = "low"

    # half-width of the U(-b, b) law of the entries of B
    B_HALF_WIDTH = {HIGH: 0.5, LOW: 0.1}


class ExitCode:
    OK = 0
    USAGE = 1
    RUNTIME = 2


class Defaults:
    """Numerical constants shared across modules"""
    # scaled Beta family: eta_i in [1.5, 3], second shape fixed at 2
    ETA_LOW = 1.5
    ETA_HIGH = 3.0
    BETA_SECOND = 2.0

    SIMPLEX_TOL = 1e-12
    SYMMETRY_TOL = 1e-10
    PSD_TOL = 1e-10
    GRAM_CONDITION_LIMIT = 1e12
    DEGENERATE_GAMMA_MEAN = 1e-9

    # labelled mixtures: groups below this size replicate their raw atoms
    MIN_GROUP_SIZE = 10

    MONTE_CARLO_RATIO = 50
    ORACLE_BUDGET = 500_000
    ORACLE_RESTARTS = 5
    EVAL_BUDGET = 200_000

    STALL_WINDOW = 50
    GEN_ERROR_SLACK = 5e-3
    COVERAGE_SLACK = 1e-3

    # synthetic monthly 3-factor covariate scales
    FACTOR_SCALES = (0.2, 0.15, 0.1)
    MISSPECIFICATION_AMPLITUDE = 2.0
