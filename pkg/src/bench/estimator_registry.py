import json
from typing import Dict, List

from src.bench.estimator import (
    BetaMomentEstimator,
    ContextKernelEstimator,
    ContextOlsEstimator,
    ContextResidualEstimator,
    EmpiricalEstimator,
    Estimator,
    NonContextNormalEstimator,
    NormalEstimator,
)
from src.utils.exceptions import ConfigurationError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

_BUILTIN = (
    EmpiricalEstimator,
    BetaMomentEstimator,
    NormalEstimator,
    ContextOlsEstimator,
    ContextResidualEstimator,
    ContextKernelEstimator,
    NonContextNormalEstimator,
)


class EstimatorRegistry:
    _instance = None

    @classmethod
    def get_instance(cls):
        if cls._instance is None:
            cls._instance = cls.with_builtins()
        return cls._instance

    @classmethod
    def with_builtins(cls, **options):
        """
        Registry holding every built-in estimator.

        Args:
            **options: forwarded to each estimator (e.g. ``r`` for the Beta fit)
        """
        registry = cls()
        for estimator_cls in _BUILTIN:
            registry.add_estimator(estimator_cls(**options))
        return registry

    def __init__(self):
        self.estimators: Dict[str, Estimator] = {}

    def add_estimator(self, estimator: Estimator) -> None:
        if estimator.name in self.estimators:
            logger.warning("replacing estimator %s", estimator.name)
        self.estimators[estimator.name] = estimator

    def names(self) -> List[str]:
        return list(self.estimators)

    def get(self, name: str) -> Estimator:
        try:
            return self.estimators[name]
        except KeyError:
            logger.error("unknown estimator: %s", name)
            raise ConfigurationError(
                f"unknown estimator {name!r}; registered: {', '.join(self.names())}"
            ) from None

    def get_descriptors_json(self) -> str:
        return json.dumps([e.get_descriptor_json() for e in self.estimators.values()])
