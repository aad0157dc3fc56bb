#!/usr/bin/env python3
# -*- coding: utf-8 -*-
# Pilot run for the radius multiplier C in eps = C * Delta(delta, Theta).
#
# The pilot uses its own master seed so the frozen constant is never tuned
# on the seeds the coverage check later reports on.

import argparse
import sys
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.bench.coverage import check_bound_coverage  # noqa: E402
from src.cli.commands import epsilon_rule_from_config, experiment_spec_from_config  # noqa: E402
from src.utils.config_manager import load_config  # noqa: E402
from src.utils.logging_config import setup_logging  # noqa: E402

CANDIDATES = (1.0, 1.5, 2.0, 3.0, 4.0)


def calibrate(config_path, pilot_seed, seeds, candidates=CANDIDATES):
    """Smallest candidate multiplier whose pilot coverage reaches 1 - delta."""
    cfg = load_config(config_path)
    spec = replace(experiment_spec_from_config(cfg), master_seed=pilot_seed)
    base_rule = epsilon_rule_from_config(cfg)
    target = 1.0 - base_rule.delta

    print(f"\n===== pilot coverage, {seeds} seeds, target {target:.2f} =====\n")
    chosen = None
    for multiplier in sorted(candidates):
        rule = replace(base_rule, multiplier=multiplier)
        report = check_bound_coverage(spec, rule, seeds, cfg.coverage_estimator, cfg.coverage_kind, cfg.coverage_n)
        print(f"  C = {multiplier:<5g} eps = {report.eps:.4g}  coverage = {report.fraction:.3f}")
        if chosen is None and report.fraction >= target:
            chosen = multiplier
    return chosen


def main():
    parser = argparse.ArgumentParser(description="calibrate the coverage radius multiplier")
    parser.add_argument("--config", default="config/coverage.cfg")
    parser.add_argument("--pilot-seed", type=int, default=1000)
    parser.add_argument("--seeds", type=int, default=50)
    args = parser.parse_args()

    setup_logging("WARNING")
    chosen = calibrate(args.config, args.pilot_seed, args.seeds)
    if chosen is None:
        print("\nno candidate reached the target; widen CANDIDATES")
        return 1
    print(f"\nfreeze eps_multiplier = {chosen:g} in {args.config}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
