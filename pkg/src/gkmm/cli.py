"""Command line entry point: ``gkmm estimate`` and ``gkmm demo``.

Configs are JSON documents with ``"version": 1``. They are validated in full,
including weight sums and input file existence, before any data is read.
Errors are reported as one ``code=<Kind> msg=<text>`` line on stderr with
exit status 1; a fit that hits the iteration limit still writes its outputs
and exits with status 2.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass
from typing import Optional

import jsonschema
import numpy as np

from .core import KernelConfig, PartitionedData, Status, alpha_relative_config, size_proportional_weights
from .core import WEIGHT_SUM_TOL
from .errors import ConfigError, GkmmError, WeightSumError
from .estimators import fit_gkmm, save_model
from .solver import SolverSettings, StepRule, write_trace
from .synthlab import SCENARIOS, ExperimentConfig, default_config, run_scenario, write_weights_csv

logger = logging.getLogger("gkmm")

_SOLVER_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "max_iterations": {"type": "integer", "minimum": 1},
        "tol_primal": {"type": "number", "exclusiveMinimum": 0},
        "tol_dual": {"type": "number", "exclusiveMinimum": 0},
        "step_rule": {"enum": [r.value for r in StepRule]},
        "accelerate": {"type": "boolean"},
        "refine": {"type": "boolean"},
    },
}

_SIDE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["paths"],
    "properties": {
        "paths": {"type": "array", "minItems": 1, "items": {"type": "string"}},
        "weights": {"type": ["array", "null"], "items": {"type": "number", "minimum": 0, "maximum": 1}},
    },
}

ESTIMATE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "train", "test"],
    "properties": {
        "version": {"const": 1},
        "train": _SIDE_SCHEMA,
        "test": _SIDE_SCHEMA,
        "alpha": {"type": ["number", "null"], "minimum": 0, "exclusiveMaximum": 1},
        "header": {"type": "boolean"},
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["rbf", "laplacian"]},
                "sigma": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "B": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "solver": _SOLVER_SCHEMA,
        "seed": {"type": "integer"},
    },
}

_NUM_LIST = {"type": "array", "minItems": 1}
DEMO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version"],
    "properties": {
        "version": {"const": 1},
        "scenario": {"enum": list(SCENARIOS)},
        "train_means": _NUM_LIST,
        "train_stdevs": _NUM_LIST,
        "train_sizes": _NUM_LIST,
        "test_means": _NUM_LIST,
        "test_stdevs": _NUM_LIST,
        "test_sizes": _NUM_LIST,
        "gamma": {"type": ["array", "null"]},
        "omega": {"type": ["array", "null"]},
        "alpha": {"oneOf": [{"type": "null"}, {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                            {"const": "auto"}]},
        "kernel": {"enum": ["rbf", "laplacian"]},
        "sigma": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "B": {"type": "number", "exclusiveMinimum": 0},
        "eps": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "noise_stdev": {"type": "number", "minimum": 0},
        "solver": _SOLVER_SCHEMA,
    },
}


@dataclass
class CliConfig:
    """A validated job. ``doc`` is the normalised config echoed into ``summary.json``."""

    command: str
    doc: dict
    solver: SolverSettings
    experiment: Optional[ExperimentConfig] = None


def _validate(doc, schema):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def _check_weights(side: str, weights, n_paths: int, total: float):
    if weights is None:
        return
    if len(weights) != n_paths:
        raise ConfigError(f"{side}: {len(weights)} weights for {n_paths} files")
    if abs(sum(weights) - total) > WEIGHT_SUM_TOL:
        raise WeightSumError(f"{side} weights sum to {sum(weights)!r}, expected {total!r}")


def parse_estimate_config(doc: dict, base_dir: str = ".") -> CliConfig:
    _validate(doc, ESTIMATE_SCHEMA)
    doc = copy.deepcopy(doc)
    doc.setdefault("alpha", None)
    doc.setdefault("header", False)
    doc.setdefault("B", 1000.0)
    doc.setdefault("eps", None)
    kernel = doc.setdefault("kernel", {})
    kernel.setdefault("family", "rbf")
    kernel.setdefault("sigma", None)
    for side in ("train", "test"):
        doc[side].setdefault("weights", None)
        doc[side]["paths"] = [os.path.abspath(os.path.join(base_dir, p)) for p in doc[side]["paths"]]
    alpha = doc["alpha"] or 0.0
    _check_weights("train", doc["train"]["weights"], len(doc["train"]["paths"]), 1.0 - alpha)
    _check_weights("test", doc["test"]["weights"], len(doc["test"]["paths"]), 1.0)
    for side in ("train", "test"):
        for p in doc[side]["paths"]:
            if not os.path.isfile(p):
                raise ConfigError(f"{side} file not found: {p}")
    solver = SolverSettings(**doc.get("solver", {}))
    doc["solver"] = _solver_doc(solver)
    return CliConfig("estimate", doc, solver)


def parse_demo_config(doc: Optional[dict], scenario: Optional[str], seed: Optional[int]) -> CliConfig:
    doc = copy.deepcopy(doc) if doc is not None else {"version": 1}
    _validate(doc, DEMO_SCHEMA)
    scenario = scenario or doc.get("scenario")
    if scenario is None:
        raise ConfigError("no scenario given (use --scenario or a 'scenario' key)")
    solver = SolverSettings(**doc.pop("solver", {}))
    doc.pop("version")
    doc["scenario"] = scenario
    if seed is not None:
        doc["seed"] = seed
    merged = default_config(scenario).to_dict()
    merged.update(doc)
    experiment = ExperimentConfig.from_dict(merged)
    echo = {"version": 1, **experiment.to_dict(), "solver": _solver_doc(solver)}
    return CliConfig("demo", echo, solver, experiment)


def _solver_doc(settings: SolverSettings) -> dict:
    d = asdict(settings)
    d.pop("trace")
    d["step_rule"] = settings.step_rule.value
    return d


def _load_csv(path, header: bool) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"{path}: not a numeric CSV ({exc})") from None
    return data


def _write_summary(path, summary: dict):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_estimate(args) -> int:
    with open(args.config) as fh:
        doc = json.load(fh)
    cfg = parse_estimate_config(doc, os.path.dirname(os.path.abspath(args.config)))
    if args.solver_trace:
        cfg.solver = SolverSettings(**{**asdict(cfg.solver), "trace": True})
    d = cfg.doc
    train_blocks = [_load_csv(p, d["header"]) for p in d["train"]["paths"]]
    test = PartitionedData.from_blocks([_load_csv(p, d["header"]) for p in d["test"]["paths"]],
                                       d["test"]["weights"])
    alpha = d["alpha"] or 0.0
    gamma = d["train"]["weights"]
    if alpha > 0:
        if gamma is None:
            gamma = (1.0 - alpha) * size_proportional_weights(train_blocks)
        train = alpha_relative_config(train_blocks, gamma, test.stacked(), alpha)
    else:
        train = PartitionedData.from_blocks(train_blocks, gamma)
    kernel = KernelConfig(d["kernel"]["family"], d["kernel"]["sigma"])
    report = fit_gkmm(train, test, kernel, B=d["B"], eps=d["eps"], settings=cfg.solver)

    os.makedirs(args.output, exist_ok=True)
    save_model(report.model, os.path.join(args.output, "model.json"))
    write_weights_csv(os.path.join(args.output, "weights.csv"), list(train.blocks), report.train_weights)
    _write_summary(os.path.join(args.output, "summary.json"), {
        "schema": "gkmm-summary/1",
        "config": d,
        "eps": report.problem.eps,
        "sigma": report.problem.kernel.sigma,
        "loss_uniform": report.loss_uniform,
        "loss_fitted": report.loss_fitted,
        "solver": report.solution.stats(),
    })
    if args.solver_trace:
        write_trace(report.solution, os.path.join(args.output, "trace.csv"))
    return 0 if report.solution.status is Status.OPTIMAL else 2


def cmd_demo(args) -> int:
    doc = None
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    cfg = parse_demo_config(doc, args.scenario, args.seed)
    if args.solver_trace:
        cfg.solver = SolverSettings(**{**asdict(cfg.solver), "trace": True})
    result = run_scenario(cfg.experiment, cfg.solver)
    result.write(args.output, plot=args.plot, echo=cfg.doc)
    if args.solver_trace:
        write_trace(result.fit.solution, os.path.join(args.output, "trace.csv"))
    return 0 if result.fit.solution.status is Status.OPTIMAL else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gkmm", description="Generalized kernel mean matching")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit density ratio weights for CSV partitions")
    est.add_argument("--config", required=True, help="JSON job file")
    est.add_argument("--output", required=True, help="output directory")
    est.add_argument("--solver-trace", action="store_true", help="also write trace.csv")
    est.set_defaults(func=cmd_estimate)

    demo = sub.add_parser("demo", help="run a synthetic experiment")
    demo.add_argument("--scenario", choices=SCENARIOS)
    demo.add_argument("--seed", type=int)
    demo.add_argument("--config", help="JSON overrides for the scenario defaults")
    demo.add_argument("--output", required=True, help="output directory")
    demo.add_argument("--plot", action="store_true", help="also write SVG plots")
    demo.add_argument("--solver-trace", action="store_true", help="also write trace.csv")
    demo.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("GKMM_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GkmmError as exc:
        msg = " ".join(str(exc).split())
        print(f"code={exc.code} msg={msg}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        msg = " ".join(str(exc).split())
        print(f"code=ConfigError msg={msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
