"""Command line entry point: ``realfield simulate|report|oracle``."""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from . import oracle as qm
from . import waveoptics as wo
from .errors import ParseError, SchemaError
from .results import dumps, records_to_json, report_csv, report_table, summarize, write_atomic
from .sampler import BASIS_OUTCOMES, run_trials
from .scenario import (
    DOUBLE_SLIT, INDEPENDENT_BEAMS, MACH_ZEHNDER, QUANTUM_ERASER, ScenarioConfig, parse_scenario,
)

EXIT_OK, EXIT_INPUT, EXIT_IO = 0, 1, 2


class _IOFailure(Exception):
    pass


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load_scenario(path: str) -> ScenarioConfig:
    return parse_scenario(_read(path))


def oracle_report(config: ScenarioConfig) -> dict:
    """Closed-form prediction for a scenario, as a JSON-ready dict."""
    out: dict = {"kind": config.kind}
    if config.kind == MACH_ZEHNDER:
        setup = config.setup if config.choice_step is None else 3 - config.setup
        out["setup"] = setup
        out["arm_phase"] = config.arm_phase
        out["detector_probs"] = qm.oracle_mz(setup, config.arm_phase).detector_probs
    elif config.kind == QUANTUM_ERASER:
        rows = []
        for outcome in BASIS_OUTCOMES[config.basis]:
            for phase in config.phases:
                pred = qm.oracle_eraser(config.basis, outcome, phase)
                rows.append({"env_outcome": outcome, "outcome_probability":
                             qm.eraser_outcome_probability(config.basis, outcome),
                             "phase_rad": phase, "detector_probs": pred.detector_probs})
        out["conditional"] = rows
        pooled = []
        for phase in config.phases:
            p1 = sum(0.5 * qm.oracle_eraser(config.basis, o, phase).detector_probs["det1"]
                     for o in BASIS_OUTCOMES[config.basis])
            pooled.append({"phase_rad": phase, "detector_probs": {"det1": p1, "det2": 1 - p1}})
        out["pooled"] = pooled
    elif config.kind == INDEPENDENT_BEAMS:
        dk = wo.delta_k(config.angle, config.wavelength)
        out["intensity"] = "1 + cos(delta_k * x + trial_phase)"
        out["delta_k_per_m"] = dk
        out["fringe_period_m"] = 2 * math.pi / dk
        out["per_trial_visibility"] = 1.0
        out["phase_averaged_visibility"] = 0.0
    elif config.kind == DOUBLE_SLIT:
        mask = wo.ApertureMask(config.slit_centers, config.slit_width, config.open)
        n_open = len(mask.open_centers)
        geom = qm.DoubleSlitGeometry(config.wavelength, config.distance,
                                     mask.separation or config.slit_width,
                                     config.slit_width, min(n_open, 2))
        out["intensity"] = ("sinc^2(w x / (lambda L)) * cos^2(pi d x / (lambda L))"
                            if n_open >= 2 else "sinc^2(w x / (lambda L))")
        if n_open >= 2:
            out["fringe_spacing_m"] = geom.fringe_spacing
        out["envelope_first_zero_m"] = geom.envelope_zero
    return out


def _simulate(args) -> int:
    config = _load_scenario(args.scenario)
    config = config.with_run(trials=args.trials, seed=args.seed)
    records = run_trials(config, workers=args.workers)
    result = summarize(config, records)
    if args.keep_records:
        result["records"] = records_to_json(records)
    text = dumps(result)
    if args.out:
        try:
            write_atomic(args.out, text)
        except OSError as exc:
            raise _IOFailure(f"cannot write {args.out}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _report(args) -> int:
    raw = _read(args.results)
    try:
        result = json.loads(raw.decode("utf-8"))
        if not isinstance(result, dict) or "scenario" not in result:
            raise ParseError("not a realfield results file")
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"malformed results JSON: {exc}") from exc
    text = report_csv(result) if args.format == "csv" else report_table(result)
    sys.stdout.write(text)
    return EXIT_OK


def _oracle(args) -> int:
    sys.stdout.write(dumps(oracle_report(_load_scenario(args.scenario))))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="realfield",
        description="Sample point particles from real, unitarily evolving optical fields.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write a results JSON")
    sim.add_argument("scenario", help="scenario JSON file")
    sim.add_argument("--out", help="results file (default: standard output)")
    sim.add_argument("--trials", type=int, help="override the scenario's trial count")
    sim.add_argument("--seed", type=int, help="override the scenario's seed")
    sim.add_argument("--keep-records", action="store_true", help="persist every trial record")
    sim.add_argument("--workers", type=int, default=1, help="worker threads for trial execution")
    sim.set_defaults(func=_simulate)

    rep = sub.add_parser("report", help="summarize a results JSON")
    rep.add_argument("results", help="results JSON written by 'simulate'")
    rep.add_argument("--format", choices=("csv", "table"), default="table")
    rep.set_defaults(func=_report)

    orc = sub.add_parser("oracle", help="print the closed-form quantum prediction")
    orc.add_argument("scenario", help="scenario JSON file")
    orc.set_defaults(func=_oracle)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"realfield: {exc}", file=sys.stderr)
        return EXIT_IO
    except SchemaError as exc:
        print(f"realfield: schema error at {exc.path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ParseError as exc:
        print(f"realfield: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
