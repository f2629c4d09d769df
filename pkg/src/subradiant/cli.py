"""Command-line entry point.

Exit codes: 0 success, 1 usage/validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml
from pydantic import ValidationError

from . import config as cfgmod
from .dynamics import evolve, steady_state
from .entanglement import check_persistence, concurrence, find_dark_state, single_mode_steady_state, state_populations
from .experiments import POPULATION_KEYS, Scenario, SweepResult, dominant_mode_dark_state, run_sweep
from .io import write_results
from .model import ConfigurationError

logger = logging.getLogger("subradiant")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _angle(x: float) -> str:
    """Pretty-print an angle as a multiple of pi when it is a simple fraction."""
    f = Fraction(x / math.pi).limit_denominator(12)
    if abs(float(f) * math.pi - x) > 1e-9:
        return f"{x:.6g}"
    if f == 0:
        return "0"
    num = "" if f.numerator == 1 else ("-" if f.numerator == -1 else str(f.numerator))
    return f"{num}π" + (f"/{f.denominator}" if f.denominator != 1 else "")


def _common(p):
    p.add_argument("--config", required=True, help="run configuration (YAML or JSON)")
    p.add_argument("--output", help="output directory (overrides output.directory)")
    p.add_argument("--format", choices=["csv", "structured"], help="result format (overrides output.format)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--seed", type=int, default=None, help="seed for randomised fixtures; never read by the physics")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subradiant", description="Two-emitter entanglement in multi-mode lossy cavities.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, help_ in [
        ("simulate", "evolve one configuration and write the trajectory"),
        ("sweep", "run the configured experiment sweep"),
        ("check-dark", "report whether a dark state satisfies every mode"),
        ("steady-state", "long-time emitter state and its concurrence"),
        ("validate", "schema-check the config and any mode table"),
    ]:
        _common(sub.add_parser(name, help=help_))
    return parser


def _output(args, cfg):
    directory = Path(args.output or cfg.output.directory)
    fmt = args.format or cfg.output.format
    return directory, fmt


def _single_result(model, traj, t_eval) -> SweepResult:
    from .experiments import _report

    pops = traj.populations()
    k = len(traj.times) - 1
    return SweepResult(
        scenario=Scenario.SINGLE,
        x1=np.array([model.emitters[0].position[0]]),
        x2=np.array([model.emitters[1].position[0]]),
        labels=["single"],
        t_eval=t_eval,
        concurrence=np.array([concurrence(traj.final)]),
        populations={key: np.array([pops[key][k]]) for key in POPULATION_KEYS},
        reports=[_report(model)],
        times=traj.times,
        concurrence_series=traj.concurrence()[None, :],
        population_series={key: pops[key][None, :] for key in POPULATION_KEYS},
    )


def cmd_simulate(args, cfg, base) -> int:
    model = cfgmod.build_model(cfg, base)
    pcfg = cfgmod.propagator_config(cfg)
    traj = evolve(model, cfgmod.initial_state(cfg, model), pcfg)
    result = _single_result(model, traj, pcfg.t_end)
    directory, fmt = _output(args, cfg)
    paths = write_results(result, directory, fmt, stem="trajectory")
    print(f"concurrence(t={pcfg.t_end:g} fs) = {result.concurrence[0]:.6g}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_sweep(args, cfg, base) -> int:
    spec = cfgmod.build_sweep_spec(cfg, base)
    result = run_sweep(spec, threads=max(1, args.threads))
    directory, fmt = _output(args, cfg)
    paths = write_results(result, directory, fmt, stem=cfg.output.stem)
    print(f"{spec.scenario.value}: {len(result)} points, max concurrence {result.concurrence.max():.6g}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_check_dark(args, cfg, base) -> int:
    model = cfgmod.build_model(cfg, base)
    dark = find_dark_state(model)
    if dark is not None:
        report = check_persistence(model, dark)
        print(f"dark state found, θ={_angle(dark.theta)}, χ={_angle(dark.chi)}")
    else:
        candidate = dominant_mode_dark_state(model)
        report = check_persistence(model, candidate) if candidate else None
        print("no dark state")
        if report is not None:
            print(f"violating modes: {', '.join(report.violating_modes)}")
    if report is not None:
        for mode, res, ok in zip(model.modes, report.residuals, report.satisfied):
            print(f"  mode {mode.id:>6}  |residual| = {abs(res):.3e}  {'ok' if ok else 'VIOLATED'}")
    if args.output:
        directory = Path(args.output)
        directory.mkdir(parents=True, exist_ok=True)
        doc = {
            "dark_state": None if dark is None else {"theta": dark.theta, "chi": dark.chi},
            "modes": [m.id for m in model.modes],
            "residuals": None if report is None else [[r.real, r.imag] for r in report.residuals],
            "satisfied": None if report is None else list(report.satisfied),
            "violating_modes": None if report is None else list(report.violating_modes),
        }
        (directory / "dark_state.json").write_text(json.dumps(doc, indent=1))
    return EXIT_OK


def cmd_steady_state(args, cfg, base) -> int:
    model = cfgmod.build_model(cfg, base)
    rho = steady_state(model, cfgmod.initial_state(cfg, model))
    c = concurrence(rho)
    pops = state_populations(rho)
    print(f"concurrence = {c:.10g}")
    print("populations: " + ", ".join(f"{k}={v:.10g}" for k, v in pops.items()))
    doc = {"concurrence": c, "populations": pops, "rho_real": rho.real.tolist(), "rho_imag": rho.imag.tolist()}
    if model.n_modes == 1 and model.coupling[0, 1] != 0 and cfg.system.initial == "eg":
        alpha = complex(model.coupling[0, 0] / model.coupling[0, 1])
        _, pop, fid = single_mode_steady_state(alpha)
        print(f"single mode: alpha = {alpha:.6g}, dark population = {pop:.10g}, fidelity = {fid:.10g}")
        doc.update(alpha=[alpha.real, alpha.imag], dark_population=pop, fidelity=fid)
    if args.output:
        directory = Path(args.output)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "steady_state.json").write_text(json.dumps(doc, indent=1))
    return EXIT_OK


def cmd_validate(args, cfg, base) -> int:
    modes = cfgmod.build_modes(cfg, base)
    cfgmod.build_model(cfg, base)
    if cfg.experiment is not None:
        cfgmod.build_sweep_spec(cfg, base)
    print(f"ok: {len(modes)} modes")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "check-dark": cmd_check_dark,
    "steady-state": cmd_steady_state,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    if args.command is None:
        print(parser.format_help(), file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, base = cfgmod.load_config(args.config)
    except (OSError, yaml.YAMLError, ValidationError, ConfigurationError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args, cfg, base)
    except (ConfigurationError, ValidationError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - surface any runtime failure as exit 2
        logger.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
