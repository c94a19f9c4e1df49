"""Command line: run, sweep, oracle-check, resume and acceptance."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from app.errors import RelaxLabError
from app.harness.acceptance import run_acceptance
from app.harness.checkpoint import read_checkpoint, write_checkpoint
from app.harness.config import config_hash, load_scenario, run_parameters, scenario_from_run_parameters
from app.harness.csv_writer import emit_csv
from app.harness.oracle_check import run_oracle_checks
from app.harness.sweep import SweepRunner
from app.models.scenario import Scenario, SweepResult
from app.settings import load_settings
from app.solvers.relaxing import RelaxingSolver, choose_step_control

logger = logging.getLogger("app.cli")


def _write_outputs(result: SweepResult, runner: SweepRunner, scenario: Scenario, out_dir: Path) -> None:
    emit_csv(result, out_dir)
    (out_dir / "summary.json").write_text(result.model_dump_json(indent=2), encoding="utf-8")
    meta = {"config_hash": result.config_hash, "scenario": result.scenario_name, "run": run_parameters(scenario)}
    for tau, state in runner.final_states.items():
        write_checkpoint(
            state,
            tau,
            meta,
            out_dir / f"final_tau_{tau:.6g}.rlxc",
        )


def _run(scenario: Scenario, out_dir: Path, max_workers: int) -> int:
    runner = SweepRunner(max_workers=max_workers)
    result = runner.run(scenario)
    _write_outputs(result, runner, scenario, out_dir)
    for record in result.records:
        status = "ok" if record.success else f"FAILED ({record.error})"
        logger.info(f"tau={record.tau:g}: {status}")
    for name, fit in result.fits.items():
        logger.info(f"convergence {name}: rate {fit.rate:.3f} (r^2={fit.r_squared:.4f})")
    return 0 if result.success else 1


def cmd_run(args: argparse.Namespace) -> int:
    """Single relaxing run at the first tau of the config."""
    scenario = load_scenario(args.config)
    scenario = scenario.model_copy(update={"tau_list": scenario.tau_list[:1]})
    return _run(scenario, args.out, 1)


def cmd_sweep(args: argparse.Namespace) -> int:
    return _run(load_scenario(args.config), args.out, args.workers)


def cmd_oracle_check(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.config)
    checks = run_oracle_checks(scenario.grid, scenario.constants)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "oracle_checks.json").write_text(
        json.dumps([c.model_dump() for c in checks], indent=2), encoding="utf-8"
    )
    for check in checks:
        print(f"{check.name:15s} error={check.error:.3e} tol={check.tolerance:.0e} {'PASS' if check.passed else 'FAIL'}")
    return 0 if all(c.passed for c in checks) else 1


def cmd_resume(args: argparse.Namespace) -> int:
    """Continue a checkpointed relaxing state to --t-end.

    Constants, scheme and CFL factors come from --config when given, else
    from the run parameters stored in the checkpoint's metadata.
    """
    if args.config:
        scenario = load_scenario(args.config)
        state, tau, meta = read_checkpoint(args.checkpoint, grid=scenario.grid)
        if meta.get("config_hash") not in (None, config_hash(scenario)):
            logger.warning("checkpoint was written under a different config hash")
    else:
        state, tau, meta = read_checkpoint(args.checkpoint)
        if "run" not in meta:
            logger.error(f"{args.checkpoint} carries no run parameters; pass --config")
            return 2
        scenario = scenario_from_run_parameters(meta["run"], state.grid)
    if args.t_end <= state.t:
        logger.error(f"--t-end {args.t_end:g} must lie after the checkpoint time {state.t:g}")
        return 2
    ctrl = choose_step_control(
        state, tau, scenario.constants, scenario.cfl_acoustic, scenario.cfl_advective, scenario.scheme,
        max_dt=scenario.sample_dt,
    )
    final = RelaxingSolver(state.grid, scenario.constants, tau, ctrl).evolve(state, args.t_end).final
    target = args.out / f"resumed_tau_{tau:.6g}.rlxc"
    resumed_meta = {**meta, "run": run_parameters(scenario), "resumed_from": str(args.checkpoint)}
    write_checkpoint(final, tau, resumed_meta, target)
    logger.info(f"Resumed tau={tau:g} from t={state.t:.6g} to t={final.t:.6g}")
    return 0


def cmd_acceptance(args: argparse.Namespace) -> int:
    """Ill- and well-prepared sweeps evaluated against the sweep-level criteria."""
    ill = load_scenario(args.ill_config)
    well = load_scenario(args.well_config)
    checks = run_acceptance(ill, well, args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "acceptance.json").write_text(
        json.dumps([c.model_dump() for c in checks], indent=2), encoding="utf-8"
    )
    for check in checks:
        rendered = " ".join(f"{k}={v:.4g}" for k, v in check.values.items())
        print(f"{check.name:22s} {'PASS' if check.passed else 'FAIL'} {rendered}")
    return 0 if all(c.passed for c in checks) else 1


def build_parser(default_out: Path, default_workers: int) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaxlab", description="Relaxation-limit laboratory")
    parser.add_argument("--out", type=Path, default=default_out, help="output root directory")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single relaxing run (first tau) against the relaxed reference")
    run.add_argument("config", type=Path)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="full tau sweep")
    sweep.add_argument("config", type=Path)
    sweep.add_argument("--workers", type=int, default=default_workers, help="parallel tau runs")
    sweep.set_defaults(func=cmd_sweep)

    oracle = sub.add_parser("oracle-check", help="analytic oracle checks on the config's grid")
    oracle.add_argument("config", type=Path)
    oracle.set_defaults(func=cmd_oracle_check)

    resume = sub.add_parser("resume", help="continue a checkpoint to a later time")
    resume.add_argument("checkpoint", type=Path)
    resume.add_argument("--t-end", type=float, required=True)
    resume.add_argument("--config", type=Path, default=None)
    resume.set_defaults(func=cmd_resume)

    acceptance = sub.add_parser("acceptance", help="ill- and well-prepared sweeps against the acceptance criteria")
    acceptance.add_argument("ill_config", type=Path)
    acceptance.add_argument("well_config", type=Path)
    acceptance.add_argument("--workers", type=int, default=default_workers, help="parallel tau runs")
    acceptance.set_defaults(func=cmd_acceptance)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = load_settings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser(settings.out_dir, settings.max_workers).parse_args(argv)
    try:
        return args.func(args)
    except RelaxLabError as e:
        logger.error(str(e))
        return 2


if __name__ == "__main__":
    sys.exit(main())
