"""The `ustat-bounds` command line.

Every subcommand reads a JSON configuration (validated by `RunConfig`),
writes its report as JSON and, where it has one, a CSV curve, then prints a
one-line summary. Exit codes: 0 success, 1 invalid input, 2 failed
computation, 3 a `verify` comparison failed.
"""

import argparse
import csv
import json
import logging
import math
from pathlib import Path
import sys
from typing import Any, Callable, NamedTuple, Optional, Sequence

from pydantic import ValidationError

from ustat_bounds import __version__
from ustat_bounds.analysis import UStatisticAnalysis
from ustat_bounds.bounds import bound_report
from ustat_bounds.bounds import gamma_table
from ustat_bounds.bounds import growth
from ustat_bounds.bounds import growth_power
from ustat_bounds.bounds import MAX_WITNESS_DEGREE
from ustat_bounds.bounds import osekowski_constant
from ustat_bounds.bounds import osekowski_os
from ustat_bounds.bounds import previous_bound_growth
from ustat_bounds.bounds import sandwich
from ustat_bounds.gls import example_tail_families
from ustat_bounds.gls import gls_norm
from ustat_bounds.gls import psi_d_transform
from ustat_bounds.gls import tail_envelope
from ustat_bounds.gls import young_orlicz_curve
from ustat_bounds.models.bounds import BoundInput
from ustat_bounds.models.config import PsiSpec
from ustat_bounds.models.config import RunConfig
from ustat_bounds.models.gls import PsiFunction
from ustat_bounds.models.simulation import SimulationPlan
from ustat_bounds.models.simulation import SimulationReport
from ustat_bounds.montecarlo import build_report
from ustat_bounds.montecarlo import prepare
from ustat_bounds.montecarlo import report_curves
from ustat_bounds.montecarlo import simulate
from ustat_bounds.montecarlo import verify
from ustat_bounds.utils.error_handling import ComputationError
from ustat_bounds.utils.error_handling import ConfigError
from ustat_bounds.utils.error_handling import ValidationFailure

logger = logging.getLogger(__name__)

EXIT_OK: int = 0
EXIT_INVALID: int = 1
EXIT_COMPUTATION: int = 2
EXIT_VERIFY_FAILED: int = 3


class CommandResult(NamedTuple):
  """What a subcommand hands back to `run`."""
  payload: Any
  summary: str
  curves: Optional[list[dict[str, Any]]] = None
  code: int = EXIT_OK


class _ArgumentParser(argparse.ArgumentParser):
  """Reports usage errors as invalid input instead of exiting with 2."""

  def error(self, message: str):
    raise ConfigError(f"{self.prog}: {message}")


def load_config(path: Optional[str],
                seed: Optional[int] = None,
                workers: Optional[int] = None) -> RunConfig:
  """Reads and validates a run configuration; flags override its fields.

    Raises:
        ConfigError: If the file cannot be read or is not a JSON object.
        ValidationError: If the document does not match the schema.
    """
  data: dict[str, Any] = {}
  if path is not None:
    try:
      data = json.loads(Path(path).read_text())
    except OSError as error:
      raise ConfigError(f"Cannot read {path}: {error}") from error
    except json.JSONDecodeError as error:
      raise ConfigError(f"{path} is not valid JSON: {error}") from error
    if not isinstance(data, dict):
      raise ConfigError(f"{path} must hold a JSON object.")
  if seed is not None:
    data["seed"] = seed
  if workers is not None:
    data["workers"] = workers
  return RunConfig.model_validate(data)


def _analysis(config: RunConfig,
              required: bool = True) -> Optional[UStatisticAnalysis]:
  if config.kernel is None and config.dist is None and not required:
    return None
  return UStatisticAnalysis.from_config(config)


def _require(config: RunConfig, *fields: str) -> list[Any]:
  values = [getattr(config, field) for field in fields]
  missing = [f for f, v in zip(fields, values) if v is None]
  if missing:
    raise ConfigError(f"The configuration needs {', '.join(missing)}.")
  return values


def build_psi(spec: Optional[PsiSpec],
              analysis: Optional[UStatisticAnalysis]) -> PsiFunction:
  """Turns a ψ spec into a PsiFunction; "natural" uses the kernel's moments."""
  spec = spec or PsiSpec()
  b = math.inf if spec.b is None else spec.b
  if spec.family == "natural":
    if analysis is None:
      raise ConfigError("The natural ψ needs 'kernel' and 'dist'.")
    return analysis.natural_psi()
  if spec.family == "power_log":
    return PsiFunction.power_log(spec.c, spec.m, spec.r, b)
  if spec.family == "exp_beta":
    return PsiFunction.exp_beta(spec.c, spec.beta)
  return PsiFunction.constant(spec.c, b)


def _plan(config: RunConfig) -> SimulationPlan:
  (n_values,) = _require(config, "n_values")
  if config.kernel is None or config.dist is None:
    raise ConfigError("Simulation needs both 'kernel' and 'dist'.")
  return SimulationPlan(kernel=config.kernel,
                        dist=config.dist,
                        n_values=tuple(n_values),
                        replications=config.replications,
                        p_values=tuple(config.p_values),
                        tail_grid=tuple(config.tail_grid),
                        master_seed=config.seed)


def _simulation_report(config: RunConfig) -> SimulationReport:
  plan = _plan(config)
  setup = prepare(plan)
  draws = simulate(plan, workers=config.workers, setup=setup)
  return build_report(plan, draws, setup=setup)


def cmd_decompose(config: RunConfig, args) -> CommandResult:
  analysis = _analysis(config)
  projections = analysis.projections
  payload = {
      "kernel": analysis.kernel.name,
      "degree": analysis.degree,
      "rank": projections.rank,
      "kernel_variance": analysis.centered.variance,
      "projections": projections.to_dict(),
  }
  variances = ", ".join(f"{v:.6g}" for v in projections.variances)
  return CommandResult(
      payload, f"decompose: {analysis.kernel.name} d={analysis.degree} "
      f"r={projections.rank} Var g = [{variances}]")


def cmd_variance(config: RunConfig, args) -> CommandResult:
  analysis = _analysis(config)
  n_values = config.n_values or _require(config, "n")
  rows = []
  for n in n_values:
    exact = analysis.variance(n)
    asymptotic = analysis.variance_asymptotic(n)
    rows.append({
        "n": n,
        "exact": exact,
        "asymptotic": asymptotic,
        "ratio": asymptotic / exact if exact > 0 else None,
    })
  payload = {"kernel": analysis.kernel.name, "rank": analysis.rank, "rows": rows}
  last = rows[-1]
  return CommandResult(
      payload, f"variance: {len(rows)} sizes, Var U({last['n']}) = "
      f"{last['exact']:.6g}", rows)


def cmd_bound(config: RunConfig, args) -> CommandResult:
  n, p = _require(config, "n", "p")
  analysis = _analysis(config, required=False)
  if analysis is not None:
    report = analysis.bound(n, p)
  else:
    d, r, phi_p = _require(config, "d", "r", "phi_p")
    report = bound_report(BoundInput(d=d, r=r, n=n, p=p, phi_p=phi_p))
  d = report.input.d
  payload = {
      **report.to_dict(),
      "growth": growth_power(p, d),
      "previous_growth": previous_bound_growth(d, p),
  }
  return CommandResult(
      payload, f"bound: d={d} r={report.input.r} n={n} p={p:g} detailed="
      f"{report.detailed:.6g} c_eff={report.c_eff:.6g}")


def cmd_norm(config: RunConfig, args) -> CommandResult:
  analysis = _analysis(config)
  psi = build_psi(config.psi, analysis)
  natural = config.psi is None or config.psi.family == "natural"
  if natural:
    norm = 1.0
    theorem = analysis.theorem_bound(n_values=config.n_values)
  else:
    norm = gls_norm(analysis.lp_norm, psi)
    theorem = analysis.theorem_bound(psi=psi, n_values=config.n_values)
  curve = young_orlicz_curve(psi, config.tail_grid)
  payload = {
      "kernel": analysis.kernel.name,
      "psi": {
          "family": psi.family,
          "params": psi.params
      },
      "norm": norm,
      "theorem_bound": theorem,
  }
  rows = [{"u": float(u), "orlicz": float(m)} for u, m in curve]
  return CommandResult(
      payload, f"norm: ||Φ|| = {norm:.6g}, sup_n ||U(n)/σ(n)|| <= "
      f"{theorem:.6g}", rows)


def cmd_tail(config: RunConfig, args) -> CommandResult:
  analysis = _analysis(config, required=False)
  if config.psi is None and analysis is None and config.family is None:
    raise ConfigError("tail needs a 'psi', a 'kernel' or a 'family'.")
  rows = [{"x": x} for x in config.tail_grid]
  payload: dict[str, Any] = {}
  parts = []
  if config.psi is not None or analysis is not None:
    psi = build_psi(config.psi, analysis)
    d = config.d or 0
    norm = config.norm
    if norm is None:
      if analysis is None:
        raise ConfigError("tail needs 'norm' when no kernel is given.")
      if d:
        norm = analysis.theorem_bound(
            psi=None if config.psi is None else psi, n_values=config.n_values)
      else:
        norm = gls_norm(analysis.lp_norm, psi)
    envelope = tail_envelope(psi_d_transform(psi, d), norm)
    for row in rows:
      row["envelope"] = envelope(row["x"])
    payload["envelope"] = {"d": d, "norm": norm, "threshold": math.e * norm}
    parts.append(f"envelope from x > {math.e * norm:.6g}")
  if config.family is not None:
    family = config.family
    conversion = example_tail_families(family.kind, family.params,
                                       family.direction, family.d)
    family_tail = conversion.envelope()
    for row in rows:
      row["family_envelope"] = family_tail(row["x"])
    payload["family"] = conversion.to_dict()
    parts.append(f"{conversion.kind} tail log power "
                 f"{conversion.to_dict()['tail_log_power']}")
  return CommandResult(payload, "tail: " + "; ".join(parts), rows)


def cmd_simulate(config: RunConfig, args) -> CommandResult:
  report = _simulation_report(config)
  return CommandResult(
      report.to_dict(), f"simulate: n={list(report.plan.n_values)} "
      f"R={report.plan.replications} C={report.normalized_constant:.6g}",
      report_curves(report))


def cmd_verify(config: RunConfig, args) -> CommandResult:
  report = _simulation_report(config)
  verdicts = verify(report, negative_control=args.negative_control)
  for verdict in verdicts.failures():
    logger.warning(verdict.describe())
  failed = len(verdicts.failures())
  payload = {
      "negative_control": args.negative_control,
      "all_passed": verdicts.all_passed,
      "verdicts": verdicts.model_dump(mode="json", exclude_none=True),
  }
  return CommandResult(
      payload, f"verify: {len(verdicts)} comparisons, {failed} FAIL",
      report_curves(report), EXIT_OK if failed == 0 else EXIT_VERIFY_FAILED)


def cmd_constants(config: RunConfig, args) -> CommandResult:
  k_os = osekowski_constant()
  witness = [
      sandwich(d, p).to_dict()
      for d in range(1, MAX_WITNESS_DEGREE + 1)
      for p in config.p_values
      if p >= 2
  ]
  payload = {
      "osekowski_constant": k_os,
      "os_at_4": osekowski_os(4.0),
      "gamma": gamma_table(config.gamma_max).model_dump(mode="json"),
      "witness": witness,
  }
  return CommandResult(payload, f"constants: K_Os = {k_os:.6f}")


class Command(NamedTuple):
  handler: Callable[[RunConfig, argparse.Namespace], CommandResult]
  help: str
  example: str


COMMANDS: dict[str, Command] = {
    "decompose":
        Command(cmd_decompose, "Hoeffding projections g_1..g_d and the rank.",
                'ustat-bounds decompose --config product.json  '
                '# {"kernel": {"name": "product", "arity": 2}, '
                '"dist": "rademacher"}'),
    "variance":
        Command(cmd_variance, "Exact and leading-term Var U(n).",
                'ustat-bounds variance --config sum.json  '
                '# {"kernel": {"name": "sum", "arity": 2}, '
                '"dist": "rademacher", "n_values": [4, 8, 200]}'),
    "bound":
        Command(cmd_bound, "Detailed and normalized moment bounds.",
                'ustat-bounds bound --config bound.json  '
                '# {"d": 2, "r": 1, "n": 10, "p": 4, "phi_p": 1.0}'),
    "norm":
        Command(cmd_norm, "Grand Lebesgue norm of Φ and the U(n) bound.",
                'ustat-bounds norm --config norm.json --out reports  '
                '# {"kernel": {"name": "identity"}, "dist": "rademacher", '
                '"psi": {"family": "power_log", "c": 2, "m": 2}}'),
    "tail":
        Command(cmd_tail, "Tail envelope curves and family exponents.",
                'ustat-bounds tail --config tail.json --out reports  '
                '# {"psi": {"family": "power_log", "c": 2, "m": 2}, '
                '"norm": 1.0, "family": {"kind": "power_log", '
                '"params": {"m": 2, "r": 0}, "d": 1}}'),
    "simulate":
        Command(cmd_simulate, "Seeded Monte Carlo of U(n)/σ(n).",
                'ustat-bounds simulate --config sim.json --seed 7 '
                '--workers 4 --out reports  # {"kernel": {"name": "product", '
                '"arity": 2}, "dist": "rademacher", "n_values": [3, 10]}'),
    "verify":
        Command(cmd_verify, "Simulate and compare every estimate with its "
                "bound.", 'ustat-bounds verify --config sim.json '
                '--negative-control'),
    "constants":
        Command(cmd_constants, "K_Os, γ(1..gamma_max) and the Poisson witness.",
                "ustat-bounds constants"),
}


def build_parser() -> argparse.ArgumentParser:
  parser = _ArgumentParser(
      prog="ustat-bounds",
      description="Moment and tail bounds for U-statistics.",
      formatter_class=argparse.RawDescriptionHelpFormatter,
      epilog="Run 'ustat-bounds COMMAND --help' for an example per command.")
  parser.add_argument("--version", action="version", version=__version__)
  parser.add_argument("--print-schema",
                      action="store_true",
                      help="Print the JSON schema of the configuration.")
  parser.add_argument("-v",
                      "--verbose",
                      action="store_true",
                      help="Log at DEBUG level.")
  subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
  for name, command in COMMANDS.items():
    sub = subparsers.add_parser(
        name,
        help=command.help,
        description=command.help,
        epilog=f"example:\n  {command.example}",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub.add_argument("--config", metavar="PATH", help="JSON run configuration.")
    sub.add_argument("--seed",
                     type=int,
                     help="Master seed, overrides the configuration.")
    sub.add_argument("--workers",
                     type=int,
                     help="Simulation threads; never changes the output.")
    sub.add_argument("--out",
                     metavar="DIR",
                     help="Directory for the JSON report and CSV curve.")
    sub.add_argument("--negative-control",
                     action="store_true",
                     help="Replace every bound by half of min(bound, "
                     "estimate); verify must then fail.")
    sub.add_argument("-v",
                     "--verbose",
                     action="store_true",
                     default=argparse.SUPPRESS,
                     help="Log at DEBUG level.")
  return parser


def write_csv(path: Path, rows: Sequence[dict[str, Any]]) -> None:
  fields: list[str] = []
  for row in rows:
    fields.extend(k for k in row if k not in fields)
  with path.open("w", newline="") as handle:
    writer = csv.DictWriter(handle, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def emit(command: str, result: CommandResult, out: Optional[str]) -> None:
  """Writes the report and curve files, or the report to stdout."""
  text = json.dumps(result.payload, indent=2, sort_keys=True)
  if out is None:
    print(text)
  else:
    directory = Path(out)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{command}.json").write_text(text + "\n")
    if result.curves:
      write_csv(directory / f"{command}_curves.csv", result.curves)
    logger.debug("wrote %s outputs to %s", command, directory)
  print(result.summary)


def _describe_validation(error: ValidationError) -> str:
  lines = []
  for item in error.errors():
    location = ".".join(str(part) for part in item["loc"]) or "<root>"
    lines.append(f"{location}: {item['msg']}")
  return "Invalid configuration:\n  " + "\n  ".join(lines)


def run(argv: Optional[Sequence[str]] = None) -> int:
  """Parses `argv`, runs one subcommand and returns the exit code."""
  try:
    parser = build_parser()
    args = parser.parse_args(argv)
    verbose = getattr(args, "verbose", False)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.print_schema:
      print(json.dumps(RunConfig.model_json_schema(), indent=2))
      return EXIT_OK
    if args.command is None:
      parser.error("a command is required")
    config = load_config(args.config, args.seed, args.workers)
    result = COMMANDS[args.command].handler(config, args)
    emit(args.command, result, args.out)
    return result.code
  except ValidationError as error:
    print(_describe_validation(error), file=sys.stderr)
    return EXIT_INVALID
  except (ValidationFailure, ValueError) as error:
    print(f"Invalid input: {error}", file=sys.stderr)
    return EXIT_INVALID
  except (ComputationError, ArithmeticError) as error:
    print(f"Computation failed: {error}", file=sys.stderr)
    return EXIT_COMPUTATION


def main() -> None:
  sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
  main()
