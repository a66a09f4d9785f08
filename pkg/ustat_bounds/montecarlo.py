"""Seeded simulation of U(n)/σ(n) and its comparison with the bounds.

Every replication draws its sample from a seed derived from (master seed, n,
replication index), and replications are grouped in chunks whose boundaries
depend only on the plan. Results are therefore identical for any number of
workers.
"""

from concurrent.futures import ThreadPoolExecutor
import logging
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ustat_bounds.bounds import bound_report
from ustat_bounds.bounds import normalized_constant
from ustat_bounds.gls import natural_psi
from ustat_bounds.gls import psi_d_transform
from ustat_bounds.gls import tail_envelope
from ustat_bounds.hoeffding import decompose
from ustat_bounds.hoeffding import variance_exact
from ustat_bounds.model import center
from ustat_bounds.model import kernel_lp_norm
from ustat_bounds.model import sample_iid
from ustat_bounds.models.bounds import BoundInput
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.gls import TailFunction
from ustat_bounds.models.kernel import CenteredKernel
from ustat_bounds.models.projection import ProjectionSet
from ustat_bounds.models.simulation import MIN_REPLICATIONS
from ustat_bounds.models.simulation import MomentEstimate
from ustat_bounds.models.simulation import NormEstimate
from ustat_bounds.models.simulation import SigmaEntry
from ustat_bounds.models.simulation import SimulationPlan
from ustat_bounds.models.simulation import SimulationReport
from ustat_bounds.models.simulation import TailEstimate
from ustat_bounds.models.simulation import Verdict
from ustat_bounds.models.simulation import VerdictKind
from ustat_bounds.models.simulation import VerdictList
from ustat_bounds.ustat import CountEvaluator
from ustat_bounds.utils.decorators import requires_moment_order
from ustat_bounds.utils.error_handling import DegenerateVarianceError
from ustat_bounds.utils.numerics import compensated_sum
from ustat_bounds.utils.seeding import replication_seed

logger = logging.getLogger(__name__)

SE_SLACK: float = 3.0
NEGATIVE_CONTROL_FACTOR: float = 0.5
# Empirical tails below this many hits per replication are not compared.
TAIL_RESOLUTION: float = 10.0


class SimulationSetup(NamedTuple):
  """Everything derived from a plan before any draw is made."""
  kernel: CenteredKernel
  dist: DiscreteDistribution
  projections: ProjectionSet
  sigmas: dict[int, float]
  evaluator: CountEvaluator


def prepare(plan: SimulationPlan) -> SimulationSetup:
  """Centers the kernel, decomposes it and computes σ(n) for every n.

    Raises:
        DegenerateVarianceError: If some σ(n) is not positive.
    """
  dist = plan.dist.build()
  kernel = center(plan.kernel.build(), dist)
  projections = decompose(kernel, dist)
  sigmas = {}
  for n in plan.n_values:
    variance = variance_exact(kernel, dist, n, projections=projections)
    if not variance > 0:
      raise DegenerateVarianceError(f"Var U({n}) = {variance} is not positive.")
    sigmas[n] = math.sqrt(variance)
  return SimulationSetup(kernel=kernel,
                         dist=dist,
                         projections=projections,
                         sigmas=sigmas,
                         evaluator=CountEvaluator(kernel, dist))


def _chunks(plan: SimulationPlan) -> list[tuple[int, int, int]]:
  """(row, first replication, stop) for every work unit."""
  return [(row, start, min(start + plan.chunk_size, plan.replications))
          for row in range(len(plan.n_values))
          for start in range(0, plan.replications, plan.chunk_size)]


def _draw_chunk(plan: SimulationPlan, setup: SimulationSetup, row: int,
                start: int, stop: int) -> np.ndarray:
  n = plan.n_values[row]
  counts = np.stack([
      setup.evaluator.counts_of(
          sample_iid(setup.dist, n, replication_seed(plan.master_seed, n, j)))
      for j in range(start, stop)
  ])
  return setup.evaluator(counts) / setup.sigmas[n]


def simulate(plan: SimulationPlan,
             workers: int = 1,
             setup: Optional[SimulationSetup] = None) -> np.ndarray:
  """Draws R replications of U(n)/σ(n) for every n of the plan.

    Args:
        plan (SimulationPlan): The plan.
        workers (int): Number of threads; the output does not depend on it.
        setup (Optional[SimulationSetup]): Reuse of a prepared setup.

    Returns:
        np.ndarray: Draws of shape (len(n_values), replications).

    Raises:
        DegenerateVarianceError: If some σ(n) is not positive.
    """
  if workers < 1:
    raise ValueError("workers must be at least 1.")
  setup = setup or prepare(plan)
  draws = np.empty((len(plan.n_values), plan.replications))
  chunks = _chunks(plan)
  logger.debug("simulating %d chunks on %d workers", len(chunks), workers)
  with ThreadPoolExecutor(max_workers=workers) as executor:
    futures = {
        chunk: executor.submit(_draw_chunk, plan, setup, *chunk)
        for chunk in chunks
    }
    for (row, start, stop), future in futures.items():
      draws[row, start:stop] = future.result()
  return draws


def _check_replications(draws: np.ndarray) -> np.ndarray:
  draws = np.asarray(draws, dtype=float).ravel()
  if draws.size < MIN_REPLICATIONS:
    raise ValueError(f"At least {MIN_REPLICATIONS} draws are needed, got "
                     f"{draws.size}.")
  return draws


@requires_moment_order(1.0)
def empirical_moment(draws, p: float) -> tuple[float, float]:
  """(mean |draw|^p)^(1/p) and its delta-method standard error."""
  draws = _check_replications(draws)
  powers = np.abs(draws)**p
  mean = compensated_sum(powers) / draws.size
  if mean == 0.0:
    return 0.0, 0.0
  spread = compensated_sum((powers - mean)**2) / (draws.size - 1)
  mean_se = math.sqrt(spread / draws.size)
  estimate = mean**(1.0 / p)
  return estimate, estimate / (p * mean) * mean_se


def empirical_tail(draws, x_grid: Sequence[float]) -> TailFunction:
  """max(P(η > x), P(η < -x)) on a grid, with binomial standard errors."""
  draws = _check_replications(draws)
  grid = np.asarray(x_grid, dtype=float)
  ordered = np.sort(draws)
  count = draws.size
  above = count - np.searchsorted(ordered, grid, side="right")
  below = np.searchsorted(ordered, -grid, side="left")
  values = np.maximum(above, below) / count
  errors = np.sqrt(values * (1.0 - values) / count)
  return TailFunction.tabulated(grid,
                                values,
                                errors,
                                label=f"empirical tail, R={count}")


def build_report(plan: SimulationPlan,
                 draws: np.ndarray,
                 setup: Optional[SimulationSetup] = None) -> SimulationReport:
  """Puts empirical moments, tails and norms next to the theoretical values.

    Moment orders p >= 2 get the normalized moment bound, its effective
    constant and the slack ratio theoretical / empirical. Tails get the
    envelope implied by C(d, r) and the natural ψ_d.
    """
  setup = setup or prepare(plan)
  kernel, dist = setup.kernel, setup.dist
  d, r = kernel.arity, setup.projections.rank

  phi_norms = {p: kernel_lp_norm(kernel, dist, p) for p in plan.p_values}
  moments = []
  for row, n in enumerate(plan.n_values):
    for p in plan.p_values:
      estimate, error = empirical_moment(draws[row], p)
      theoretical = c_eff = slack = None
      if p >= 2:
        report = bound_report(BoundInput(d=d,
                                         r=r,
                                         n=n,
                                         p=p,
                                         phi_p=phi_norms[p],
                                         variance=kernel.variance),
                              sigma_n=setup.sigmas[n])
        theoretical, c_eff = report.normalized, report.c_eff
        slack = theoretical / estimate if estimate > 0 else None
      moments.append(
          MomentEstimate(n=n,
                         p=p,
                         estimate=estimate,
                         standard_error=error,
                         theoretical=theoretical,
                         c_eff=c_eff,
                         slack=slack))

  constant = normalized_constant(d, r, setup.projections.variances,
                                 plan.n_values)
  psi_d = psi_d_transform(natural_psi(kernel), d)
  envelope = tail_envelope(psi_d, constant)

  tails = []
  norms = []
  for row, n in enumerate(plan.n_values):
    tail = empirical_tail(draws[row], plan.tail_grid)
    for x, value, error in zip(tail.grid, tail.values, tail.standard_errors):
      tails.append(
          TailEstimate(n=n,
                       x=x,
                       value=value,
                       standard_error=error,
                       envelope=envelope(x)))
    ratios = [(m.estimate / psi_d(m.p), m.standard_error / psi_d(m.p), m.p)
              for m in moments
              if m.n == n and m.p >= 2]
    if ratios:
      value, error, p = max(ratios)
      norms.append(NormEstimate(n=n, p=p, estimate=value,
                                standard_error=error))

  sup_moments = {
      f"{p:g}": max(m.estimate for m in moments if m.p == p)
      for p in plan.p_values
  }
  return SimulationReport(
      plan=plan,
      rank=r,
      sigmas=tuple(SigmaEntry(n=n, sigma=s) for n, s in setup.sigmas.items()),
      moments=tuple(moments),
      tails=tuple(tails),
      norms=tuple(norms),
      sup_moments=sup_moments,
      theorem_bound=constant,
      normalized_constant=constant,
      envelope_threshold=math.e * constant)


def _verdict(kind: VerdictKind, n: int, empirical: float, error: float,
             theoretical: float, negative_control: bool, **where) -> Verdict:
  if negative_control:
    theoretical = NEGATIVE_CONTROL_FACTOR * min(theoretical, empirical)
  return Verdict(kind=kind,
                 n=n,
                 empirical=empirical,
                 standard_error=error,
                 theoretical=theoretical,
                 passed=empirical <= theoretical + SE_SLACK * error,
                 **where)


def verify(report: SimulationReport,
           *,
           negative_control: bool = False) -> VerdictList:
  """Compares every empirical value with its theoretical bound.

    A comparison passes when empirical <= theoretical + 3 standard errors.
    Tails are compared only where at least 10 draws exceed the level. With
    `negative_control`, every theoretical value is replaced by half of
    min(theoretical, empirical), so any well resolved estimate must fail.

    Returns:
        VerdictList: One verdict per comparison; never raises on FAIL.
    """
  verdicts = []
  for m in report.moments:
    if m.theoretical is not None:
      verdicts.append(
          _verdict(VerdictKind.MOMENT,
                   m.n,
                   m.estimate,
                   m.standard_error,
                   m.theoretical,
                   negative_control,
                   p=m.p))
  resolution = TAIL_RESOLUTION / report.plan.replications
  for t in report.tails:
    if t.envelope is not None and t.value >= resolution:
      verdicts.append(
          _verdict(VerdictKind.TAIL,
                   t.n,
                   t.value,
                   t.standard_error,
                   t.envelope,
                   negative_control,
                   x=t.x))
  if report.theorem_bound is not None:
    for g in report.norms:
      verdicts.append(
          _verdict(VerdictKind.NORM,
                   g.n,
                   g.estimate,
                   g.standard_error,
                   report.theorem_bound,
                   negative_control,
                   p=g.p))
  failed = sum(not v.passed for v in verdicts)
  logger.debug("verify: %d comparisons, %d failed", len(verdicts), failed)
  return VerdictList(verdicts)


def report_curves(report: SimulationReport) -> list[dict[str, float]]:
  """Rows (n, x, envelope, empirical_tail, standard_error) for plotting."""
  return [{
      "n": t.n,
      "x": t.x,
      "envelope": t.envelope,
      "empirical_tail": t.value,
      "standard_error": t.standard_error,
  } for t in report.tails]
