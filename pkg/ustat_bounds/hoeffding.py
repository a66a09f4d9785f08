"""Exact Hoeffding decomposition of a centered kernel under a finite law."""

from itertools import combinations
import logging
import math
from typing import Optional, Sequence

import numpy as np

from ustat_bounds.model import center
from ustat_bounds.model import support_weights
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.kernel import CenteredKernel
from ustat_bounds.models.kernel import Kernel
from ustat_bounds.models.projection import ProjectionSet
from ustat_bounds.models.projection import ProjectionTable
from ustat_bounds.ustat import evaluate
from ustat_bounds.ustat import StreamingUStatistic
from ustat_bounds.utils.enumeration import binomial
from ustat_bounds.utils.enumeration import DEFAULT_ENUMERATION_CAP
from ustat_bounds.utils.error_handling import ArityMismatchError
from ustat_bounds.utils.error_handling import TrivialKernelError
from ustat_bounds.utils.numerics import compensated_sum

logger = logging.getLogger(__name__)

RANK_TOLERANCE: float = 1e-10


def _centered(kernel: Kernel, dist: DiscreteDistribution,
              cap: int) -> CenteredKernel:
  if isinstance(kernel, CenteredKernel) and kernel.distribution == dist:
    return kernel
  return center(kernel, dist, cap=cap)


def conditional_kernel(kernel: Kernel,
                       dist: DiscreteDistribution,
                       m: int,
                       *,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
  """Tabulates Φ_m(x_1..x_m) = E Φ(x_1..x_m, ξ_{m+1}..ξ_d).

    The kernel is centered against `dist` first, so Φ_0 = 0 and Φ_d is the
    centered kernel itself.

    Returns:
        np.ndarray: Table of shape (size,) * m indexed by atom indices.

    Raises:
        ValueError: If m is outside 0..d.
        CapExceededError: If support^d exceeds `cap`.
    """
  centered = _centered(kernel, dist, cap)
  if not 0 <= m <= centered.arity:
    raise ValueError(f"m must lie in [0, {centered.arity}], got {m}.")
  table = centered.table(dist, cap)
  probabilities = dist.probabilities
  for _ in range(centered.arity - m):
    table = np.tensordot(table, probabilities, axes=([-1], [0]))
  return np.asarray(table, dtype=float)


def _projection_from_conditionals(conditionals: Sequence[np.ndarray],
                                  m: int) -> np.ndarray:
  """g_m = Σ_{A ⊆ {1..m}} (-1)^(m - |A|) Φ_|A|(x_A), broadcast over m axes."""
  size = conditionals[m].shape[0]
  g = np.zeros((size,) * m)
  for k in range(m + 1):
    sign = -1.0 if (m - k) % 2 else 1.0
    for axes in combinations(range(m), k):
      shape = [size if i in axes else 1 for i in range(m)]
      g = g + sign * conditionals[k].reshape(shape)
  return g


def projection(kernel: Kernel,
               dist: DiscreteDistribution,
               m: int,
               *,
               cap: int = DEFAULT_ENUMERATION_CAP) -> ProjectionTable:
  """Builds the completely degenerate projection g_m, 1 <= m <= d."""
  centered = _centered(kernel, dist, cap)
  if not 1 <= m <= centered.arity:
    raise ValueError(f"m must lie in [1, {centered.arity}], got {m}.")
  conditionals = [
      conditional_kernel(centered, dist, k, cap=cap) for k in range(m + 1)
  ]
  return _table(centered, dist, conditionals, m)


def _table(centered: CenteredKernel, dist: DiscreteDistribution,
           conditionals: Sequence[np.ndarray], m: int) -> ProjectionTable:
  values = _projection_from_conditionals(conditionals, m)
  weights = support_weights(dist, m)
  mean = compensated_sum(values * weights)
  variance = max(compensated_sum(values**2 * weights) - mean**2, 0.0)
  return ProjectionTable(degree=m,
                         values=values,
                         variance=variance,
                         distribution=dist,
                         kernel_name=centered.name)


def decompose(kernel: Kernel,
              dist: DiscreteDistribution,
              *,
              rank_tol: float = RANK_TOLERANCE,
              cap: int = DEFAULT_ENUMERATION_CAP) -> ProjectionSet:
  """Computes g_1..g_d, their variances and the rank of the kernel.

    Args:
        kernel (Kernel): The kernel; centered against `dist` if needed.
        dist (DiscreteDistribution): Law of the observations.
        rank_tol (float): Var g_m at or below this counts as zero.
        cap (int): Largest number of support tuples to enumerate.

    Returns:
        ProjectionSet: The projections and the rank.

    Raises:
        TrivialKernelError: If every projection has variance <= rank_tol.
        DegenerateKernelError: If Var Φ is zero.
    """
  centered = _centered(kernel, dist, cap)
  d = centered.arity
  conditionals = [
      conditional_kernel(centered, dist, k, cap=cap) for k in range(d + 1)
  ]
  tables = tuple(
      _table(centered, dist, conditionals, m) for m in range(1, d + 1))
  ranks = [g.degree for g in tables if not g.is_zero(rank_tol)]
  if not ranks:
    raise TrivialKernelError(
        f"Every projection of '{centered.name}' has variance <= {rank_tol}.")
  logger.debug("decomposed %s: variances=%s rank=%d", centered.name,
               [g.variance for g in tables], ranks[0])
  return ProjectionSet(kernel_name=centered.name,
                       arity=d,
                       projections=tables,
                       rank=ranks[0],
                       rank_tol=rank_tol,
                       kernel_variance=centered.variance)


def rank(kernel: Kernel,
         dist: DiscreteDistribution,
         *,
         rank_tol: float = RANK_TOLERANCE) -> int:
  """Smallest m with Var g_m > rank_tol."""
  return decompose(kernel, dist, rank_tol=rank_tol).rank


def component_ustat(g: ProjectionTable, sample, n: int) -> float:
  """U_{n,m} = C(n,m)^-1 Σ g_m over increasing m-tuples of the sample.

    Raises:
        ArityMismatchError: If n < m.
    """
  return evaluate(g.as_kernel(), sample, n).value


def martingale_path(g: ProjectionTable, sample) -> np.ndarray:
  """S_m(k) = C(k,m) U_{k,m} for k = m..len(sample).

    The sums form a martingale in k under the natural filtration.
    """
  sample = np.asarray(sample, dtype=float).ravel()
  if sample.size < g.degree:
    raise ArityMismatchError(
        f"The sample has {sample.size} points, g_{g.degree} needs {g.degree}.")
  stream = StreamingUStatistic(g.as_kernel())
  path = []
  for k, x in enumerate(sample, start=1):
    stream.update(x)
    if k >= g.degree:
      path.append(stream.tuple_sum)
  return np.array(path)


def _resolve(kernel: Kernel, dist: DiscreteDistribution,
             projections: Optional[ProjectionSet]) -> ProjectionSet:
  return projections if projections is not None else decompose(kernel, dist)


def reconstruct(kernel: Kernel,
                dist: DiscreteDistribution,
                sample,
                n: int,
                *,
                projections: Optional[ProjectionSet] = None) -> float:
  """U(n) - E U(n) rebuilt as Σ_{m=r}^d C(d,m) U_{n,m}."""
  projections = _resolve(kernel, dist, projections)
  d = projections.arity
  if n < d:
    raise ArityMismatchError(f"n={n} is smaller than the kernel degree {d}.")
  terms = [
      binomial(d, g.degree) * component_ustat(g, sample, n)
      for g in projections.active()
  ]
  return math.fsum(terms)


def variance_from_components(d: int, r: int, variances: Sequence[float],
                             n: int) -> float:
  """σ²(n) = Σ_{m=r}^d C(d,m)² C(n,m)^-1 Var g_m."""
  if n < d:
    raise ArityMismatchError(f"n={n} is smaller than the kernel degree {d}.")
  return math.fsum(binomial(d, m)**2 / binomial(n, m) * variances[m - 1]
                   for m in range(r, d + 1))


def variance_exact(kernel: Kernel,
                   dist: DiscreteDistribution,
                   n: int,
                   *,
                   projections: Optional[ProjectionSet] = None) -> float:
  """Exact Var U(n) from the projection variances."""
  projections = _resolve(kernel, dist, projections)
  return variance_from_components(projections.arity, projections.rank,
                                  projections.variances, n)


def variance_asymptotic(kernel: Kernel,
                        dist: DiscreteDistribution,
                        n: int,
                        *,
                        projections: Optional[ProjectionSet] = None) -> float:
  """Leading term r! C(d,r)² n^-r Var g_r of Var U(n)."""
  projections = _resolve(kernel, dist, projections)
  d, r = projections.arity, projections.rank
  if n < d:
    raise ArityMismatchError(f"n={n} is smaller than the kernel degree {d}.")
  return (math.factorial(r) * binomial(d, r)**2 * n**(-r) *
          projections.variances[r - 1])
