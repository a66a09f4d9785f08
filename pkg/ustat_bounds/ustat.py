"""U-statistic evaluation: direct, streaming, from atom counts, and the
brute-force distribution oracle for tiny instances."""

from itertools import chain
import logging
import math
from typing import Iterable, Optional

import numpy as np
from scipy.special import comb

from ustat_bounds.model import support_weights
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.kernel import CenteredKernel
from ustat_bounds.models.kernel import Kernel
from ustat_bounds.models.ustat import IndexSet
from ustat_bounds.models.ustat import UStatValue
from ustat_bounds.utils.enumeration import binomial
from ustat_bounds.utils.enumeration import check_cap
from ustat_bounds.utils.enumeration import DEFAULT_ENUMERATION_CAP
from ustat_bounds.utils.enumeration import index_tuple_chunks
from ustat_bounds.utils.enumeration import INDEX_CHUNK_SIZE
from ustat_bounds.utils.enumeration import multiplicities
from ustat_bounds.utils.enumeration import multisets
from ustat_bounds.utils.error_handling import ArityMismatchError
from ustat_bounds.utils.error_handling import NotReadyError
from ustat_bounds.utils.error_handling import SampleTooShortError
from ustat_bounds.utils.numerics import compensated_sum

logger = logging.getLogger(__name__)

# U values closer than this are merged into one atom of the exact law.
ATOM_DECIMALS: int = 12


def kernel_mean(kernel: Kernel, dist: DiscreteDistribution) -> float:
  """E Φ under `dist` (0 for a kernel centered against `dist`)."""
  if isinstance(kernel, CenteredKernel) and kernel.distribution == dist:
    return 0.0
  values = kernel.table(dist)
  return compensated_sum(values * support_weights(dist, kernel.arity))


def _check_sizes(arity: int, sample: np.ndarray, n: int) -> None:
  if n < arity:
    raise ArityMismatchError(
        f"n={n} is smaller than the kernel degree {arity}.")
  if sample.shape[0] < n:
    raise SampleTooShortError(
        f"The sample has {sample.shape[0]} points, {n} requested.")


def evaluate(kernel: Kernel,
             sample,
             n: int,
             *,
             dist: Optional[DiscreteDistribution] = None,
             cap: int = DEFAULT_ENUMERATION_CAP,
             chunk_size: int = INDEX_CHUNK_SIZE) -> UStatValue:
  """Evaluates U(n) = C(n,d)^-1 Σ Φ(ξ_i1, ..., ξ_id) over increasing tuples.

    Args:
        kernel (Kernel): The kernel Φ.
        sample: The observations; the first n are used.
        n (int): Sample size, n >= d.
        dist (Optional[DiscreteDistribution]): If given, E U(n) = E Φ is taken
            under this law to fill `centered_value`. A CenteredKernel is
            centered already.
        cap (int): Largest number of tuples to visit.
        chunk_size (int): Tuples evaluated per vectorized call.

    Returns:
        UStatValue: U(n), its centered value and the number of tuples visited.

    Raises:
        ArityMismatchError: If n < d.
        SampleTooShortError: If the sample has fewer than n points.
        CapExceededError: If C(n, d) exceeds `cap`.
    """
  x = np.asarray(sample, dtype=float).ravel()
  _check_sizes(kernel.arity, x, n)
  index_set = IndexSet(d=kernel.arity, n=n)
  total_tuples = check_cap(len(index_set), cap)
  x = x[:n]

  visited = 0
  chunk_values = []
  for rows in index_set.chunks(chunk_size):
    visited += rows.shape[0]
    values = kernel.evaluate([x[rows[:, j]] for j in range(kernel.arity)])
    chunk_values.append(values.tolist())
  assert visited == total_tuples, "tuple enumeration is incomplete"

  value = math.fsum(chain.from_iterable(chunk_values)) / total_tuples
  if isinstance(kernel, CenteredKernel):
    centered = value
  elif dist is not None:
    centered = value - kernel_mean(kernel, dist)
  else:
    centered = None
  return UStatValue(n=n,
                    value=value,
                    centered_value=centered,
                    tuple_count=visited)


class StreamingUStatistic:
  """Maintains U(n) while points arrive one at a time.

    When point n arrives, only the C(n-1, d-1) tuples that end at it are
    evaluated; their sum is kept per point and the running statistic is
    the compensated total over C(n, d).

    Attributes:
        kernel (Kernel): The kernel Φ.
        count (int): Number of points fed so far.
    """

  def __init__(self, kernel: Kernel, chunk_size: int = INDEX_CHUNK_SIZE):
    self.kernel = kernel
    self.chunk_size = chunk_size
    self._points: list[float] = []
    self._contributions: list[float] = []

  @property
  def count(self) -> int:
    return len(self._points)

  @property
  def tuple_sum(self) -> float:
    """Σ Φ over all increasing d-tuples of the points fed so far."""
    return math.fsum(self._contributions)

  def update(self, new_point: float) -> "StreamingUStatistic":
    d = self.kernel.arity
    previous = np.asarray(self._points, dtype=float)
    x = float(new_point)
    if d == 1:
      contribution = self.kernel(x)
    elif previous.size < d - 1:
      contribution = 0.0
    else:
      parts = []
      for rows in index_tuple_chunks(previous.size, d - 1, self.chunk_size):
        columns = [previous[rows[:, j]] for j in range(d - 1)]
        columns.append(np.full(rows.shape[0], x))
        parts.extend(self.kernel.evaluate(columns).tolist())
      contribution = math.fsum(parts)
    self._points.append(x)
    self._contributions.append(contribution)
    return self

  def extend(self, points: Iterable[float]) -> "StreamingUStatistic":
    for point in points:
      self.update(point)
    return self

  def value(self) -> UStatValue:
    """U(count); requires at least d points."""
    if self.count < self.kernel.arity:
      raise NotReadyError(f"{self.count} points fed, the kernel needs "
                          f"{self.kernel.arity}.")
    tuples = binomial(self.count, self.kernel.arity)
    value = self.tuple_sum / tuples
    centered = value if isinstance(self.kernel, CenteredKernel) else None
    return UStatValue(n=self.count,
                      value=value,
                      centered_value=centered,
                      tuple_count=tuples)


def incremental_update(state: StreamingUStatistic,
                       new_point: float) -> StreamingUStatistic:
  """Feeds one point to a streaming statistic and returns it."""
  return state.update(new_point)


class CountEvaluator:
  """Evaluates U(n) of discrete samples from their atom counts.

    A sample with counts c_a of atom a has U(n) = C(n,d)^-1 Σ_M Φ(M)
    Π_a C(c_a, k_a(M)), summed over multisets M of d atoms with
    multiplicities k_a(M). The cost depends on the support size and d,
    not on C(n, d).
    """

  def __init__(self, kernel: Kernel, dist: DiscreteDistribution):
    self.kernel = kernel
    self.dist = dist
    rows = multisets(dist.size, kernel.arity)
    self.multiplicities = multiplicities(rows, dist.size)
    points = dist.points
    self.values = kernel.evaluate(
        [points[rows[:, j]] for j in range(kernel.arity)])
    logger.debug("count evaluator for %s: %d multisets", kernel.name,
                 rows.shape[0])

  def counts_of(self, sample) -> np.ndarray:
    """Atom counts of a sample drawn from the support."""
    indices = self.dist.index_of(np.asarray(sample, dtype=float).ravel())
    return np.bincount(indices, minlength=self.dist.size)

  def __call__(self, counts) -> np.ndarray:
    """U(n) for each row of `counts` (shape (rows, size) or (size,))."""
    counts = np.atleast_2d(np.asarray(counts))
    totals = counts.sum(axis=1)
    if np.any(totals != totals[0]):
      raise ValueError("All count rows must have the same sample size.")
    n = int(totals[0])
    if n < self.kernel.arity:
      raise ArityMismatchError(
          f"n={n} is smaller than the kernel degree {self.kernel.arity}.")
    weights = comb(counts[:, None, :], self.multiplicities[None, :, :]).prod(
        axis=2)
    return (weights * self.values[None, :]).sum(axis=1) / comb(
        n, self.kernel.arity)


def evaluate_from_counts(kernel: Kernel, dist: DiscreteDistribution,
                         counts) -> UStatValue:
  """U(n) of a discrete sample given the count of every atom."""
  evaluator = CountEvaluator(kernel, dist)
  counts = np.asarray(counts)
  value = float(evaluator(counts)[0])
  n = int(counts.sum())
  centered = value if isinstance(kernel, CenteredKernel) else None
  return UStatValue(n=n,
                    value=value,
                    centered_value=centered,
                    tuple_count=evaluator.values.size)


def brute_force_distribution(
    kernel: Kernel,
    dist: DiscreteDistribution,
    n: int,
    *,
    cap: int = DEFAULT_ENUMERATION_CAP,
    chunk_size: int = INDEX_CHUNK_SIZE) -> list[tuple[float, float]]:
  """The exact law of U(n) by enumerating all support^n outcomes.

    Args:
        kernel (Kernel): The kernel Φ.
        dist (DiscreteDistribution): Law of each observation.
        n (int): Sample size, n >= d.
        cap (int): Largest number of outcomes to enumerate.
        chunk_size (int): Outcomes processed per vectorized block.

    Returns:
        list[tuple[float, float]]: (u, probability) pairs sorted by u.

    Raises:
        CapExceededError: If size^n exceeds `cap`.
        ArityMismatchError: If n < d.
    """
  if n < kernel.arity:
    raise ArityMismatchError(
        f"n={n} is smaller than the kernel degree {kernel.arity}.")
  size = dist.size
  outcomes = check_cap(size**n, cap)
  tuples = np.array(list(IndexSet(d=kernel.arity, n=n).tuples()),
                    dtype=np.intp) - 1
  points = dist.points
  log_probabilities = np.log(dist.probabilities)

  law: dict[float, list[float]] = {}
  for start in range(0, outcomes, chunk_size):
    flat = np.arange(start, min(start + chunk_size, outcomes))
    indices = np.stack(np.unravel_index(flat, (size,) * n), axis=1)
    sample = points[indices]
    total = np.zeros(flat.size)
    for row in tuples:
      total = total + kernel.evaluate([sample[:, j] for j in row])
    u = np.round(total / tuples.shape[0], ATOM_DECIMALS)
    probability = np.exp(log_probabilities[indices].sum(axis=1))
    for value, weight in zip(u.tolist(), probability.tolist()):
      law.setdefault(value, []).append(weight)

  return [(value, math.fsum(law[value])) for value in sorted(law)]


def brute_force_moment(kernel: Kernel,
                       dist: DiscreteDistribution,
                       n: int,
                       p: float,
                       *,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> float:
  """Exact E|U(n) - E U(n)|^p from the enumerated law of U(n)."""
  law = brute_force_distribution(kernel, dist, n, cap=cap)
  values = np.array([u for u, _ in law])
  weights = np.array([w for _, w in law])
  mean = compensated_sum(values * weights)
  return compensated_sum(np.abs(values - mean)**p * weights)
