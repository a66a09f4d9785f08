"""Exact moments of kernels under finite-support laws, the centered Poisson
law used by the lower-bound construction, and seeded i.i.d. sampling."""

import logging
import math
import warnings

import numpy as np
from scipy.special import gammaln

from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.kernel import CenteredKernel
from ustat_bounds.models.kernel import Kernel
from ustat_bounds.utils.decorators import requires_moment_order
from ustat_bounds.utils.enumeration import check_cap
from ustat_bounds.utils.enumeration import DEFAULT_ENUMERATION_CAP
from ustat_bounds.utils.error_handling import DegenerateKernelError
from ustat_bounds.utils.error_handling import DomainError
from ustat_bounds.utils.numerics import compensated_sum
from ustat_bounds.utils.numerics import lp_norm
from ustat_bounds.utils.numerics import product_weights
from ustat_bounds.utils.seeding import make_generator
from ustat_bounds.utils.seeding import SeedLike

logger = logging.getLogger(__name__)

DEFAULT_TAIL_TOL: float = 1e-15
DEGENERACY_TOLERANCE: float = 1e-12

# Atoms whose probability would fall below this are not representable.
_MIN_LOG_PROBABILITY: float = math.log(1e-300)
_WARN_LOG_PROBABILITY: float = math.log(1e-250)
_MAX_POISSON_TERMS: int = 10**7
_LOG_HALF: float = math.log(0.5)


def support_weights(dist: DiscreteDistribution, arity: int) -> np.ndarray:
  """Product probabilities of support^arity, shaped (size,) * arity."""
  return product_weights(dist.probabilities, arity)


@requires_moment_order(1.0)
def kernel_lp_norm(kernel: Kernel,
                   dist: DiscreteDistribution,
                   p: float,
                   *,
                   cap: int = DEFAULT_ENUMERATION_CAP,
                   strict: bool = False) -> float:
  """Computes |Φ|_p exactly by enumerating support^d.

    Args:
        kernel (Kernel): The kernel Φ (a CenteredKernel gives the centered norm).
        dist (DiscreteDistribution): Law of the arguments.
        p (float): Moment order, p >= 1.
        cap (int): Largest number of support tuples to enumerate.
        strict (bool): If True, check symmetry before computing.

    Returns:
        float: (E|Φ|^p)^(1/p).

    Raises:
        CapExceededError: If support^d is larger than `cap`.
        NonSymmetricKernelError: In strict mode, if Φ is not symmetric.
    """
  check_cap(dist.size**kernel.arity, cap)
  if strict:
    kernel.check_symmetry(dist, cap)
  values = kernel.table(dist, cap)
  return lp_norm(values, support_weights(dist, kernel.arity), p)


def center(kernel: Kernel,
           dist: DiscreteDistribution,
           *,
           cap: int = DEFAULT_ENUMERATION_CAP) -> CenteredKernel:
  """Shifts a kernel to mean zero under `dist` and records its variance.

    Raises:
        DegenerateKernelError: If Var Φ <= 1e-12.
        CapExceededError: If support^d is larger than `cap`.
    """
  base = kernel.base if isinstance(kernel, CenteredKernel) else kernel
  values = base.table(dist, cap)
  weights = support_weights(dist, base.arity)
  mean = compensated_sum(values * weights)
  variance = compensated_sum((values - mean)**2 * weights)
  if variance <= DEGENERACY_TOLERANCE:
    raise DegenerateKernelError(
        f"Kernel '{base.name}' has variance {variance:.3g} under the law.")

  base_func = base.func

  def centered(*xs):
    return np.asarray(base_func(*xs), dtype=float) - mean

  logger.debug("centered kernel %s: mean=%r variance=%r", base.name, mean,
               variance)
  return CenteredKernel(name=base.name,
                        arity=base.arity,
                        func=centered,
                        base=base,
                        mean=mean,
                        variance=variance,
                        distribution=dist)


def _poisson_terms(p: float, start: int, stop: int) -> np.ndarray:
  """log(e^-1 / k! * |k - 1|^p) for k in [start, stop)."""
  k = np.arange(start, stop, dtype=float)
  log_probability = -1.0 - gammaln(k + 1.0)
  with np.errstate(divide="ignore"):
    log_abs = np.log(np.abs(k - 1.0))
  return log_probability + p * log_abs


def _poisson_cutoff(p: float, tail_tol: float) -> tuple[int, float]:
  """Finds the truncation point K of the centered Poisson p-th moment series.

    K is the first k >= 2 after which terms shrink by at least half per step
    and the k-th term is below `tail_tol` times the running sum; the
    discarded tail is then smaller than the last kept term.

    Returns:
        tuple[int, float]: The cutoff K and log of the kept partial sum.
    """
  log_tol = math.log(tail_tol)
  block = max(1024, int(4 * p / math.log(max(p, 3.0))))
  terms = np.empty(0)
  while terms.size < _MAX_POISSON_TERMS:
    terms = np.concatenate([terms, _poisson_terms(p, terms.size,
                                                  terms.size + block)])
    running = np.logaddexp.accumulate(terms)
    with np.errstate(invalid="ignore"):
      ratios = np.diff(terms)
    k = np.arange(terms.size - 1)
    stop = (k >= 2) & (ratios < _LOG_HALF) & (terms[:-1] - running[:-1] <
                                              log_tol)
    if stop.any():
      cutoff = int(np.argmax(stop))
      logger.debug("poisson cutoff for p=%g: K=%d", p, cutoff)
      return cutoff, float(running[cutoff])
    block *= 2
  raise DomainError(f"The centered Poisson series for p={p} does not settle.")


@requires_moment_order(1.0, argument="p_max")
def truncated_centered_poisson(
    p_max: float,
    tail_tol: float = DEFAULT_TAIL_TOL) -> DiscreteDistribution:
  """Builds the centered Poisson(1) law ξ = η - 1 truncated at an adaptive K.

    K is chosen so that the discarded part of E|ξ|^p_max is below `tail_tol`
    relative to the kept part; the kept probabilities are renormalized.

    Args:
        p_max (float): Largest moment order the truncation must preserve.
        tail_tol (float): Relative tolerance for the discarded tail.

    Returns:
        DiscreteDistribution: Atoms k - 1, k = 0..K.

    Raises:
        DomainError: If K would need probabilities below the float floor.
    """
  if not tail_tol > 0:
    raise ValueError("tail_tol must be positive.")
  cutoff, _ = _poisson_cutoff(p_max, tail_tol)
  k = np.arange(cutoff + 1, dtype=float)
  log_probabilities = -1.0 - gammaln(k + 1.0)
  if log_probabilities[-1] < _MIN_LOG_PROBABILITY:
    raise DomainError(f"p_max={p_max} needs atoms with probability below "
                      "the double precision floor.")
  if log_probabilities[-1] < _WARN_LOG_PROBABILITY:
    warnings.warn(
        f"Truncating the centered Poisson law at K={cutoff} keeps atoms "
        "with probabilities close to the double precision floor.",
        RuntimeWarning,
        stacklevel=2)
  probabilities = np.exp(log_probabilities)
  probabilities = probabilities / compensated_sum(probabilities)
  atoms = [(float(x - 1.0), float(w)) for x, w in zip(k, probabilities)]
  return DiscreteDistribution(atoms=atoms, name="poisson_centered")


@requires_moment_order(1.0)
def centered_poisson_lp_norm(p: float,
                             tail_tol: float = DEFAULT_TAIL_TOL) -> float:
  """|ξ|_p for the untruncated centered Poisson(1) law, summed in log space."""
  _, log_moment = _poisson_cutoff(p, tail_tol)
  return math.exp(log_moment / p)


def centered_poisson_log_moment(p: float,
                                tail_tol: float = DEFAULT_TAIL_TOL) -> float:
  """log E|ξ|^p for the untruncated centered Poisson(1) law."""
  return _poisson_cutoff(float(p), tail_tol)[1]


@requires_moment_order(2.0)
def poisson_norm_growth(p: float) -> float:
  """Ratio of the exact |ξ|_p to its asymptotic growth p / (e ln p)."""
  return centered_poisson_lp_norm(p) / (p / (math.e * math.log(p)))


def sample_iid(dist: DiscreteDistribution, n: int, seed: SeedLike) -> np.ndarray:
  """Draws n i.i.d. points from `dist` by inverse CDF over the atoms.

    The output is a pure function of (dist, n, seed).

    Args:
        dist (DiscreteDistribution): The law to sample.
        n (int): Number of points, n >= 1.
        seed (int | np.random.SeedSequence): Unsigned 64-bit seed or a
            SeedSequence derived from one.

    Returns:
        np.ndarray: The sample.
    """
  if n < 1:
    raise ValueError("n must be at least 1.")
  generator = make_generator(seed)
  uniforms = generator.random(n)
  indices = np.searchsorted(dist.cdf(), uniforms, side="right")
  return dist.points[np.minimum(indices, dist.size - 1)]

