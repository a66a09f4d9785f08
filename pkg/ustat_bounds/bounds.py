"""Explicit constants and moment bounds for centered U-statistics.

All logarithms are natural.
"""

from functools import lru_cache
import logging
import math
from typing import Optional, Sequence

from ustat_bounds.hoeffding import variance_from_components
from ustat_bounds.model import centered_poisson_lp_norm
from ustat_bounds.models.bounds import BoundInput
from ustat_bounds.models.bounds import BoundReport
from ustat_bounds.models.bounds import GammaTable
from ustat_bounds.models.bounds import SandwichReport
from ustat_bounds.utils.decorators import requires_moment_order
from ustat_bounds.utils.enumeration import binomial
from ustat_bounds.utils.error_handling import DegenerateVarianceError
from ustat_bounds.utils.error_handling import DomainError
from ustat_bounds.utils.numerics import grid_sup

logger = logging.getLogger(__name__)

OS_BREAKPOINT: float = 4.0
OS_SEARCH_UPPER: float = 1e4
MAX_WITNESS_DEGREE: int = 4


def growth(p: float) -> float:
  """p / ln p."""
  return p / math.log(p)


def growth_power(p: float, m: int) -> float:
  """(p / ln p)^m.

    Raises:
        DomainError: If the power overflows a float.
    """
  try:
    return growth(p)**m
  except OverflowError as error:
    raise DomainError(f"(p / ln p)^{m} overflows at p = {p}.") from error


def _os_formula(p: float) -> float:
  return (4.0 * math.sqrt(2.0) * (p / 4.0 + 1.0)**(1.0 / p) *
          (1.0 + p / math.log(p / 2.0)))


@requires_moment_order(2.0)
def osekowski_os(p: float) -> float:
  """Osekowski's martingale moment constant Os(p).

    For p >= 4 this is 4√2 (p/4 + 1)^(1/p) (1 + p / ln(p/2)); on [2, 4) it is
    held at Os(4).

    Raises:
        DomainError: If p < 2.
    """
  return _os_formula(max(float(p), OS_BREAKPOINT))


def osekowski_sup(lo: float = OS_BREAKPOINT,
                  hi: float = OS_SEARCH_UPPER) -> float:
  """sup of Os(p) / (p / ln p) over [lo, hi]."""
  if lo < 2.0 or hi < lo:
    raise DomainError(f"Invalid search interval [{lo}, {hi}].")
  result = grid_sup(lambda p: osekowski_os(p) / growth(p), lo, hi)
  return result.value


@lru_cache(maxsize=None)
def osekowski_constant() -> float:
  """K_Os = sup_{p >= 4} Os(p) / (p / ln p), about 15.7858."""
  value = osekowski_sup(OS_BREAKPOINT, OS_SEARCH_UPPER)
  logger.debug("osekowski constant: %r", value)
  return value


@lru_cache(maxsize=None)
def gamma(d: int) -> float:
  """γ(1) = K_Os and γ(d + 1) = γ(d) K_Os (1 + 1/d)^d."""
  if d < 1:
    raise DomainError(f"γ is defined for d >= 1, got {d}.")
  k_os = osekowski_constant()
  if d == 1:
    return k_os
  return gamma(d - 1) * k_os * (1.0 + 1.0 / (d - 1))**(d - 1)


def gamma_table(d_max: int) -> GammaTable:
  """γ(1..d_max)."""
  return GammaTable({d: gamma(d) for d in range(1, d_max + 1)})


@requires_moment_order(2.0)
def martingale_moment_bound(m: int, p: float, phi_p: float) -> float:
  """γ(m) (p / ln p)^m |Φ|_p, the bound on the degree-m martingale part."""
  return gamma(m) * growth_power(p, m) * phi_p


def moment_bound_terms(inp: BoundInput) -> tuple[float, ...]:
  """γ(m) C(d,m) C(n,m)^(-1/2) (p / ln p)^m |Φ|_p for m = r..d."""
  return tuple(
      binomial(inp.d, m) / math.sqrt(binomial(inp.n, m)) *
      martingale_moment_bound(m, inp.p, inp.phi_p)
      for m in range(inp.r, inp.d + 1))


def moment_bound_detailed(inp: BoundInput) -> float:
  """Upper bound on |U(n) - E U(n)|_p summed over the Hoeffding components."""
  return math.fsum(moment_bound_terms(inp))


def moment_bound_normalized(inp: BoundInput, sigma_n: float) -> float:
  """Upper bound on |(U(n) - E U(n)) / σ(n)|_p.

    Raises:
        DegenerateVarianceError: If sigma_n <= 0.
    """
  if not sigma_n > 0:
    raise DegenerateVarianceError(f"σ(n) must be positive, got {sigma_n}.")
  return moment_bound_detailed(inp) / sigma_n


def bound_report(inp: BoundInput,
                 sigma_n: Optional[float] = None) -> BoundReport:
  """Detailed and normalized bounds with their effective constants.

    Args:
        inp (BoundInput): Degree, rank, sample size, order and |Φ|_p.
        sigma_n (Optional[float]): Standard deviation of U(n); the normalized
            values are left out when it is None.

    Returns:
        BoundReport: The bounds, the summands and γ(1..d).
    """
  terms = moment_bound_terms(inp)
  detailed = math.fsum(terms)
  scale = growth_power(inp.p, inp.d) * inp.phi_p
  normalized = c_normalized = None
  if sigma_n is not None:
    normalized = moment_bound_normalized(inp, sigma_n)
    c_normalized = normalized / scale
  return BoundReport(input=inp,
                     detailed=detailed,
                     terms=terms,
                     sigma_n=sigma_n,
                     normalized=normalized,
                     c_eff=detailed / (inp.n**(-inp.r / 2.0) * scale),
                     c_normalized=c_normalized,
                     gamma_table=gamma_table(inp.d))


def normalized_constant(d: int,
                        r: int,
                        variances: Sequence[float],
                        n_values: Sequence[int],
                        p_grid: Optional[Sequence[float]] = None) -> float:
  """Effective constant C(d, r) with |U(n)/σ(n)|_p <= C (p/ln p)^d |Φ|_p.

    The constant is the largest normalized-bound coefficient over `n_values`
    and over p. Without a grid the p-supremum is taken exactly: every factor
    (p / ln p)^(m - d) is largest where p / ln p is smallest, at p = e.

    Args:
        d (int): Kernel degree.
        r (int): Kernel rank.
        variances (Sequence[float]): Var g_1, ..., Var g_d.
        n_values (Sequence[int]): Sample sizes, each at least d.
        p_grid (Optional[Sequence[float]]): Moment orders >= 2 to maximize
            over instead of the exact supremum.

    Returns:
        float: The constant.
    """
  if not n_values:
    raise ValueError("n_values must not be empty.")
  if p_grid is None:
    factors = [math.e**(m - d) for m in range(d + 1)]
  best = 0.0
  for n in n_values:
    sigma = math.sqrt(variance_from_components(d, r, variances, n))
    if not sigma > 0:
      raise DegenerateVarianceError(f"σ({n}) is zero.")
    weights = [
        gamma(m) * binomial(d, m) / math.sqrt(binomial(n, m))
        for m in range(r, d + 1)
    ]
    if p_grid is None:
      value = math.fsum(w * factors[m]
                        for w, m in zip(weights, range(r, d + 1)))
    else:
      value = max(
          math.fsum(w * growth(p)**(m - d)
                    for w, m in zip(weights, range(r, d + 1)))
          for p in p_grid)
    best = max(best, value / sigma)
  return best


@requires_moment_order(2.0)
def previous_bound_growth(d: int, p: float) -> float:
  """The earlier p^d / ln p growth rate, for comparison with (p / ln p)^d."""
  return p**d / math.log(p)


def _check_witness_degree(d: int) -> None:
  if not 1 <= d <= MAX_WITNESS_DEGREE:
    raise DomainError(
        f"The product witness supports 1 <= d <= {MAX_WITNESS_DEGREE}, got {d}.")


@requires_moment_order(2.0)
def lower_bound_ratio(d: int, p: float) -> float:
  """|ξ_1 ... ξ_d|_p / (p / ln p)^d for independent centered Poisson(1) ξ_i.

    Independence factorizes the norm into |ξ|_p^d.

    Raises:
        DomainError: If p < 2 or d is outside 1..4.
    """
  _check_witness_degree(d)
  return (centered_poisson_lp_norm(p) / growth(p))**d


@requires_moment_order(2.0)
def sandwich(d: int, p: float) -> SandwichReport:
  """Brackets the product witness |ξ_1 ... ξ_d|_p between e^(-d)/2 and the
  detailed bound for U(d), all divided by (p / ln p)^d."""
  _check_witness_degree(d)
  phi_p = centered_poisson_lp_norm(p)**d
  upper = moment_bound_detailed(BoundInput(d=d, r=d, n=d, p=p, phi_p=phi_p))
  return SandwichReport(d=d,
                        p=p,
                        lower_ratio=lower_bound_ratio(d, p),
                        upper_ratio=upper / growth_power(p, d),
                        witness_floor=math.exp(-d) / 2.0)
