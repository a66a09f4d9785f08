from functools import cached_property
from typing import Optional, Sequence

from ustat_bounds.bounds import bound_report
from ustat_bounds.gls import gls_norm_bound
from ustat_bounds.gls import natural_psi
from ustat_bounds.hoeffding import decompose
from ustat_bounds.hoeffding import reconstruct
from ustat_bounds.hoeffding import variance_asymptotic
from ustat_bounds.hoeffding import variance_exact
from ustat_bounds.model import center
from ustat_bounds.model import kernel_lp_norm
from ustat_bounds.models.bounds import BoundInput
from ustat_bounds.models.bounds import BoundReport
from ustat_bounds.models.config import RunConfig
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.gls import PsiFunction
from ustat_bounds.models.kernel import CenteredKernel
from ustat_bounds.models.kernel import Kernel
from ustat_bounds.models.projection import ProjectionSet
from ustat_bounds.models.ustat import UStatValue
from ustat_bounds.ustat import evaluate
from ustat_bounds.utils.decorators import requires_pandas
from ustat_bounds.utils.enumeration import DEFAULT_ENUMERATION_CAP
from ustat_bounds.utils.error_handling import ConfigError

try:
  import pandas as pd
except ImportError:
  pd = None


class UStatisticAnalysis:
  """
    Wires a kernel and a distribution to the decomposition, bound and
    Grand Lebesgue computations.

    The kernel is centered and decomposed once, on first use.

    Attributes:
        kernel (Kernel): The uncentered kernel.
        dist (DiscreteDistribution): Law of the observations.
        cap (int): Largest number of support tuples to enumerate.
    """

  def __init__(self,
               kernel: Kernel,
               dist: DiscreteDistribution,
               *,
               cap: int = DEFAULT_ENUMERATION_CAP):
    self.kernel = kernel
    self.dist = dist
    self.cap = cap

  @classmethod
  def from_config(cls, config: RunConfig) -> "UStatisticAnalysis":
    """Builds the analysis from the kernel and dist entries of a config.

        Raises:
            ConfigError: If the config lacks a kernel or a distribution.
        """
    if config.kernel is None or config.dist is None:
      raise ConfigError("The configuration needs both 'kernel' and 'dist'.")
    return cls(config.kernel.build(), config.dist.build())

  @cached_property
  def centered(self) -> CenteredKernel:
    return center(self.kernel, self.dist, cap=self.cap)

  @cached_property
  def projections(self) -> ProjectionSet:
    return decompose(self.centered, self.dist, cap=self.cap)

  @property
  def degree(self) -> int:
    return self.kernel.arity

  @property
  def rank(self) -> int:
    return self.projections.rank

  def evaluate(self, sample, n: int) -> UStatValue:
    """U(n) of the first n sample points, centered under the distribution."""
    return evaluate(self.kernel, sample, n, dist=self.dist, cap=self.cap)

  def reconstruct(self, sample, n: int) -> float:
    return reconstruct(self.centered,
                       self.dist,
                       sample,
                       n,
                       projections=self.projections)

  def variance(self, n: int) -> float:
    return variance_exact(self.centered,
                          self.dist,
                          n,
                          projections=self.projections)

  def variance_asymptotic(self, n: int) -> float:
    return variance_asymptotic(self.centered,
                               self.dist,
                               n,
                               projections=self.projections)

  def lp_norm(self, p: float) -> float:
    """|Φ - E Φ|_p."""
    return kernel_lp_norm(self.centered, self.dist, p, cap=self.cap)

  def bound(self, n: int, p: float) -> BoundReport:
    """Detailed and normalized moment bounds for U(n) at order p."""
    inp = BoundInput(d=self.degree,
                     r=self.rank,
                     n=n,
                     p=p,
                     phi_p=self.lp_norm(p),
                     variance=self.centered.variance)
    return bound_report(inp, sigma_n=self.variance(n)**0.5)

  def natural_psi(self) -> PsiFunction:
    return natural_psi(self.centered, cap=self.cap)

  def theorem_bound(self,
                    psi: Optional[PsiFunction] = None,
                    n_values: Optional[Sequence[int]] = None) -> float:
    return gls_norm_bound(self.centered, psi=psi, n_values=n_values)

  @requires_pandas
  def bounds_dataframe(self, n_values: Sequence[int],
                       p_values: Sequence[float]) -> "pd.DataFrame":
    """One row per (n, p) with σ(n), the bounds and their constants.

        Args:
            n_values (Sequence[int]): Sample sizes, each at least d.
            p_values (Sequence[float]): Moment orders, each at least 2.

        Returns:
            pd.DataFrame: Columns n, p, phi_p, sigma_n, detailed, normalized,
                c_eff and c_normalized.
        """
    rows = []
    for n in n_values:
      for p in p_values:
        report = self.bound(n, p)
        rows.append({
            "n": n,
            "p": p,
            "phi_p": report.input.phi_p,
            "sigma_n": report.sigma_n,
            "detailed": report.detailed,
            "normalized": report.normalized,
            "c_eff": report.c_eff,
            "c_normalized": report.c_normalized,
        })
    return pd.DataFrame(rows)
