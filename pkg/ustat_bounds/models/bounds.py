import math
from typing import Optional

from pydantic import Field
from pydantic import model_validator

from ustat_bounds.models.base import BaseUModel
from ustat_bounds.models.base import Degree
from ustat_bounds.models.base import DictLikeRootModel
from ustat_bounds.models.base import MomentOrder
from ustat_bounds.models.base import SampleSize

# Relative slack when comparing |Φ|_p with the standard deviation.
NORM_ORDER_TOLERANCE: float = 1e-9


class BoundInput(BaseUModel):
  """Inputs of the moment bounds for |U(n)|_p.

    Attributes:
        d: Kernel degree.
        r: Kernel rank.
        n: Sample size, n >= d.
        p: Moment order, p >= 2.
        phi_p: |Φ|_p, strictly positive.
        variance: Var Φ, if known; then phi_p must dominate its square root.
    """

  d: Degree = Field(ge=1)
  r: Degree = Field(ge=1)
  n: SampleSize = Field(ge=1)
  p: MomentOrder = Field(ge=2)
  phi_p: float = Field(gt=0)
  variance: Optional[float] = Field(default=None, gt=0)

  @model_validator(mode="after")
  def _check_consistency(self):
    if self.r > self.d:
      raise ValueError(f"Rank {self.r} exceeds the degree {self.d}.")
    if self.n < self.d:
      raise ValueError(f"Sample size {self.n} is below the degree {self.d}.")
    if not math.isfinite(self.phi_p):
      raise ValueError("phi_p must be finite.")
    if self.variance is not None:
      sigma = math.sqrt(self.variance)
      if self.phi_p < sigma * (1.0 - NORM_ORDER_TOLERANCE):
        raise ValueError(f"|Φ|_p = {self.phi_p} is below the standard "
                         f"deviation {sigma} although p >= 2.")
    return self


class GammaTable(DictLikeRootModel):
  """γ(1), ..., γ(d_max) keyed by degree."""

  root: dict[int, float]


class BoundReport(BaseUModel):
  """Moment bounds for one BoundInput.

    Attributes:
        input: The inputs.
        detailed: Bound on |U(n)|_p (sum over the martingale components).
        terms: The per-degree summands of `detailed`, m = r..d.
        sigma_n: Standard deviation of U(n), when supplied.
        normalized: Bound on |U(n)/σ(n)|_p.
        c_eff: Effective constant of the n^(-r/2) (p/ln p)^d |Φ|_p form.
        c_normalized: Effective constant of the (p/ln p)^d |Φ|_p form of the
            normalized bound, when sigma_n is supplied.
        gamma_table: γ(1..d).
    """

  input: BoundInput
  detailed: float
  terms: tuple[float, ...]
  sigma_n: Optional[float] = None
  normalized: Optional[float] = None
  c_eff: float
  c_normalized: Optional[float] = None
  gamma_table: GammaTable


class SandwichReport(BaseUModel):
  """Lower witness and upper bound for the product kernel of centered Poisson
  variables, both divided by (p / ln p)^d.

    Attributes:
        d: Kernel degree.
        p: Moment order.
        lower_ratio: |ξ_1 ... ξ_d|_p / (p/ln p)^d.
        upper_ratio: The detailed moment bound of U(d) over (p/ln p)^d.
        witness_floor: e^(-d) / 2.
    """

  d: Degree
  p: MomentOrder
  lower_ratio: float
  upper_ratio: float
  witness_floor: float

  @property
  def holds(self) -> bool:
    return self.witness_floor <= self.lower_ratio <= self.upper_ratio
