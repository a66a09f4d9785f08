from typing import Sequence

import numpy as np
from pydantic import Field
from pydantic import field_serializer
from pydantic import model_validator

from ustat_bounds.models.base import BaseUModel
from ustat_bounds.models.base import Degree
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.kernel import Kernel
from ustat_bounds.utils.numerics import lp_norm
from ustat_bounds.utils.numerics import product_weights


class ProjectionTable(BaseUModel):
  """The Hoeffding projection g_m tabulated over support^m.

    Attributes:
        degree: Number of arguments m.
        values: Array of shape (size,) * m indexed by atom indices.
        variance: Var g_m under the distribution.
        distribution: The law the projection was computed against.
        kernel_name: Name of the kernel the projection belongs to.
    """

  degree: Degree = Field(ge=1)
  values: np.ndarray
  variance: float = Field(ge=0)
  distribution: DiscreteDistribution
  kernel_name: str

  @model_validator(mode="after")
  def _check_shape(self):
    expected = (self.distribution.size,) * self.degree
    if self.values.shape != expected:
      raise ValueError(f"Projection table of degree {self.degree} must have "
                       f"shape {expected}, got {self.values.shape}.")
    return self

  @field_serializer("values")
  def _serialize_values(self, values: np.ndarray):
    return values.tolist()

  def __call__(self, *args: float) -> float:
    """Evaluates g_m at a tuple of support points."""
    if len(args) != self.degree:
      raise TypeError(
          f"g_{self.degree} takes {self.degree} arguments, got {len(args)}.")
    index = tuple(int(self.distribution.index_of(a)) for a in args)
    return float(self.values[index])

  def evaluate(self, columns: Sequence[np.ndarray]) -> np.ndarray:
    """Looks up g_m on columns of support points of equal shape."""
    indices = tuple(self.distribution.index_of(c) for c in columns)
    return self.values[indices]

  def weights(self) -> np.ndarray:
    """Product probabilities matching the layout of `values`."""
    return product_weights(self.distribution.probabilities, self.degree)

  def lp_norm(self, p: float) -> float:
    """Returns |g_m|_p under the distribution."""
    return lp_norm(self.values, self.weights(), p)

  def is_zero(self, tolerance: float) -> bool:
    """True if Var g_m does not exceed `tolerance`."""
    return self.variance <= tolerance

  def as_kernel(self) -> Kernel:
    """Wraps the table as a Kernel of arity m."""
    return Kernel(name=f"{self.kernel_name}_g{self.degree}",
                  arity=self.degree,
                  func=lambda *xs: self.evaluate(xs))


class ProjectionSet(BaseUModel):
  """The projections g_1..g_d of a centered kernel and its rank.

    Attributes:
        kernel_name: Name of the decomposed kernel.
        arity: Kernel degree d.
        projections: g_1..g_d in order of degree.
        rank: Smallest m with Var g_m above `rank_tol`.
        rank_tol: Absolute tolerance used to decide the rank.
        kernel_variance: Var Φ.
    """

  kernel_name: str
  arity: Degree = Field(ge=1)
  projections: tuple[ProjectionTable, ...]
  rank: Degree = Field(ge=1)
  rank_tol: float = Field(gt=0)
  kernel_variance: float = Field(gt=0)

  @model_validator(mode="after")
  def _check_projections(self):
    degrees = [g.degree for g in self.projections]
    if degrees != list(range(1, self.arity + 1)):
      raise ValueError(
          f"Expected projections of degree 1..{self.arity}, got {degrees}.")
    if self.rank > self.arity:
      raise ValueError("The rank cannot exceed the kernel degree.")
    return self

  @property
  def variances(self) -> tuple[float, ...]:
    """Var g_1, ..., Var g_d."""
    return tuple(g.variance for g in self.projections)

  @property
  def distribution(self) -> DiscreteDistribution:
    return self.projections[0].distribution

  def projection(self, m: int) -> ProjectionTable:
    """Returns g_m for 1 <= m <= d."""
    if not 1 <= m <= self.arity:
      raise ValueError(f"Projection degree must lie in [1, {self.arity}].")
    return self.projections[m - 1]

  def active(self) -> tuple[ProjectionTable, ...]:
    """The projections of degree r..d that enter the decomposition."""
    return self.projections[self.rank - 1:]
