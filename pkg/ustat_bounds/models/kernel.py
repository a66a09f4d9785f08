from functools import reduce
from itertools import permutations
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import Field

from ustat_bounds.models.base import BaseUModel
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.utils.enumeration import DEFAULT_ENUMERATION_CAP
from ustat_bounds.utils.enumeration import support_product
from ustat_bounds.utils.error_handling import NonSymmetricKernelError

KernelFunction = Callable[..., np.ndarray]

SYMMETRY_TOLERANCE: float = 1e-12


class Kernel(BaseUModel):
  """A symmetric kernel of `arity` real arguments.

    `func` must accept `arity` numpy arrays of equal shape and return an
    array of that shape (scalars work as zero-dimensional arrays).

    Attributes:
        name: Identifier of the kernel.
        arity: Number of arguments d.
        func: Vectorized evaluation function.
    """

  name: str
  arity: int = Field(ge=1)
  func: KernelFunction = Field(exclude=True, repr=False)

  def __call__(self, *args: float) -> float:
    """Evaluates the kernel at a single tuple of points."""
    if len(args) != self.arity:
      raise TypeError(
          f"Kernel '{self.name}' takes {self.arity} arguments, got {len(args)}.")
    return float(self.func(*(np.float64(a) for a in args)))

  def evaluate(self, columns: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluates the kernel on columns of arguments.

        Args:
            columns (Sequence[np.ndarray]): `arity` arrays of equal shape.

        Returns:
            np.ndarray: Kernel values with the common shape of the columns.
        """
    columns = [np.asarray(c, dtype=float) for c in columns]
    values = np.asarray(self.func(*columns), dtype=float)
    return np.broadcast_to(values, columns[0].shape).astype(float, copy=False)

  def table(self,
            dist: DiscreteDistribution,
            cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Tabulates the kernel over support^arity.

        Returns:
            np.ndarray: Array of shape (size,) * arity indexed by atom indices.
        """
    tuples = support_product(dist.size, self.arity, cap)
    points = dist.points
    values = self.evaluate([points[tuples[:, j]] for j in range(self.arity)])
    return values.reshape((dist.size,) * self.arity)

  def is_symmetric(self,
                   dist: DiscreteDistribution,
                   cap: int = DEFAULT_ENUMERATION_CAP) -> bool:
    """Checks permutation invariance exhaustively on support tuples."""
    table = self.table(dist, cap)
    for order in permutations(range(self.arity)):
      if not np.allclose(np.transpose(table, order),
                         table,
                         rtol=SYMMETRY_TOLERANCE,
                         atol=SYMMETRY_TOLERANCE):
        return False
    return True

  def check_symmetry(self,
                     dist: DiscreteDistribution,
                     cap: int = DEFAULT_ENUMERATION_CAP) -> "Kernel":
    """Returns the kernel unchanged or raises NonSymmetricKernelError."""
    if not self.is_symmetric(dist, cap):
      raise NonSymmetricKernelError(
          f"Kernel '{self.name}' is not symmetric on the support.")
    return self


class CenteredKernel(Kernel):
  """A kernel shifted to mean zero under an attached distribution.

    Attributes:
        base: The uncentered kernel.
        mean: E Φ under `distribution`.
        variance: Var Φ under `distribution`, strictly positive.
        distribution: The law the kernel was centered against.
    """

  base: Kernel
  mean: float
  variance: float = Field(gt=0)
  distribution: DiscreteDistribution


def _identity(x):
  return x


def _sum(*xs):
  return reduce(np.add, xs)


def _product(*xs):
  return reduce(np.multiply, xs)


def _sample_variance(x, y):
  return (x - y)**2 / 2.0


def _sign(*xs):
  return np.sign(reduce(np.add, xs))


# name -> (function, default arity, allowed arities or None for any d >= 1)
KERNEL_CATALOG: dict[str, tuple[KernelFunction, int, Optional[tuple[int,
                                                                   ...]]]] = {
    "identity": (_identity, 1, (1,)),
    "sum": (_sum, 2, None),
    "product": (_product, 2, None),
    "sample_variance": (_sample_variance, 2, (2,)),
    "sign": (_sign, 2, None),
}


def kernel_catalog() -> list[str]:
  """Names of the built-in kernels."""
  return sorted(KERNEL_CATALOG)


def build_kernel(name: str, arity: Optional[int] = None) -> Kernel:
  """Builds a kernel from the built-in catalog.

    Args:
        name (str): One of identity, sum, product, sample_variance, sign.
        arity (Optional[int]): Number of arguments; the catalog default if None.

    Returns:
        Kernel: The requested kernel.

    Raises:
        ValueError: If the name is unknown or the arity is not supported.
    """
  if name not in KERNEL_CATALOG:
    raise ValueError(f"Unknown kernel '{name}'. Available kernels: "
                     f"{', '.join(sorted(KERNEL_CATALOG))}.")
  func, default_arity, allowed = KERNEL_CATALOG[name]
  arity = default_arity if arity is None else int(arity)
  if arity < 1 or (allowed is not None and arity not in allowed):
    raise ValueError(f"Kernel '{name}' does not support arity {arity}.")
  return Kernel(name=name, arity=arity, func=func)
