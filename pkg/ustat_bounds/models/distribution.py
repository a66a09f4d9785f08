import math
from typing import Optional

import numpy as np
from pydantic import field_validator
from pydantic import model_validator

from ustat_bounds.models.base import BaseUModel
from ustat_bounds.models.base import Point
from ustat_bounds.models.base import Probability
from ustat_bounds.utils.error_handling import SupportMismatchError
from ustat_bounds.utils.numerics import compensated_sum
from ustat_bounds.utils.numerics import lp_norm

PROBABILITY_TOLERANCE: float = 1e-12


def atom_indices(points: np.ndarray, values) -> np.ndarray:
  """Maps sample values to the indices of the matching atoms.

    Args:
        points (np.ndarray): Sorted, distinct atom locations.
        values: Values to look up (any shape).

    Returns:
        np.ndarray: Integer indices with the shape of `values`.

    Raises:
        SupportMismatchError: If a value does not coincide with an atom.
    """
  values = np.asarray(values, dtype=float)
  right = np.clip(np.searchsorted(points, values), 0, len(points) - 1)
  left = np.clip(right - 1, 0, len(points) - 1)
  closer_left = np.abs(points[left] - values) < np.abs(points[right] - values)
  indices = np.where(closer_left, left, right)
  if not np.allclose(points[indices], values, rtol=1e-12, atol=1e-12):
    raise SupportMismatchError()
  return indices


class DiscreteDistribution(BaseUModel):
  """A finite-support law of the i.i.d. inputs.

    Atoms are stored sorted by location.

    Attributes:
        atoms: (point, probability) pairs with distinct points.
        name: Optional label used in reports.
    """

  atoms: tuple[tuple[Point, Probability], ...]
  name: Optional[str] = None

  @field_validator("atoms", mode="before")
  def _sort_atoms(cls, v):
    pairs = [(float(x), float(p)) for x, p in v]
    return tuple(sorted(pairs, key=lambda pair: pair[0]))

  @model_validator(mode="after")
  def _check_law(self):
    if len(self.atoms) < 2:
      raise ValueError("A distribution needs at least two atoms.")
    points = [x for x, _ in self.atoms]
    if len(set(points)) != len(points):
      raise ValueError("Distribution atoms must be distinct.")
    if any(not math.isfinite(x) for x in points):
      raise ValueError("Distribution atoms must be finite.")
    probabilities = [p for _, p in self.atoms]
    if any(not 0.0 < p <= 1.0 for p in probabilities):
      raise ValueError("Atom probabilities must lie in (0, 1].")
    total = math.fsum(probabilities)
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
      raise ValueError(f"Atom probabilities sum to {total!r}, not 1.")
    return self

  @classmethod
  def rademacher(cls) -> "DiscreteDistribution":
    """The symmetric sign law on {-1, +1}."""
    return cls(atoms=[(-1.0, 0.5), (1.0, 0.5)], name="rademacher")

  @property
  def points(self) -> np.ndarray:
    return np.array([x for x, _ in self.atoms], dtype=float)

  @property
  def probabilities(self) -> np.ndarray:
    return np.array([p for _, p in self.atoms], dtype=float)

  @property
  def size(self) -> int:
    return len(self.atoms)

  def cdf(self) -> np.ndarray:
    """Cumulative probabilities at the sorted atoms, last entry forced to 1."""
    cumulative = np.cumsum(self.probabilities)
    cumulative[-1] = 1.0
    return cumulative

  def mean(self) -> float:
    return compensated_sum(self.points * self.probabilities)

  def variance(self) -> float:
    centered = self.points - self.mean()
    return compensated_sum(centered**2 * self.probabilities)

  def lp_norm(self, p: float) -> float:
    """Returns (E|X|^p)^(1/p)."""
    return lp_norm(self.points, self.probabilities, p)

  def index_of(self, values) -> np.ndarray:
    """Returns the atom indices of `values`."""
    return atom_indices(self.points, values)
