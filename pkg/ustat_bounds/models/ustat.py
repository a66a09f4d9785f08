from itertools import combinations
from typing import Iterator, Optional

import numpy as np
from pydantic import Field
from pydantic import model_validator

from ustat_bounds.models.base import BaseUModel
from ustat_bounds.models.base import Degree
from ustat_bounds.models.base import SampleSize
from ustat_bounds.utils.enumeration import binomial
from ustat_bounds.utils.enumeration import index_tuple_chunks
from ustat_bounds.utils.enumeration import INDEX_CHUNK_SIZE


class IndexSet(BaseUModel):
  """The strictly increasing d-tuples drawn from {1, ..., n}.

    Tuples are never materialized as a whole; iterate with `tuples()` or
    `chunks()`.
    """

  d: Degree = Field(ge=1)
  n: SampleSize = Field(ge=1)

  @model_validator(mode="after")
  def _check_sizes(self):
    if self.n < self.d:
      raise ValueError(f"Cannot draw {self.d}-tuples from {self.n} indices.")
    return self

  def __len__(self) -> int:
    return binomial(self.n, self.d)

  def __contains__(self, item) -> bool:
    item = tuple(item)
    return (len(item) == self.d and
            all(1 <= i <= self.n for i in item) and
            all(a < b for a, b in zip(item, item[1:])))

  def tuples(self) -> Iterator[tuple[int, ...]]:
    """Yields the 1-based tuples in lexicographic order."""
    return combinations(range(1, self.n + 1), self.d)

  def chunks(self, chunk_size: int = INDEX_CHUNK_SIZE) -> Iterator[np.ndarray]:
    """Yields 0-based index arrays of shape (rows, d) in lexicographic order."""
    return index_tuple_chunks(self.n, self.d, chunk_size)


class UStatValue(BaseUModel):
  """A computed U-statistic.

    Attributes:
        n: Sample size.
        value: U(n).
        centered_value: U(n) - E U(n), when the mean is known.
        tuple_count: Number of index tuples (or weighted multisets) visited.
    """

  n: SampleSize
  value: float
  centered_value: Optional[float] = None
  tuple_count: int = Field(ge=0)
