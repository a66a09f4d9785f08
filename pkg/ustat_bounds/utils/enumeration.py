from itertools import combinations
from itertools import combinations_with_replacement
from itertools import islice
import math
from typing import Iterator

import numpy as np

from ustat_bounds.utils.error_handling import CapExceededError

DEFAULT_ENUMERATION_CAP: int = 10**7
INDEX_CHUNK_SIZE: int = 1 << 16


def check_cap(requested: int, cap: int = DEFAULT_ENUMERATION_CAP) -> int:
  """Raises CapExceededError if `requested` terms exceed `cap`.

    Returns:
        int: The requested number of terms.
    """
  if requested > cap:
    raise CapExceededError(requested=requested, cap=cap)
  return requested


def index_tuple_chunks(
    n: int,
    d: int,
    chunk_size: int = INDEX_CHUNK_SIZE) -> Iterator[np.ndarray]:
  """Yields the strictly increasing 0-based d-tuples of range(n) in chunks.

    Tuples come in lexicographic order; every chunk is an integer array of
    shape (rows, d) with rows <= chunk_size.
    """
  tuples = combinations(range(n), d)
  while True:
    block = list(islice(tuples, chunk_size))
    if not block:
      return
    yield np.array(block, dtype=np.intp).reshape(len(block), d)


def support_product(size: int,
                    arity: int,
                    cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
  """Enumerates every arity-tuple of atom indices in lexicographic order.

    Returns:
        np.ndarray: Integer array of shape (size**arity, arity).

    Raises:
        CapExceededError: If size**arity exceeds `cap`.
    """
  check_cap(size**arity, cap)
  if arity == 0:
    return np.zeros((1, 0), dtype=np.intp)
  grids = np.indices((size,) * arity, dtype=np.intp)
  return grids.reshape(arity, -1).T


def multisets(size: int, d: int) -> np.ndarray:
  """Enumerates the multisets of d atom indices as sorted index tuples."""
  block = list(combinations_with_replacement(range(size), d))
  return np.array(block, dtype=np.intp).reshape(len(block), d)


def multiplicities(multiset_rows: np.ndarray, size: int) -> np.ndarray:
  """Counts how often each atom appears in every multiset row.

    Returns:
        np.ndarray: Array of shape (rows, size).
    """
  counts = np.zeros((multiset_rows.shape[0], size), dtype=np.intp)
  for column in multiset_rows.T:
    np.add.at(counts, (np.arange(len(column)), column), 1)
  return counts


def binomial(n: int, k: int) -> int:
  """Exact binomial coefficient, zero when k is out of range."""
  if k < 0 or k > n:
    return 0
  return math.comb(n, k)
