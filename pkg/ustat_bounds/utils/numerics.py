"""Numerical helpers shared by the moment, bound and Grand Lebesgue modules."""

import logging
import math
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp

logger = logging.getLogger(__name__)

GRID_POINTS: int = 512
REFINEMENT_ROUNDS: int = 3
REFINEMENT_POINTS: int = 33

# Largest exponent for which exp() stays finite in double precision.
_DIRECT_SUM_LOG_LIMIT: float = 700.0


class GridSup(NamedTuple):
  """Result of a grid supremum search.

    Attributes:
        argmax: The grid point with the largest value after refinement.
        value: The largest value found.
        grid: The base grid.
        values: The function values on the base grid.
        at_boundary: True if the base grid maximum sits on its last point.
    """
  argmax: float
  value: float
  grid: np.ndarray
  values: np.ndarray
  at_boundary: bool


def compensated_sum(values) -> float:
  """Sums an iterable of floats with error-free transforms (math.fsum)."""
  return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def log_grid(lo: float,
             hi: float,
             points: int = GRID_POINTS) -> np.ndarray:
  """Returns `points` log-spaced values covering [lo, hi]."""
  if hi <= lo:
    return np.array([lo], dtype=float)
  return np.geomspace(lo, hi, points)


def log_abs_moment(values, weights, p: float) -> float:
  """Computes log E|X|^p for a discrete law given by values and weights.

    Zero values contribute nothing; if every value is zero the result is -inf.

    Args:
        values: Atoms of the law (any shape, flattened).
        weights: Probabilities of the atoms, same shape as `values`.
        p (float): Moment order, p > 0.

    Returns:
        float: log E|X|^p.
    """
  values = np.abs(np.asarray(values, dtype=float).ravel())
  weights = np.asarray(weights, dtype=float).ravel()
  mask = (values > 0) & (weights > 0)
  if not mask.any():
    return -math.inf
  log_terms = p * np.log(values[mask]) + np.log(weights[mask])
  return float(logsumexp(log_terms))


def lp_norm(values, weights, p: float) -> float:
  """Computes (E|X|^p)^(1/p) for a discrete law.

    Moderate magnitudes are summed directly with compensated summation so
    that low order norms are exact to rounding; large ones are summed in
    log space.

    Args:
        values: Atoms of the law.
        weights: Probabilities of the atoms.
        p (float): Moment order, p > 0.

    Returns:
        float: The L_p norm.
    """
  abs_values = np.abs(np.asarray(values, dtype=float).ravel())
  weights = np.asarray(weights, dtype=float).ravel()
  largest = float(abs_values.max()) if abs_values.size else 0.0
  if largest == 0.0:
    return 0.0
  if p * math.log(largest) < _DIRECT_SUM_LOG_LIMIT:
    return compensated_sum(weights * abs_values**p)**(1.0 / p)
  return math.exp(log_abs_moment(abs_values, weights, p) / p)


def grid_sup(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    points: int = GRID_POINTS,
    rounds: int = REFINEMENT_ROUNDS,
) -> GridSup:
  """Finds sup of `func` on [lo, hi] with a log grid and local refinement.

    Each refinement round lays a finer grid between the neighbours of the
    current incumbent.

    Args:
        func (Callable[[float], float]): Scalar function to maximize.
        lo (float): Left end of the search interval, lo > 0.
        hi (float): Right end of the search interval.
        points (int): Number of base grid points.
        rounds (int): Number of local refinement rounds.

    Returns:
        GridSup: The maximizer, the supremum and the base grid data.
    """
  grid = log_grid(lo, hi, points)
  values = np.array([func(float(p)) for p in grid], dtype=float)
  index = int(np.nanargmax(values))
  best_p, best_value = float(grid[index]), float(values[index])
  at_boundary = index == len(grid) - 1 and len(grid) > 1

  left = float(grid[max(index - 1, 0)])
  right = float(grid[min(index + 1, len(grid) - 1)])
  for _ in range(rounds):
    if right <= left:
      break
    fine = np.linspace(left, right, REFINEMENT_POINTS)
    fine_values = np.array([func(float(p)) for p in fine], dtype=float)
    fine_index = int(np.nanargmax(fine_values))
    if fine_values[fine_index] > best_value:
      best_p, best_value = float(fine[fine_index]), float(fine_values[fine_index])
    left = float(fine[max(fine_index - 1, 0)])
    right = float(fine[min(fine_index + 1, len(fine) - 1)])

  logger.debug("grid sup on [%g, %g]: %g at %g", lo, hi, best_value, best_p)
  return GridSup(argmax=best_p,
                 value=best_value,
                 grid=grid,
                 values=values,
                 at_boundary=at_boundary)


def product_weights(probabilities, arity: int) -> np.ndarray:
  """Product probabilities of support^arity, shaped (size,) * arity."""
  probabilities = np.asarray(probabilities, dtype=float)
  weights = np.array(1.0)
  for _ in range(arity):
    weights = np.multiply.outer(weights, probabilities)
  return weights
