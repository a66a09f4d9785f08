from functools import wraps
import inspect
import math

from ustat_bounds.utils.error_handling import DomainError

try:
  import pandas as pd
except ImportError:
  pd = None


def requires_pandas(func):
  """Decorator to check if Pandas is available before executing a method."""

  @wraps(func)
  def wrapper(*args, **kwargs):
    if pd is None:
      raise ImportError("Pandas is required for this method")
    return func(*args, **kwargs)

  return wrapper


def requires_moment_order(minimum: float = 2.0, argument: str = "p"):
  """Decorator factory rejecting moment orders below `minimum`.

    The wrapped function must accept the moment order as a parameter named
    `argument` (positionally or by keyword). NaN orders are rejected too.

    Args:
        minimum (float): Smallest admissible moment order.
        argument (str): Name of the parameter holding the moment order.

    Raises:
        DomainError: If the order is below `minimum` or not a number.
    """

  def decorator(func):
    signature = inspect.signature(func)

    @wraps(func)
    def wrapper(*args, **kwargs):
      bound = signature.bind_partial(*args, **kwargs)
      p = bound.arguments.get(argument)
      if p is not None and (math.isnan(p) or p < minimum):
        raise DomainError(
            f"{func.__name__} requires {argument} >= {minimum}, got {p}.")
      return func(*args, **kwargs)

    return wrapper

  return decorator
