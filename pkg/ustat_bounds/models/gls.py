from enum import Enum
from fractions import Fraction
import math
from typing import Any, Callable, Optional, Sequence

import numpy as np
from pydantic import Field
from pydantic import field_serializer
from pydantic import field_validator
from pydantic import model_validator

from ustat_bounds.models.base import BaseUModel
from ustat_bounds.utils.error_handling import DomainError
from ustat_bounds.utils.error_handling import ParamError
from ustat_bounds.utils.numerics import log_grid

PSI_LOWER: float = 2.0
# Grids over [2, b) stop here when b is infinite.
PSI_GRID_UPPER: float = 1e4
VALIDATION_POINTS: int = 33
CONTINUITY_REFINEMENT: int = 4
TAIL_TOLERANCE: float = 1e-12


class PsiFamily(str, Enum):
  POWER_LOG = "power_log"
  EXP_BETA = "exp_beta"
  NATURAL = "natural"
  CUSTOM = "custom"


class TailFamily(str, Enum):
  POWER_LOG = "power_log"
  EXP_BETA = "exp_beta"


class ConversionDirection(str, Enum):
  MOMENTS_TO_TAIL = "moments_to_tail"
  TAIL_TO_MOMENTS = "tail_to_moments"


def psi_grid_upper(b: float) -> float:
  """Right end of the numerical grid for a ψ supported on [2, b)."""
  if math.isinf(b):
    return PSI_GRID_UPPER
  return min(b - (b - PSI_LOWER) * 1e-9, PSI_GRID_UPPER)


class PsiFunction(BaseUModel):
  """A ψ-function on [2, b), stored through its logarithm.

    Keeping ln ψ avoids overflow for fast growing families such as
    exp(C p^β); ν(p) = p ln ψ(p) is read off directly.

    Attributes:
        b: Right end of the support, b > 2 (may be infinite).
        log_func: p -> ln ψ(p).
        family: Family tag.
        degree: Number of (p / ln p) factors applied by psi_d_transform.
        params: Parameters of the family, for reports.
        convex_nu: Whether ν is known to be convex (enables golden-section
            conjugates).
        name: Optional label.
    """

  b: float = Field(default=math.inf, gt=PSI_LOWER)
  log_func: Callable[[float], float] = Field(exclude=True, repr=False)
  family: PsiFamily = PsiFamily.CUSTOM
  degree: int = Field(default=0, ge=0)
  params: dict[str, float] = Field(default_factory=dict)
  convex_nu: bool = True
  name: Optional[str] = None

  @model_validator(mode="after")
  def _check_psi(self):
    grid = self.grid(VALIDATION_POINTS)
    logs = np.array([self.log(p) for p in grid])
    if not np.all(np.isfinite(logs)):
      raise ValueError("ψ must be finite and positive on [2, b).")
    if self.family != PsiFamily.NATURAL and logs.min() <= 0.0:
      raise ValueError(f"inf ψ must exceed 1, found {math.exp(logs.min())}.")
    if not self.check_continuity():
      raise ValueError("ψ is not continuous on [2, b).")
    return self

  def __call__(self, p: float) -> float:
    try:
      return math.exp(self.log(p))
    except OverflowError:
      return math.inf

  def log(self, p: float) -> float:
    """ln ψ(p)."""
    return float(self.log_func(float(p)))

  def in_domain(self, p: float) -> bool:
    return PSI_LOWER <= p < self.b

  def require_domain(self, p: float) -> None:
    if not self.in_domain(p):
      raise DomainError(f"p={p} lies outside [2, {self.b}).")

  @property
  def grid_upper(self) -> float:
    return psi_grid_upper(self.b)

  def grid(self, points: int) -> np.ndarray:
    """Log-spaced points on [2, min(b, 10^4)]."""
    return log_grid(PSI_LOWER, self.grid_upper, points)

  def check_continuity(self, points: int = VALIDATION_POINTS) -> bool:
    """Detects jumps of ln ψ by comparing increments on nested grids.

        On a continuous function, refining the grid shrinks the largest
        increment roughly in proportion to the spacing; a jump keeps it.
        """
    coarse = self.grid(points)
    fine = self.grid((points - 1) * CONTINUITY_REFINEMENT + 1)
    coarse_step = np.abs(np.diff([self.log(p) for p in coarse])).max()
    fine_step = np.abs(np.diff([self.log(p) for p in fine])).max()
    return not (coarse_step > 1e-12 and fine_step > 0.5 * coarse_step)

  @classmethod
  def power_log(cls,
                c: float,
                m: float,
                r: float = 0.0,
                b: float = math.inf) -> "PsiFunction":
    """ψ(p) = c p^(1/m) ln^r p."""
    if not (c > 0 and m > 0):
      raise ParamError("power_log needs c > 0 and m > 0.")
    log_c = math.log(c)
    return cls(b=b,
               log_func=lambda p: log_c + math.log(p) / m + r * math.log(
                   math.log(p)),
               family=PsiFamily.POWER_LOG,
               params={
                   "c": c,
                   "m": m,
                   "r": r
               },
               convex_nu=r >= 0)

  @classmethod
  def exp_beta(cls, c: float, beta: float) -> "PsiFunction":
    """ψ(p) = exp(c p^β)."""
    if not (c > 0 and beta > 0):
      raise ParamError("exp_beta needs c > 0 and beta > 0.")
    return cls(log_func=lambda p: c * p**beta,
               family=PsiFamily.EXP_BETA,
               params={
                   "c": c,
                   "beta": beta
               })

  @classmethod
  def constant(cls, c: float, b: float = math.inf) -> "PsiFunction":
    """ψ ≡ c with c > 1."""
    if not c > 1:
      raise ParamError("A constant ψ must exceed 1.")
    log_c = math.log(c)
    return cls(b=b,
               log_func=lambda p: log_c,
               family=PsiFamily.CUSTOM,
               params={"c": c})

  @classmethod
  def from_callable(cls,
                    func: Callable[[float], float],
                    b: float = math.inf,
                    convex_nu: bool = False,
                    name: Optional[str] = None) -> "PsiFunction":
    """Wraps an arbitrary p -> ψ(p)."""
    return cls(b=b,
               log_func=lambda p: math.log(func(p)),
               family=PsiFamily.CUSTOM,
               convex_nu=convex_nu,
               name=name)


class TailFunction(BaseUModel):
  """A tail function x -> T(x) with values in [0, 1], nonincreasing.

    Either analytic (`func`) or tabulated on an increasing grid, in which
    case T is read as a right-continuous step function: the value at x is
    the value at the largest grid point not exceeding x, and 1 left of the
    grid.

    Attributes:
        func: Analytic tail.
        grid: Increasing grid of levels x >= 0.
        values: Tail values on the grid.
        standard_errors: Standard errors of tabulated values.
        label: Optional description.
    """

  func: Optional[Callable[[float], float]] = Field(default=None,
                                                   exclude=True,
                                                   repr=False)
  grid: Optional[tuple[float, ...]] = None
  values: Optional[tuple[float, ...]] = None
  standard_errors: Optional[tuple[float, ...]] = None
  label: Optional[str] = None

  @model_validator(mode="after")
  def _check_tail(self):
    if (self.func is None) == (self.grid is None):
      raise ValueError("Provide either an analytic tail or a tabulated grid.")
    if self.grid is None:
      return self
    grid = np.asarray(self.grid)
    values = np.asarray(self.values if self.values is not None else ())
    if grid.size == 0 or values.shape != grid.shape:
      raise ValueError("Tail grid and values must be non-empty and aligned.")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
      raise ValueError("Tail grid must be nonnegative and strictly increasing.")
    if np.any(values < -TAIL_TOLERANCE) or np.any(values > 1 + TAIL_TOLERANCE):
      raise ValueError("Tail values must lie in [0, 1].")
    if np.any(np.diff(values) > TAIL_TOLERANCE):
      raise ValueError("Tail values must be nonincreasing.")
    if self.standard_errors is not None and len(
        self.standard_errors) != grid.size:
      raise ValueError("Standard errors must align with the tail grid.")
    return self

  @classmethod
  def tabulated(cls,
                grid: Sequence[float],
                values: Sequence[float],
                standard_errors: Optional[Sequence[float]] = None,
                label: Optional[str] = None) -> "TailFunction":
    return cls(grid=tuple(float(x) for x in grid),
               values=tuple(float(v) for v in values),
               standard_errors=None if standard_errors is None else tuple(
                   float(s) for s in standard_errors),
               label=label)

  @property
  def is_tabulated(self) -> bool:
    return self.grid is not None

  def __call__(self, x: float) -> float:
    if self.func is not None:
      return min(1.0, max(0.0, float(self.func(float(x)))))
    index = int(np.searchsorted(self.grid, x, side="right")) - 1
    return 1.0 if index < 0 else self.values[index]

  def evaluate(self, xs) -> np.ndarray:
    """Evaluates T on an array of levels."""
    return np.array([self(x) for x in np.asarray(xs, dtype=float).ravel()])

  def scaled(self, factor: float) -> "TailFunction":
    """Tail of factor * ζ, i.e. x -> T(x / factor)."""
    if not factor > 0:
      raise ValueError("The scale factor must be positive.")
    if self.func is not None:
      func = self.func
      return TailFunction(func=lambda x: func(x / factor), label=self.label)
    return TailFunction.tabulated([x * factor for x in self.grid],
                                  self.values, self.standard_errors,
                                  self.label)


def _fraction_text(value: Any) -> Any:
  if isinstance(value, Fraction):
    return str(value)
  if isinstance(value, dict):
    return {k: _fraction_text(v) for k, v in value.items()}
  return value


class TailFamilyConversion(BaseUModel):
  """Exponents of a moment family and of the matching tail family.

    For kind power_log the moments grow like p^moment_power ln^moment_log_power p
    and the tail decays like exp(-C x^tail_power log^tail_log_power x). For
    kind exp_beta the moments grow like exp(C p^beta) and the tail decays
    like exp(-C [ln(1 + x)]^tail_log_power). `d` is the degree of the
    U-statistic the family was pushed through (0 for the kernel itself).
    """

  kind: TailFamily
  direction: ConversionDirection
  d: int = Field(ge=0)
  source: dict[str, Fraction]
  moment_power: Optional[Fraction] = None
  moment_log_power: Optional[Fraction] = None
  beta: Optional[Fraction] = None
  tail_power: Optional[Fraction] = None
  tail_log_power: Fraction

  @field_validator("moment_power", "moment_log_power", "beta", "tail_power",
                   "tail_log_power",
                   mode="before")
  def _to_fraction(cls, v):
    return None if v is None else Fraction(v)

  @field_serializer("source", "moment_power", "moment_log_power", "beta",
                    "tail_power", "tail_log_power")
  def _serialize_fraction(self, v):
    return _fraction_text(v)

  def envelope(self, constant: float = 1.0) -> TailFunction:
    """Builds the tail envelope of the converted family with constant C."""
    if not constant > 0:
      raise ParamError("The envelope constant must be positive.")
    q = float(self.tail_log_power)
    if self.kind == TailFamily.EXP_BETA:
      return TailFunction(
          func=lambda x: math.exp(-constant * math.log1p(max(x, 0.0))**q),
          label=f"exp_beta tail, log power {self.tail_log_power}")
    m = float(self.tail_power)

    def tail(x: float) -> float:
      if x <= math.e:
        return 1.0
      return math.exp(-constant * x**m * math.log(x)**q)

    return TailFunction(func=tail,
                        label=f"power_log tail, power {self.tail_power}")

