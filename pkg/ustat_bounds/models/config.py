from typing import Literal, Optional

from pydantic import ConfigDict
from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator

from ustat_bounds.model import truncated_centered_poisson
from ustat_bounds.models.base import BaseUModel
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.gls import ConversionDirection
from ustat_bounds.models.gls import TailFamily
from ustat_bounds.models.kernel import build_kernel
from ustat_bounds.models.kernel import Kernel
from ustat_bounds.models.kernel import KERNEL_CATALOG
from ustat_bounds.utils.seeding import MAX_SEED

DEFAULT_P_VALUES: tuple[float, ...] = (2.0, 3.0, 4.0, 6.0)
DEFAULT_TAIL_GRID: tuple[float, ...] = tuple(0.25 * i for i in range(25))


class ConfigModel(BaseUModel):
  """Base for user supplied configuration: unknown keys are rejected."""

  model_config = ConfigDict(extra="forbid")


class PoissonSpec(ConfigModel):
  p_max: float = Field(ge=1, description="Largest moment order to preserve.")
  tail_tol: float = Field(default=1e-15,
                          gt=0,
                          description="Relative truncation tolerance.")


class DistributionSpec(ConfigModel):
  """`{"atoms": [[x, p], ...]}`, `{"poisson_centered": {...}}` or
  the string "rademacher"."""

  atoms: Optional[list[tuple[float, float]]] = None
  poisson_centered: Optional[PoissonSpec] = None
  name: Optional[str] = None

  @model_validator(mode="before")
  @classmethod
  def _expand_shorthand(cls, data):
    if data == "rademacher":
      return {"atoms": [[-1.0, 0.5], [1.0, 0.5]], "name": "rademacher"}
    return data

  @model_validator(mode="after")
  def _check_choice(self):
    if (self.atoms is None) == (self.poisson_centered is None):
      raise ValueError(
          "Specify exactly one of 'atoms' or 'poisson_centered'.")
    return self

  def build(self) -> DiscreteDistribution:
    if self.poisson_centered is not None:
      return truncated_centered_poisson(self.poisson_centered.p_max,
                                        self.poisson_centered.tail_tol)
    return DiscreteDistribution(atoms=self.atoms, name=self.name)


class KernelSpec(ConfigModel):
  """`{"name": .., "arity": ..}` naming a built-in kernel."""

  name: str
  arity: Optional[int] = Field(default=None, ge=1)

  @field_validator("name")
  def _check_name(cls, v):
    if v not in KERNEL_CATALOG:
      raise ValueError(f"Unknown kernel '{v}'. Available kernels: "
                       f"{', '.join(sorted(KERNEL_CATALOG))}.")
    return v

  @model_validator(mode="after")
  def _check_arity(self):
    build_kernel(self.name, self.arity)
    return self

  @property
  def resolved_arity(self) -> int:
    return self.arity if self.arity is not None else KERNEL_CATALOG[
        self.name][1]

  def build(self) -> Kernel:
    return build_kernel(self.name, self.arity)


class PsiSpec(ConfigModel):
  """A ψ-function from one of the built-in families."""

  family: Literal["natural", "power_log", "exp_beta", "constant"] = "natural"
  c: float = Field(default=1.0, gt=0)
  m: Optional[float] = Field(default=None, gt=0)
  r: float = 0.0
  beta: Optional[float] = Field(default=None, gt=0)
  b: Optional[float] = Field(default=None, gt=2)

  @model_validator(mode="after")
  def _check_params(self):
    if self.family == "power_log" and self.m is None:
      raise ValueError("power_log needs 'm'.")
    if self.family == "exp_beta" and self.beta is None:
      raise ValueError("exp_beta needs 'beta'.")
    return self


class FamilySpec(ConfigModel):
  """Exponent conversion request for the built-in tail families."""

  kind: TailFamily
  direction: ConversionDirection = ConversionDirection.MOMENTS_TO_TAIL
  params: dict[str, float]
  d: int = Field(default=0, ge=0)


class RunConfig(ConfigModel):
  """Parameters for every subcommand; each reads the fields it needs."""

  kernel: Optional[KernelSpec] = None
  dist: Optional[DistributionSpec] = None
  n: Optional[int] = Field(default=None,
                           ge=1,
                           description="Sample size for single-n commands.")
  n_values: Optional[list[int]] = Field(
      default=None, description="Sample sizes for variance and simulation.")
  p: Optional[float] = Field(default=None, ge=2, description="Moment order.")
  p_values: list[float] = Field(default_factory=lambda: list(DEFAULT_P_VALUES))
  d: Optional[int] = Field(default=None, ge=1)
  r: Optional[int] = Field(default=None, ge=1)
  phi_p: Optional[float] = Field(default=None, gt=0)
  replications: int = Field(default=1000, ge=100)
  tail_grid: list[float] = Field(default_factory=lambda: list(DEFAULT_TAIL_GRID))
  psi: Optional[PsiSpec] = None
  norm: Optional[float] = Field(default=None, gt=0)
  family: Optional[FamilySpec] = None
  gamma_max: int = Field(default=6, ge=1)
  seed: int = Field(default=0, ge=0, le=MAX_SEED)
  workers: int = Field(default=1, ge=1)

  @field_validator("n_values")
  def _check_n_values(cls, v):
    if v is not None and (not v or any(n < 1 for n in v)):
      raise ValueError("n_values must be a non-empty list of positive sizes.")
    return v

  @field_validator("p_values")
  def _check_p_values(cls, v):
    if not v or any(p < 1 for p in v):
      raise ValueError("p_values must be a non-empty list of orders >= 1.")
    return v

  @field_validator("tail_grid")
  def _check_tail_grid(cls, v):
    if not v or any(b <= a for a, b in zip(v, v[1:])) or v[0] < 0:
      raise ValueError("tail_grid must be nonnegative and strictly increasing.")
    return v
