from enum import Enum
from typing import Optional

from pydantic import Field
from pydantic import model_validator

from ustat_bounds.models.base import BaseUModel
from ustat_bounds.models.base import ListLikeRootModel
from ustat_bounds.models.base import MomentOrder
from ustat_bounds.models.base import SampleSize
from ustat_bounds.models.config import DEFAULT_P_VALUES
from ustat_bounds.models.config import DEFAULT_TAIL_GRID
from ustat_bounds.models.config import DistributionSpec
from ustat_bounds.models.config import KernelSpec
from ustat_bounds.utils.decorators import requires_pandas
from ustat_bounds.utils.seeding import MAX_SEED

try:
  import pandas as pd
except ImportError:
  pd = None

MIN_REPLICATIONS: int = 100
DEFAULT_CHUNK_SIZE: int = 256


class SimulationPlan(BaseUModel):
  """Everything that determines a simulation run.

    Attributes:
        kernel: Kernel spec.
        dist: Distribution spec.
        n_values: Sample sizes, each larger than the kernel degree.
        replications: Draws R per sample size, R >= 100.
        p_values: Moment orders to estimate.
        tail_grid: Increasing levels at which to estimate the tail.
        master_seed: Unsigned 64-bit seed.
        chunk_size: Replications per work unit. Chunks never depend on the
            number of workers.
    """

  kernel: KernelSpec
  dist: DistributionSpec
  n_values: tuple[SampleSize, ...]
  replications: int = Field(default=1000, ge=MIN_REPLICATIONS)
  p_values: tuple[MomentOrder, ...] = DEFAULT_P_VALUES
  tail_grid: tuple[float, ...] = DEFAULT_TAIL_GRID
  master_seed: int = Field(default=0, ge=0, le=MAX_SEED)
  chunk_size: int = Field(default=DEFAULT_CHUNK_SIZE, ge=1)

  @model_validator(mode="after")
  def _check_plan(self):
    d = self.kernel.resolved_arity
    if not self.n_values:
      raise ValueError("A plan needs at least one sample size.")
    if any(n <= d for n in self.n_values):
      raise ValueError(f"Every sample size must exceed the degree {d}.")
    if len(set(self.n_values)) != len(self.n_values):
      raise ValueError("Sample sizes must be distinct.")
    if not self.p_values or any(p < 1 for p in self.p_values):
      raise ValueError("Moment orders must be >= 1.")
    grid = self.tail_grid
    if not grid or grid[0] < 0 or any(b <= a for a, b in zip(grid, grid[1:])):
      raise ValueError("The tail grid must be nonnegative and increasing.")
    return self


class MomentEstimate(BaseUModel):
  """Empirical |U(n)/σ(n)|_p with the matching theoretical bound.

    Attributes:
        slack: theoretical / estimate, exposing how loose the bound is.
    """

  n: SampleSize
  p: MomentOrder
  estimate: float
  standard_error: float
  theoretical: Optional[float] = None
  c_eff: Optional[float] = None
  slack: Optional[float] = None


class TailEstimate(BaseUModel):
  """Empirical two-sided tail of U(n)/σ(n) at level x with its envelope."""

  n: SampleSize
  x: float
  value: float
  standard_error: float
  envelope: Optional[float] = None


class NormEstimate(BaseUModel):
  """Empirical Grand Lebesgue norm sup_p M(p) / ψ_d(p) over the plan's orders.

    Attributes:
        p: The order attaining the sup.
    """

  n: SampleSize
  p: MomentOrder
  estimate: float
  standard_error: float


class SigmaEntry(BaseUModel):
  n: SampleSize
  sigma: float


class SimulationReport(BaseUModel):
  """Empirical moments and tails side by side with the theoretical values.

    Attributes:
        plan: The plan that produced the draws.
        rank: Kernel rank.
        sigmas: σ(n) for every sample size.
        moments: One estimate per (n, p).
        tails: One estimate per (n, x).
        norms: Empirical Gψ_d norm of U(n)/σ(n) per n, for the natural ψ.
        sup_moments: max over the plan's n of the empirical moment, per p.
            This is a lower estimate of the sup over all n.
        theorem_bound: Grand Lebesgue bound C(d, r) ||Φ|| for the natural ψ.
        normalized_constant: C(d, r) used by `theorem_bound`.
        envelope_threshold: e * theorem_bound; the envelope is 1 up to here.
    """

  plan: SimulationPlan
  rank: int
  sigmas: tuple[SigmaEntry, ...]
  moments: tuple[MomentEstimate, ...]
  tails: tuple[TailEstimate, ...]
  norms: tuple[NormEstimate, ...] = ()
  sup_moments: dict[str, float]
  theorem_bound: Optional[float] = None
  normalized_constant: Optional[float] = None
  envelope_threshold: Optional[float] = None

  def moment(self, n: int, p: float) -> MomentEstimate:
    for estimate in self.moments:
      if estimate.n == n and estimate.p == p:
        return estimate
    raise KeyError((n, p))

  def tail_values(self, n: int) -> list[TailEstimate]:
    return [t for t in self.tails if t.n == n]

  @requires_pandas
  def to_dataframe(self) -> "pd.DataFrame":
    """Moment estimates as a DataFrame, one row per (n, p)."""
    return pd.DataFrame([m.model_dump() for m in self.moments])

  @requires_pandas
  def curves_dataframe(self) -> "pd.DataFrame":
    """Tail curves as a DataFrame, one row per (n, x)."""
    return pd.DataFrame([t.model_dump() for t in self.tails])


class VerdictKind(str, Enum):
  MOMENT = "moment"
  TAIL = "tail"
  NORM = "norm"


class Verdict(BaseUModel):
  """Outcome of one empirical-versus-theoretical comparison.

    PASS means empirical <= theoretical + 3 standard errors.
    """

  kind: VerdictKind
  n: SampleSize
  p: Optional[MomentOrder] = None
  x: Optional[float] = None
  empirical: float
  standard_error: float
  theoretical: float
  passed: bool

  @property
  def status(self) -> str:
    return "PASS" if self.passed else "FAIL"

  def describe(self) -> str:
    if self.kind == VerdictKind.TAIL:
      where = f"x={self.x:g}"
    else:
      where = f"p={self.p:g}"
    return (f"{self.status} {self.kind} n={self.n} {where}: empirical "
            f"{self.empirical:.6g} (se {self.standard_error:.3g}) vs "
            f"theoretical {self.theoretical:.6g}")


class VerdictList(ListLikeRootModel):
  """Verdicts in comparison order."""

  root: list[Verdict]

  @property
  def all_passed(self) -> bool:
    return all(v.passed for v in self.root)

  def failures(self) -> list[Verdict]:
    return [v for v in self.root if not v.passed]
