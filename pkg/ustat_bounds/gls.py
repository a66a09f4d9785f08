"""Grand Lebesgue Space norms, Young-Fenchel transforms and the moment/tail
conversions built on them."""

from fractions import Fraction
from functools import lru_cache
import logging
import math
from typing import Callable, Mapping, Optional, Sequence
import warnings

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from ustat_bounds.bounds import growth
from ustat_bounds.bounds import normalized_constant
from ustat_bounds.hoeffding import decompose
from ustat_bounds.model import center
from ustat_bounds.model import centered_poisson_log_moment
from ustat_bounds.model import DEFAULT_TAIL_TOL
from ustat_bounds.model import support_weights
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.gls import ConversionDirection
from ustat_bounds.models.gls import PSI_LOWER
from ustat_bounds.models.gls import PsiFamily
from ustat_bounds.models.gls import PsiFunction
from ustat_bounds.models.gls import TailFamily
from ustat_bounds.models.gls import TailFamilyConversion
from ustat_bounds.models.gls import TailFunction
from ustat_bounds.models.kernel import CenteredKernel
from ustat_bounds.models.kernel import Kernel
from ustat_bounds.utils.enumeration import DEFAULT_ENUMERATION_CAP
from ustat_bounds.utils.error_handling import BoundaryMaximumWarning
from ustat_bounds.utils.error_handling import DivergentNormError
from ustat_bounds.utils.error_handling import ParamError
from ustat_bounds.utils.error_handling import QuadratureFailureError
from ustat_bounds.utils.error_handling import UnboundedConjugateError
from ustat_bounds.utils.numerics import grid_sup
from ustat_bounds.utils.numerics import GRID_POINTS
from ustat_bounds.utils.numerics import GridSup
from ustat_bounds.utils.numerics import log_abs_moment
from ustat_bounds.utils.numerics import log_grid
from ustat_bounds.utils.numerics import REFINEMENT_ROUNDS

logger = logging.getLogger(__name__)

# A sup still growing by more than this per decade of p at the grid end
# is treated as infinite.
DIVERGENCE_THRESHOLD: float = 0.01
BOUNDARY_TOLERANCE: float = 1e-9

CONJUGATE_START_UPPER: float = 64.0
CONJUGATE_GROWTH: float = 4.0
CONJUGATE_MAX_UPPER: float = 1e6

QUADRATURE_START: float = 1e-12
QUADRATURE_RATIO: float = 1.01
QUADRATURE_CHUNK: int = 512
QUADRATURE_RELATIVE_TOL: float = 1e-18
QUADRATURE_MAX_X: float = 1e150
DEFAULT_TAIL_P_MAX: float = 64.0
DEFAULT_TAIL_P_POINTS: int = 128

DEFAULT_THEOREM_N_MAX: int = 200

MomentFunction = Callable[[float], float]


def psi_d_transform(psi: PsiFunction, d: int) -> PsiFunction:
  """ψ_d(p) = (p / ln p)^d ψ(p) on the same support.

    Raises:
        ParamError: If d < 0.
    """
  if d < 0:
    raise ParamError(f"The transform degree must be >= 0, got {d}.")
  if d == 0:
    return psi
  base = psi.log_func

  def log_func(p: float) -> float:
    return base(p) + d * math.log(growth(p))

  name = f"{psi.name or psi.family}_d{psi.degree + d}"
  return PsiFunction(b=psi.b,
                     log_func=log_func,
                     family=psi.family,
                     degree=psi.degree + d,
                     params=psi.params,
                     convex_nu=psi.convex_nu,
                     name=name)


def _ratio(moments: MomentFunction, psi: PsiFunction) -> MomentFunction:

  def ratio(p: float) -> float:
    moment = float(moments(p))
    if moment == 0.0:
      return 0.0
    if not math.isfinite(moment):
      return math.inf
    return math.exp(math.log(moment) - psi.log(p))

  return ratio


def _upper(psi: PsiFunction, p_max: Optional[float]) -> float:
  if p_max is None:
    return psi.grid_upper
  return min(max(float(p_max), PSI_LOWER), psi.grid_upper)


def gls_sup(moments: MomentFunction,
            psi: PsiFunction,
            *,
            p_max: Optional[float] = None,
            points: int = GRID_POINTS,
            rounds: int = REFINEMENT_ROUNDS) -> GridSup:
  """Grid search for sup_p |ζ|_p / ψ(p) without any divergence handling."""
  return grid_sup(_ratio(moments, psi),
                  PSI_LOWER,
                  _upper(psi, p_max),
                  points=points,
                  rounds=rounds)


def gls_norm(moments: MomentFunction,
             psi: PsiFunction,
             *,
             p_max: Optional[float] = None,
             points: int = GRID_POINTS,
             rounds: int = REFINEMENT_ROUNDS) -> float:
  """Computes ||ζ||_Gψ = sup_{p in [2, b)} |ζ|_p / ψ(p).

    The sup is taken on a log grid over [2, min(b, p_max, 10^4)] with local
    refinement. A maximum at the right end of the grid means the sup may lie
    beyond it: if the ratio still grows by more than 1% over the last decade
    of p the norm is declared infinite, otherwise the grid value is returned
    with a BoundaryMaximumWarning.

    Args:
        moments (Callable[[float], float]): p -> |ζ|_p.
        psi (PsiFunction): The norming function.
        p_max (Optional[float]): Cap on the grid, below b.
        points (int): Base grid size.
        rounds (int): Local refinement rounds.

    Returns:
        float: The norm.

    Raises:
        DivergentNormError: If the ratio is infinite or still growing at the
            end of the grid.
    """
  ratio = _ratio(moments, psi)
  hi = _upper(psi, p_max)
  result = grid_sup(ratio, PSI_LOWER, hi, points=points, rounds=rounds)
  if not math.isfinite(result.value):
    raise DivergentNormError(
        f"|ζ|_p / ψ(p) is infinite near p={result.argmax}.")
  values = result.values
  interior = float(np.max(values[:-1])) if values.size > 1 else 0.0
  if values.size > 1 and values[-1] > interior * (1.0 + BOUNDARY_TOLERANCE):
    previous = ratio(max(PSI_LOWER, hi / 10.0))
    if previous > 0 and values[-1] / previous - 1.0 > DIVERGENCE_THRESHOLD:
      raise DivergentNormError(
          f"|ζ|_p / ψ(p) still grows at p={hi:g} "
          f"({previous:.6g} -> {values[-1]:.6g} over the last decade).")
    warnings.warn(
        f"The Grand Lebesgue sup is attained at the grid end p={hi:g}.",
        BoundaryMaximumWarning,
        stacklevel=2)
  return result.value


def nu(psi: PsiFunction, p: float) -> float:
  """ν(p) = p ln ψ(p) for p in [2, b).

    Raises:
        DomainError: Outside [2, b).
    """
  psi.require_domain(p)
  return p * psi.log(p)


def _maximize(objective: Callable[[float], float], lo: float, hi: float,
              convex: bool) -> tuple[float, float]:
  """(argmax, max) of `objective` on [lo, hi]."""
  if not convex:
    result = grid_sup(objective, lo, hi)
    return result.argmax, result.value
  candidates = [(lo, objective(lo)), (hi, objective(hi))]
  if hi > lo:
    found = minimize_scalar(lambda x: -objective(x),
                            bounds=(lo, hi),
                            method="bounded",
                            options={"xatol": 1e-10 * max(1.0, lo)})
    candidates.append((float(found.x), -float(found.fun)))
  return max(candidates, key=lambda pair: pair[1])


def young_fenchel(f: Callable[[float], float],
                  y: float,
                  *,
                  lo: float = PSI_LOWER,
                  hi: float = math.inf,
                  convex: bool = True) -> float:
  """f*(y) = sup_{x in [lo, hi]} (x y - f(x)).

    A convex f gives a concave objective, maximized with bounded Brent
    search plus both endpoints; otherwise a dense grid with refinement is
    used. For hi = ∞ the search interval grows from 64 by factors of 4
    while the maximizer sits at its right end.

    Raises:
        UnboundedConjugateError: If the maximizer is still at the right end
            when the interval reaches 10^6. `lower_bound` carries the best
            objective value found.
    """

  def objective(x: float) -> float:
    value = f(x)
    return -math.inf if not math.isfinite(value) else x * y - value

  if math.isfinite(hi):
    return _maximize(objective, lo, hi, convex)[1]

  upper = max(CONJUGATE_START_UPPER, 2.0 * lo)
  while True:
    argmax, value = _maximize(objective, lo, upper, convex)
    if argmax < upper * (1.0 - 1e-6):
      return value
    if upper >= CONJUGATE_MAX_UPPER:
      raise UnboundedConjugateError(
          f"x y - f(x) still increases at x={upper:g} for y={y:g}.",
          lower_bound=value)
    upper = min(upper * CONJUGATE_GROWTH, CONJUGATE_MAX_UPPER)


def nu_conjugate(psi: PsiFunction) -> Callable[[float], float]:
  """Memoized y -> ν*_ψ(y).

    Where the conjugate is unbounded its lower bound is returned, which keeps
    exp(-ν*) a valid (if loose) tail bound.
    """
  hi = psi.grid_upper if math.isfinite(psi.b) else math.inf

  @lru_cache(maxsize=4096)
  def conjugate(y: float) -> float:
    try:
      return young_fenchel(lambda p: nu(psi, p),
                           y,
                           lo=PSI_LOWER,
                           hi=hi,
                           convex=psi.convex_nu)
    except UnboundedConjugateError as error:
      logger.debug("ν* unbounded at y=%g, using %g", y, error.lower_bound)
      return error.lower_bound

  return conjugate


def tail_envelope(psi: PsiFunction, norm: float) -> TailFunction:
  """The exponential tail bound of a variable with ||ζ||_Gψ = norm.

    T(x) <= exp(-ν*(ln(x / norm))) for x > e * norm, and 1 below.
    """
  if not norm > 0:
    raise ParamError(f"The norm must be positive, got {norm}.")
  conjugate = nu_conjugate(psi)
  threshold = math.e * norm

  def envelope(x: float) -> float:
    if x <= threshold:
      return 1.0
    return math.exp(-conjugate(math.log(x / norm)))

  return TailFunction(func=envelope,
                      label=f"envelope of {psi.name or psi.family}, norm {norm:g}")


def _tabulated_log_moments(tail: TailFunction,
                           orders: np.ndarray) -> np.ndarray:
  """log of p ∫ x^(p-1) min(1, 2T(x)) dx for a step tail, integrated exactly."""
  grid = np.asarray(tail.grid, dtype=float)
  h = np.minimum(1.0, 2.0 * np.asarray(tail.values, dtype=float))
  if h[-1] > 0:
    raise QuadratureFailureError(
        "The tabulated tail does not reach zero, moments diverge.")
  edges = np.concatenate([[0.0], grid])
  heights = np.concatenate([[1.0], h[:-1]])
  keep = heights > 0
  left, right, heights = edges[:-1][keep], edges[1:][keep], heights[keep]
  out = np.empty(orders.size)
  for i, p in enumerate(orders):
    with np.errstate(divide="ignore", invalid="ignore"):
      log_right = p * np.log(right)
      shrink = np.where(left > 0, np.exp(p * (np.log(left) - np.log(right))),
                        0.0)
      terms = np.log(heights) + log_right + np.log1p(-shrink)
    out[i] = logsumexp(terms)
  return out


def _tail_cells(tail: TailFunction, p_hi: float) -> tuple[np.ndarray, np.ndarray]:
  """Geometric grid x_k and h_k = min(1, 2T(x_k)) covering the mass of
    x^(p_hi - 1) T(x)."""
  x = QUADRATURE_START
  while 2.0 * tail(x) >= 1.0:
    x *= 2.0
    if x > QUADRATURE_MAX_X:
      raise QuadratureFailureError("The tail never drops below 1/2.")
  start = x / 2.0 if x > QUADRATURE_START else x
  log_ratio = math.log(QUADRATURE_RATIO)
  xs: list[float] = []
  hs: list[float] = []
  running = -math.inf
  k = 0
  while True:
    block = start * np.exp(log_ratio * np.arange(k, k + QUADRATURE_CHUNK))
    if block[-1] > QUADRATURE_MAX_X:
      raise QuadratureFailureError(
          f"The tail decays too slowly for p={p_hi:g}.")
    values = np.minimum(1.0, 2.0 * tail.evaluate(block))
    xs.extend(block.tolist())
    hs.extend(values.tolist())
    k += QUADRATURE_CHUNK
    if values[-1] == 0.0:
      break
    with np.errstate(divide="ignore"):
      log_terms = np.log(values) + p_hi * np.log(block)
    running = float(np.logaddexp(running, logsumexp(log_terms)))
    if log_terms[-1] < running + math.log(QUADRATURE_RELATIVE_TOL):
      break
  logger.debug("tail quadrature: %d cells up to x=%g", len(xs), xs[-1])
  return np.array(xs), np.array(hs)


def _analytic_log_moments(tail: TailFunction,
                          orders: np.ndarray) -> np.ndarray:
  """log of p ∫ x^(p-1) min(1, 2T(x)) dx with ln T interpolated linearly in
    ln x on every cell."""
  x, h = _tail_cells(tail, float(orders.max()))
  log_ratio = math.log(QUADRATURE_RATIO)
  x_left, h_left, h_right = x[:-1], h[:-1], h[1:]
  positive = h_left > 0
  x_left, h_left, h_right = x_left[positive], h_left[positive], h_right[
      positive]
  with np.errstate(divide="ignore"):
    slope = np.where(h_right > 0,
                     (np.log(h_left) - np.log(h_right)) / log_ratio, np.inf)
  out = np.empty(orders.size)
  for i, p in enumerate(orders):
    a = p - slope
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
      scaled = np.where(np.abs(a) > 1e-12,
                        np.expm1(a * log_ratio) / np.where(a == 0, 1.0, a),
                        log_ratio)
      # A cell where the tail hits zero is bounded by its left value.
      scaled = np.where(np.isinf(slope), np.expm1(p * log_ratio) / p, scaled)
      terms = (math.log(p) + np.log(h_left) + p * np.log(x_left) +
               np.log(scaled))
    head = p * math.log(x[0])
    out[i] = logsumexp(np.append(terms, head))
  return out


def norm_from_tail(tail: TailFunction,
                   psi: PsiFunction,
                   *,
                   p_max: float = DEFAULT_TAIL_P_MAX,
                   points: int = DEFAULT_TAIL_P_POINTS) -> float:
  """Grand Lebesgue norm of a variable known only through its tail.

    Moments are bounded by E|ζ|^p <= p ∫ x^(p-1) min(1, 2T(x)) dx, the factor
    2 accounting for T being the larger of the two one-sided tails. Step
    tails are integrated exactly; analytic tails on a 1% geometric grid
    that stops once the integrand is below 1e-18 of the running integral.

    Args:
        tail (TailFunction): The tail function.
        psi (PsiFunction): The norming function.
        p_max (float): Largest moment order used.
        points (int): Number of moment orders between 2 and p_max.

    Returns:
        float: sup_p of the moment bound over ψ(p).

    Raises:
        QuadratureFailureError: If the tail decays too slowly.
    """
  hi = _upper(psi, p_max)
  orders = log_grid(PSI_LOWER, hi, points)
  if tail.is_tabulated:
    log_moments = _tabulated_log_moments(tail, orders)
  else:
    log_moments = _analytic_log_moments(tail, orders)
  log_norms = log_moments / orders
  log_orders = np.log(orders)

  def moments(p: float) -> float:
    return math.exp(float(np.interp(math.log(p), log_orders, log_norms)))

  return gls_norm(moments, psi, p_max=hi, points=points)


def _centered(kernel: Kernel, dist: Optional[DiscreteDistribution],
              cap: int) -> CenteredKernel:
  if dist is None:
    if not isinstance(kernel, CenteredKernel):
      raise ValueError("A distribution is needed for an uncentered kernel.")
    return kernel
  if isinstance(kernel, CenteredKernel) and kernel.distribution == dist:
    return kernel
  return center(kernel, dist, cap=cap)


def natural_psi(kernel: Kernel,
                dist: Optional[DiscreteDistribution] = None,
                *,
                cap: int = DEFAULT_ENUMERATION_CAP) -> PsiFunction:
  """ψ_Φ(p) = |Φ|_p, the smallest ψ with ||Φ||_Gψ = 1.

    The kernel is centered against `dist` first; a CenteredKernel may be
    passed without `dist`.
    """
  centered = _centered(kernel, dist, cap)
  law = centered.distribution
  values = centered.table(law, cap)
  weights = support_weights(law, centered.arity)

  @lru_cache(maxsize=8192)
  def log_norm(p: float) -> float:
    return log_abs_moment(values, weights, p) / p

  return PsiFunction(log_func=log_norm,
                     family=PsiFamily.NATURAL,
                     params={"variance": centered.variance},
                     convex_nu=True,
                     name=f"natural_{centered.name}")


def centered_poisson_psi(tail_tol: float = DEFAULT_TAIL_TOL) -> PsiFunction:
  """Natural ψ of the untruncated centered Poisson(1) law."""

  @lru_cache(maxsize=8192)
  def log_norm(p: float) -> float:
    return centered_poisson_log_moment(p, tail_tol) / p

  return PsiFunction(log_func=log_norm,
                     family=PsiFamily.NATURAL,
                     convex_nu=True,
                     name="natural_poisson_centered")


def gls_norm_bound(kernel: Kernel,
                   dist: Optional[DiscreteDistribution] = None,
                   d: Optional[int] = None,
                   r: Optional[int] = None,
                   *,
                   psi: Optional[PsiFunction] = None,
                   n_values: Optional[Sequence[int]] = None) -> float:
  """Bound C(d, r) ||Φ||_Gψ on sup_n ||U(n)/σ(n)||_Gψ_d.

    Args:
        kernel (Kernel): The kernel Φ.
        dist (Optional[DiscreteDistribution]): Law of the observations.
        d (Optional[int]): Degree; the kernel arity if None.
        r (Optional[int]): Rank; computed if None.
        psi (Optional[PsiFunction]): Norming function for Φ; the natural ψ
            (for which ||Φ|| = 1) if None.
        n_values (Optional[Sequence[int]]): Sample sizes over which C(d, r)
            is maximized; d..200 if None.

    Returns:
        float: The bound.
    """
  centered = _centered(kernel, dist, DEFAULT_ENUMERATION_CAP)
  projections = decompose(centered, centered.distribution)
  d = centered.arity if d is None else d
  r = projections.rank if r is None else r
  if n_values is None:
    n_values = range(d, max(d, DEFAULT_THEOREM_N_MAX) + 1)
  constant = normalized_constant(d, r, projections.variances, list(n_values))
  if psi is None:
    norm = 1.0
  else:
    natural = natural_psi(centered)
    norm = gls_norm(lambda p: math.exp(natural.log(p)), psi)
  logger.debug("theorem bound for %s: C=%g norm=%g", centered.name, constant,
               norm)
  return constant * norm


def _fractions(params: Mapping[str, float], *keys: str) -> list[Fraction]:
  missing = [k for k in keys if k not in params]
  if missing:
    raise ParamError(f"Missing family parameters: {', '.join(missing)}.")
  return [Fraction(str(params[k])) for k in keys]


def example_tail_families(kind: TailFamily | str,
                          params: Mapping[str, float],
                          direction: ConversionDirection |
                          str = ConversionDirection.MOMENTS_TO_TAIL,
                          d: int = 0) -> TailFamilyConversion:
  """Exponent algebra between moment families and tail families.

    power_log, params {m, r}: moments p^(1/m) ln^r p match the tail
    exp(-C x^m log^(-m r) x) in either direction. Through a U-statistic of
    degree d the moments become p^(d + 1/m) ln^(r - d) p and the tail
    exp(-C x^(m/(1+dm)) log^(-m(r-d)/(1+dm)) x).

    exp_beta: moments exp(C p^β) (params {beta}) match the tail
    exp(-C [ln(1+x)]^(1+1/β)); from a tail with log power q > 1 (params
    {q}) β = 1/(q - 1). The family is closed under the degree-d map.

    Raises:
        ParamError: If parameters are missing or not positive.
    """
  try:
    kind = TailFamily(kind)
    direction = ConversionDirection(direction)
  except ValueError as error:
    raise ParamError(str(error)) from error
  if d < 0:
    raise ParamError(f"d must be >= 0, got {d}.")

  if kind == TailFamily.POWER_LOG:
    m, r = _fractions(params, "m", "r")
    if m <= 0:
      raise ParamError("power_log needs m > 0.")
    scale = 1 + d * m
    return TailFamilyConversion(kind=kind,
                                direction=direction,
                                d=d,
                                source={
                                    "m": m,
                                    "r": r
                                },
                                moment_power=d + 1 / m,
                                moment_log_power=r - d,
                                tail_power=m / scale,
                                tail_log_power=-m * (r - d) / scale)

  if direction == ConversionDirection.MOMENTS_TO_TAIL:
    (beta,) = _fractions(params, "beta")
    if beta <= 0:
      raise ParamError("exp_beta needs beta > 0.")
    source = {"beta": beta}
  else:
    (q,) = _fractions(params, "q")
    if q <= 1:
      raise ParamError("An exp_beta tail needs log power q > 1.")
    beta = 1 / (q - 1)
    source = {"q": q}
  return TailFamilyConversion(kind=kind,
                              direction=direction,
                              d=d,
                              source=source,
                              beta=beta,
                              tail_log_power=1 + 1 / beta)


def young_orlicz_curve(psi: PsiFunction, u_grid) -> np.ndarray:
  """Samples the Young-Orlicz function M of the exponential Orlicz space
    matching Gψ.

    M(u) = exp(ν*(ln|u|)) for |u| > e, and exp(C u²) - 1 below with C
    chosen so that M is continuous at |u| = e.

    Returns:
        np.ndarray: Rows (u, M(u)).
    """
  conjugate = nu_conjugate(psi)
  at_e = conjugate(1.0)
  c = float(np.logaddexp(0.0, at_e)) / math.e**2
  rows = []
  for u in np.asarray(u_grid, dtype=float).ravel():
    a = abs(u)
    with np.errstate(over="ignore"):
      if a > math.e:
        value = np.exp(conjugate(math.log(a)))
      else:
        value = np.expm1(c * a * a)
    rows.append((float(u), float(value)))
  return np.array(rows).reshape(len(rows), 2)
