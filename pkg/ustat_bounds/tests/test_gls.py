from fractions import Fraction
import math

import numpy as np
import pytest

from ustat_bounds.bounds import growth
from ustat_bounds.bounds import normalized_constant
from ustat_bounds.gls import centered_poisson_psi
from ustat_bounds.gls import example_tail_families
from ustat_bounds.gls import gls_norm
from ustat_bounds.gls import gls_norm_bound
from ustat_bounds.gls import gls_sup
from ustat_bounds.gls import natural_psi
from ustat_bounds.gls import norm_from_tail
from ustat_bounds.gls import nu
from ustat_bounds.gls import nu_conjugate
from ustat_bounds.gls import psi_d_transform
from ustat_bounds.gls import tail_envelope
from ustat_bounds.gls import young_fenchel
from ustat_bounds.gls import young_orlicz_curve
from ustat_bounds.hoeffding import decompose
from ustat_bounds.model import center
from ustat_bounds.model import centered_poisson_lp_norm
from ustat_bounds.model import kernel_lp_norm
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.gls import PsiFamily
from ustat_bounds.models.gls import PsiFunction
from ustat_bounds.models.gls import TailFunction
from ustat_bounds.models.kernel import build_kernel
from ustat_bounds.utils.error_handling import BoundaryMaximumWarning
from ustat_bounds.utils.error_handling import DivergentNormError
from ustat_bounds.utils.error_handling import DomainError
from ustat_bounds.utils.error_handling import ParamError
from ustat_bounds.utils.error_handling import QuadratureFailureError
from ustat_bounds.utils.error_handling import UnboundedConjugateError

THREE_POINT = DiscreteDistribution(atoms=[(-1.0, 0.2), (0.5, 0.3), (3.0, 0.5)])


def test_psi_d_transform():
  """Test ψ_d(p) = (p / ln p)^d ψ(p) and the degree bookkeeping."""
  psi = PsiFunction.power_log(1.5, 2.0)
  psi_2 = psi_d_transform(psi, 2)
  assert psi_2(10.0) == pytest.approx(growth(10.0)**2 * psi(10.0))
  assert psi_2.degree == 2
  assert psi_d_transform(psi_2, 1).degree == 3
  assert psi_d_transform(psi, 0) is psi
  with pytest.raises(ParamError):
    psi_d_transform(psi, -1)


def test_gls_norm_of_psi_itself_is_one():
  """Test that a variable with moments ψ(p) has norm 1."""
  psi = PsiFunction.power_log(2.0, 1.0, 0.5)
  assert gls_norm(psi, psi) == pytest.approx(1.0)


def test_gls_norm_is_homogeneous():
  """Test ||c ζ|| = c ||ζ||."""
  psi = PsiFunction.power_log(1.0, 2.0)
  kernel = center(build_kernel("sum", 2), THREE_POINT)

  def moments(p):
    return kernel_lp_norm(kernel, THREE_POINT, p)

  base = gls_norm(moments, psi)
  assert gls_norm(lambda p: 3.0 * moments(p), psi) == pytest.approx(3.0 * base)


def test_gls_norm_of_centered_poisson_in_its_natural_space():
  """Test that the natural ψ of centered Poisson gives norm 1."""
  psi = centered_poisson_psi()
  assert psi(2.0) == pytest.approx(1.0)
  assert gls_norm(centered_poisson_lp_norm, psi, p_max=200.0) == pytest.approx(
      1.0)


def test_gls_norm_divergence():
  """Test that moments outgrowing ψ give DivergentNormError."""
  psi = PsiFunction.power_log(2.0, 1.0)
  with pytest.raises(DivergentNormError):
    gls_norm(lambda p: p * p, psi)
  with pytest.raises(DivergentNormError):
    gls_norm(lambda p: math.inf, psi)


def test_gls_norm_boundary_warning():
  """Test that a slowly saturating ratio warns instead of diverging."""
  psi = PsiFunction.power_log(2.0, 1.0)
  with pytest.warns(BoundaryMaximumWarning):
    value = gls_norm(lambda p: p - 1.0, psi)
  assert value == pytest.approx(0.5, rel=1e-3)


def test_gls_sup_reports_argmax():
  """Test the raw grid search with an interior maximum."""
  psi = PsiFunction.constant(2.0)
  result = gls_sup(lambda p: math.exp(-(math.log(p) - 2.0)**2), psi)
  assert result.argmax == pytest.approx(math.e**2, rel=1e-2)
  assert result.value == pytest.approx(0.5)


def test_nu_domain():
  """Test ν(p) = p ln ψ(p) and its domain."""
  psi = PsiFunction.exp_beta(1.0, 1.0)
  assert nu(psi, 3.0) == pytest.approx(9.0)
  with pytest.raises(DomainError):
    nu(psi, 1.0)


@pytest.mark.parametrize("y, expected", [(6.0, 9.0), (2.0, 0.0), (4.0, 4.0)])
def test_young_fenchel_of_square(y, expected):
  """Test sup_{x >= 2} (x y - x²), including the boundary maximizer."""
  assert young_fenchel(lambda x: x * x, y) == pytest.approx(expected,
                                                            abs=1e-8)


def test_young_fenchel_grid_search():
  """Test the non-convex path on a convex function."""
  assert young_fenchel(lambda x: x * x, 6.0,
                       convex=False) == pytest.approx(9.0, rel=1e-6)


def test_young_fenchel_bounded_interval():
  """Test a finite right end cutting off the unconstrained maximizer."""
  assert young_fenchel(lambda x: x * x, 10.0, hi=3.0) == pytest.approx(21.0)


def test_young_fenchel_unbounded():
  """Test that a linear f below y x has no finite conjugate."""
  with pytest.raises(UnboundedConjugateError) as error:
    young_fenchel(lambda x: x, 2.0)
  assert error.value.lower_bound == pytest.approx(1e6, rel=1e-6)


def test_young_fenchel_convexity_in_y():
  """Test midpoint convexity of the conjugate on collinear points."""

  def f(x):
    return x * math.log(x)

  values = [young_fenchel(f, y) for y in (1.0, 2.0, 3.0)]
  assert values[1] <= (values[0] + values[2]) / 2 + 1e-9


def test_nu_conjugate_of_exponential_psi():
  """Test ν(p) = p² from ψ = e^p: ν*(y) = y²/4 for y >= 4, 2y - 4 below."""
  conjugate = nu_conjugate(PsiFunction.exp_beta(1.0, 1.0))
  assert conjugate(8.0) == pytest.approx(16.0, rel=1e-8)
  assert conjugate(3.0) == pytest.approx(2.0, abs=1e-8)


def test_nu_conjugate_falls_back_to_lower_bound():
  """Test that an unbounded conjugate returns its lower bound."""
  psi = PsiFunction.constant(math.e)
  # ν(p) = p, so p y - ν(p) grows without bound for y > 1.
  assert nu_conjugate(psi)(2.0) == pytest.approx(1e6, rel=1e-6)


def test_tail_envelope_of_subgaussian_psi():
  """Test exp(-x² / (2e)) from ψ(p) = √p with norm 1."""
  envelope = tail_envelope(PsiFunction.power_log(1.0, 2.0), 1.0)
  assert envelope(2.0) == 1.0
  assert envelope(math.e) == 1.0
  for x in (3.0, 5.0):
    assert envelope(x) == pytest.approx(math.exp(-x * x / (2 * math.e)),
                                        rel=1e-6)


def test_tail_envelope_scales_with_norm():
  """Test that the envelope for norm c is the unit envelope at x / c."""
  psi = PsiFunction.power_log(1.0, 2.0)
  unit = tail_envelope(psi, 1.0)
  assert tail_envelope(psi, 2.0)(8.0) == pytest.approx(unit(4.0))
  with pytest.raises(ParamError):
    tail_envelope(psi, 0.0)


def test_centered_poisson_tail_stays_below_envelope():
  """Test the exact Poisson tail against its natural envelope."""
  envelope = tail_envelope(centered_poisson_psi(), 1.0)
  for x in np.linspace(math.e + 0.05, 30.0, 40):
    k = math.floor(x + 1.0) + 1
    exact = 1.0 - sum(math.exp(-1.0) / math.factorial(j) for j in range(k))
    assert max(exact, 0.0) <= envelope(float(x)) + 1e-15


def test_norm_from_tabulated_step_tail():
  """Test a variable bounded by 1: every moment bound is 1."""
  tail = TailFunction.tabulated([0.0, 1.0], [1.0, 0.0])
  assert norm_from_tail(tail, PsiFunction.constant(2.0)) == pytest.approx(0.5)


def test_norm_from_tail_rejects_heavy_tails():
  """Test both quadrature failures."""
  with pytest.raises(QuadratureFailureError):
    norm_from_tail(TailFunction.tabulated([1.0, 2.0], [0.5, 0.1]),
                   PsiFunction.constant(2.0))
  with pytest.raises(QuadratureFailureError):
    norm_from_tail(TailFunction(func=lambda x: min(1.0, 1.0 / x)),
                   PsiFunction.constant(2.0))


def test_norm_from_tail_scales_linearly():
  """Test that the norm of 3 ζ is three times the norm of ζ."""
  psi = PsiFunction.power_log(1.0, 2.0)
  tail = TailFunction(func=lambda x: math.exp(-x * x))
  base = norm_from_tail(tail, psi)
  assert base > 0
  assert norm_from_tail(tail.scaled(3.0), psi) == pytest.approx(3.0 * base,
                                                                rel=1e-3)


def test_norm_from_tail_round_trip():
  """Test that the envelope of a norm does not produce a smaller norm."""
  psi = PsiFunction.power_log(1.0, 2.0)
  envelope = tail_envelope(psi, 1.0)
  assert norm_from_tail(envelope, psi) >= 1.0


def test_natural_psi_gives_unit_norm():
  """Test ψ_Φ(p) = |Φ|_p and ||Φ||_Gψ_Φ = 1."""
  kernel = build_kernel("sign", 2)
  psi = natural_psi(kernel, THREE_POINT)
  centered = center(kernel, THREE_POINT)
  assert psi.family == PsiFamily.NATURAL
  assert psi(4.0) == pytest.approx(kernel_lp_norm(centered, THREE_POINT, 4.0))
  assert psi(2.0) == pytest.approx(math.sqrt(centered.variance))
  assert gls_norm(lambda p: kernel_lp_norm(centered, THREE_POINT, p),
                  psi,
                  p_max=100.0) == pytest.approx(1.0)


def test_natural_psi_needs_distribution():
  """Test that an uncentered kernel needs its law."""
  with pytest.raises(ValueError):
    natural_psi(build_kernel("sum", 2))


def test_natural_psi_of_rademacher_product_is_one():
  """Test that |x y| = 1 gives the constant natural ψ."""
  psi = natural_psi(build_kernel("product", 2), DiscreteDistribution.rademacher())
  assert psi(50.0) == pytest.approx(1.0)


def test_theorem_bound_with_natural_psi():
  """Test that the bound reduces to C(d, r) when ||Φ|| = 1."""
  kernel = build_kernel("sum", 2)
  projections = decompose(kernel, THREE_POINT)
  sizes = [2, 5, 10]
  expected = normalized_constant(2, projections.rank, projections.variances,
                                 sizes)
  assert gls_norm_bound(kernel, THREE_POINT,
                        n_values=sizes) == pytest.approx(expected)


def test_theorem_bound_with_explicit_psi():
  """Test C(d, r) ||Φ||_Gψ for a power-log ψ."""
  kernel = build_kernel("sum", 2)
  centered = center(kernel, THREE_POINT)
  psi = PsiFunction.power_log(1.0, 2.0)
  sizes = [2, 5, 10]
  constant = gls_norm_bound(kernel, THREE_POINT, n_values=sizes)
  norm = gls_norm(lambda p: kernel_lp_norm(centered, THREE_POINT, p), psi)
  assert gls_norm_bound(kernel, THREE_POINT, psi=psi,
                        n_values=sizes) == pytest.approx(constant * norm,
                                                         rel=1e-6)


@pytest.mark.parametrize("m, r, d, tail_power, tail_log_power", [
    (2, 0, 0, Fraction(2), Fraction(0)),
    (2, 0, 1, Fraction(2, 3), Fraction(2, 3)),
    (1, 1, 2, Fraction(1, 3), Fraction(1, 3)),
    (Fraction(1, 2), 0, 3, Fraction(1, 5), Fraction(3, 5)),
])
def test_power_log_exponents(m, r, d, tail_power, tail_log_power):
  """Test m' = m / (1 + d m) and the log power -m (r - d) / (1 + d m)."""
  conversion = example_tail_families("power_log", {"m": m, "r": r}, d=d)
  assert conversion.tail_power == tail_power
  assert conversion.tail_log_power == tail_log_power
  assert conversion.moment_power == d + 1 / Fraction(m)
  assert conversion.moment_log_power == r - d


def test_exp_beta_log_power_is_preserved():
  """Test 1 + 1/β in both directions and under any degree."""
  forward = example_tail_families("exp_beta", {"beta": 1}, d=3)
  assert forward.tail_log_power == 2
  assert forward.beta == 1
  backward = example_tail_families("exp_beta", {"q": 3},
                                   direction="tail_to_moments")
  assert backward.beta == Fraction(1, 2)
  assert backward.tail_log_power == 3


def test_exp_beta_round_trip():
  """Test that β -> q -> β returns the same β."""
  beta = Fraction(2, 7)
  q = example_tail_families("exp_beta", {"beta": beta}).tail_log_power
  assert example_tail_families("exp_beta", {"q": q},
                               direction="tail_to_moments").beta == beta


@pytest.mark.parametrize("kind, params, direction, d", [
    ("power_log", {"m": 0, "r": 0}, "moments_to_tail", 0),
    ("power_log", {"m": 1}, "moments_to_tail", 0),
    ("exp_beta", {"beta": -1}, "moments_to_tail", 0),
    ("exp_beta", {"q": 1}, "tail_to_moments", 0),
    ("gaussian", {}, "moments_to_tail", 0),
    ("power_log", {"m": 1, "r": 0}, "sideways", 0),
    ("power_log", {"m": 1, "r": 0}, "moments_to_tail", -1),
])
def test_example_tail_families_errors(kind, params, direction, d):
  """Test that bad parameters raise ParamError."""
  with pytest.raises(ParamError):
    example_tail_families(kind, params, direction, d)


def test_young_orlicz_curve_is_continuous_at_e():
  """Test M(0) = 0 and continuity of M at |u| = e."""
  psi = PsiFunction.power_log(1.0, 2.0)
  curve = young_orlicz_curve(psi, [0.0, math.e - 1e-9, math.e + 1e-9, 4.0])
  assert curve.shape == (4, 2)
  assert curve[0, 1] == 0.0
  assert curve[1, 1] == pytest.approx(curve[2, 1], rel=1e-6)
  assert curve[3, 1] == pytest.approx(math.exp(16.0 / (2 * math.e)), rel=1e-6)
