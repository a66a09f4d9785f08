import math

import pytest

from ustat_bounds.bounds import bound_report
from ustat_bounds.bounds import gamma
from ustat_bounds.bounds import gamma_table
from ustat_bounds.bounds import growth
from ustat_bounds.bounds import growth_power
from ustat_bounds.bounds import lower_bound_ratio
from ustat_bounds.bounds import martingale_moment_bound
from ustat_bounds.bounds import moment_bound_detailed
from ustat_bounds.bounds import moment_bound_normalized
from ustat_bounds.bounds import moment_bound_terms
from ustat_bounds.bounds import normalized_constant
from ustat_bounds.bounds import osekowski_constant
from ustat_bounds.bounds import osekowski_os
from ustat_bounds.bounds import osekowski_sup
from ustat_bounds.bounds import previous_bound_growth
from ustat_bounds.bounds import sandwich
from ustat_bounds.hoeffding import decompose
from ustat_bounds.hoeffding import variance_from_components
from ustat_bounds.model import center
from ustat_bounds.model import kernel_lp_norm
from ustat_bounds.models.bounds import BoundInput
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.kernel import build_kernel
from ustat_bounds.ustat import brute_force_moment
from ustat_bounds.utils.error_handling import DegenerateVarianceError
from ustat_bounds.utils.error_handling import DomainError

BERNOULLI = DiscreteDistribution(atoms=[(0.0, 0.7), (1.0, 0.3)])
K_OS = 15.785803


def test_growth_at_e():
  """Test that p / ln p equals e at p = e."""
  assert growth(math.e) == pytest.approx(math.e)


def test_osekowski_os_at_four():
  """Test Os(4) = 4√2 · 2^(1/4) · (1 + 4/ln 2)."""
  assert osekowski_os(4.0) == pytest.approx(45.548198, rel=1e-6)


def test_osekowski_os_is_flat_below_four():
  """Test that Os is held at Os(4) on [2, 4)."""
  assert osekowski_os(2.0) == osekowski_os(3.5) == osekowski_os(4.0)
  with pytest.raises(DomainError):
    osekowski_os(1.5)


def test_osekowski_constant():
  """Test K_Os = sup_{p >= 4} Os(p) / (p / ln p) ≈ 15.7858."""
  assert osekowski_constant() == pytest.approx(15.7858, abs=1e-3)
  assert osekowski_constant() == pytest.approx(K_OS, rel=1e-6)


def test_osekowski_sup_interval_checks():
  """Test that intervals starting below 2 or inverted are refused."""
  assert osekowski_sup(4.0, 100.0) == pytest.approx(K_OS, rel=1e-6)
  with pytest.raises(DomainError):
    osekowski_sup(1.0, 10.0)
  with pytest.raises(DomainError):
    osekowski_sup(10.0, 5.0)


def test_gamma_recursion():
  """Test γ(1) = K_Os, γ(2) = 2 K_Os² and γ(3) = γ(2) K_Os (3/2)²."""
  k = osekowski_constant()
  assert gamma(1) == k
  assert gamma(2) == pytest.approx(2 * k * k)
  assert gamma(2) == pytest.approx(498.383, rel=1e-5)
  assert gamma(3) == pytest.approx(gamma(2) * k * 2.25)
  with pytest.raises(DomainError):
    gamma(0)


def test_gamma_table():
  """Test that the table lists γ(1..d_max)."""
  table = gamma_table(4)
  assert list(table) == [1, 2, 3, 4]
  assert table[4] == gamma(4)


def test_martingale_moment_bound():
  """Test γ(m) (p / ln p)^m |Φ|_p."""
  assert martingale_moment_bound(2, 8.0, 0.5) == pytest.approx(
      gamma(2) * (8.0 / math.log(8.0))**2 * 0.5)
  with pytest.raises(DomainError):
    martingale_moment_bound(1, 1.0, 1.0)


def test_growth_power_overflow():
  """Test that an overflowing (p / ln p)^m raises DomainError."""
  assert growth_power(math.e, 3) == pytest.approx(math.e**3)
  with pytest.raises(DomainError):
    growth_power(1e300, 6)
  with pytest.raises(DomainError):
    bound_report(BoundInput(d=6, r=1, n=10, p=1e300, phi_p=1.0))


def test_moment_bound_terms():
  """Test the summands for d = 2, r = 1, n = 10, p = 4."""
  inp = BoundInput(d=2, r=1, n=10, p=4.0, phi_p=1.0)
  g = growth(4.0)
  expected = (gamma(1) * 2 / math.sqrt(10) * g, gamma(2) / math.sqrt(45) * g**2)
  assert moment_bound_terms(inp) == pytest.approx(expected)
  assert moment_bound_detailed(inp) == pytest.approx(sum(expected))


def test_moment_bound_terms_start_at_rank():
  """Test that a degenerate kernel drops the degree one term."""
  inp = BoundInput(d=2, r=2, n=10, p=4.0, phi_p=1.0)
  assert len(moment_bound_terms(inp)) == 1


@pytest.mark.parametrize("name", ["sum", "product", "sign"])
@pytest.mark.parametrize("n", [2, 4, 6])
@pytest.mark.parametrize("p", [2.0, 3.0, 4.0, 6.0])
def test_detailed_bound_dominates_exact_moments(name, n, p):
  """Test |U(n) - E U(n)|_p <= the detailed bound on enumerated laws."""
  kernel = center(build_kernel(name, 2), BERNOULLI)
  r = decompose(kernel, BERNOULLI).rank
  exact = brute_force_moment(kernel, BERNOULLI, n, p)**(1.0 / p)
  bound = moment_bound_detailed(
      BoundInput(d=2,
                 r=r,
                 n=n,
                 p=p,
                 phi_p=kernel_lp_norm(kernel, BERNOULLI, p),
                 variance=kernel.variance))
  assert exact <= bound


def test_normalized_bound_requires_positive_sigma():
  """Test that σ(n) = 0 raises DegenerateVarianceError."""
  inp = BoundInput(d=1, r=1, n=5, p=2.0, phi_p=1.0)
  with pytest.raises(DegenerateVarianceError):
    moment_bound_normalized(inp, 0.0)
  assert moment_bound_normalized(inp, 2.0) == pytest.approx(
      moment_bound_detailed(inp) / 2.0)


def test_bound_report_constants():
  """Test the effective constants of the detailed and normalized forms."""
  inp = BoundInput(d=2, r=1, n=20, p=6.0, phi_p=0.8)
  report = bound_report(inp, sigma_n=0.3)
  scale = growth(6.0)**2 * 0.8
  assert report.detailed == pytest.approx(sum(report.terms))
  assert report.c_eff == pytest.approx(report.detailed * math.sqrt(20) / scale)
  assert report.normalized == pytest.approx(report.detailed / 0.3)
  assert report.c_normalized == pytest.approx(report.normalized / scale)
  assert list(report.gamma_table) == [1, 2]


def test_bound_report_without_sigma():
  """Test that normalized values are omitted without σ(n)."""
  report = bound_report(BoundInput(d=1, r=1, n=3, p=2.0, phi_p=1.0))
  assert report.normalized is None
  assert "normalized" not in report.to_dict()


def test_normalized_constant_single_point_matches_report():
  """Test C(d, r) on one (n, p) against the report's normalized constant."""
  variances = (0.0189, 0.0441)
  n, p = 12, 5.0
  sigma = math.sqrt(variance_from_components(2, 1, variances, n))
  report = bound_report(BoundInput(d=2, r=1, n=n, p=p, phi_p=1.0),
                        sigma_n=sigma)
  assert normalized_constant(2, 1, variances, [n],
                             [p]) == pytest.approx(report.c_normalized)


def test_normalized_constant_exact_sup_dominates_grids():
  """Test that the p = e supremum bounds every grid maximum."""
  variances = (0.0189, 0.0441)
  sizes = [2, 5, 20, 100]
  exact = normalized_constant(2, 1, variances, sizes)
  assert normalized_constant(2, 1, variances, sizes,
                             [2.0, 3.0, 10.0, 100.0]) <= exact
  assert exact >= normalized_constant(2, 1, variances, [5])


def test_normalized_constant_errors():
  """Test empty size lists and zero variance."""
  with pytest.raises(ValueError):
    normalized_constant(1, 1, (1.0,), [])
  with pytest.raises(DegenerateVarianceError):
    normalized_constant(1, 1, (0.0,), [4])


@pytest.mark.parametrize("dist, name, arity", [
    (BERNOULLI, "sum", 2),
    (BERNOULLI, "product", 3),
    (BERNOULLI, "sign", 2),
    (DiscreteDistribution.rademacher(), "product", 2),
    (DiscreteDistribution.rademacher(), "sample_variance", 2),
    (DiscreteDistribution.rademacher(), "product", 3),
])
def test_moment_scale_stays_bracketed(dist, name, arity):
  """Test that n^(r/2) |U(n)|_4 stays between two n-free constants."""
  kernel = center(build_kernel(name, arity), dist)
  projections = decompose(kernel, dist)
  r, p = projections.rank, 4.0
  phi_p = kernel_lp_norm(kernel, dist, p)
  # Var U(n) >= C(d,r)^2 Var g_r / C(n,r) and C(n,m) >= (n / m)^m.
  lower = math.comb(arity, r) * math.sqrt(
      math.factorial(r) * projections.variances[r - 1])
  upper = math.fsum(
      gamma(m) * math.comb(arity, m) * m**(m / 2) * growth(p)**m * phi_p
      for m in range(r, arity + 1))
  for n in range(arity, 13):
    scaled = n**(r / 2) * brute_force_moment(kernel, dist, n, p)**(1 / p)
    assert lower * (1.0 - 1e-9) <= scaled <= upper


def test_previous_growth_is_faster():
  """Test that p^d / ln p outgrows (p / ln p)^d."""
  for p in (10.0, 100.0):
    assert previous_bound_growth(2, p) > growth(p)**2
  assert previous_bound_growth(2, 100.0) / growth(100.0)**2 == pytest.approx(
      math.log(100.0))


@pytest.mark.parametrize("p, expected", [(50.0, 0.6509), (200.0, 0.6216),
                                         (500.0, 0.5981)])
def test_lower_bound_ratio_values(p, expected):
  """Test |ξ|_p / (p / ln p) for centered Poisson(1) at large p."""
  assert lower_bound_ratio(1, p) == pytest.approx(expected, rel=1e-3)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_lower_bound_ratio_approaches_limit(d):
  """Test that the witness stays above e^(-d)/2 and moves toward e^(-d)."""
  limit = math.exp(-d)
  ratios = [lower_bound_ratio(d, p) for p in (50.0, 200.0, 500.0)]
  assert ratios[1] > limit / 2
  gaps = [abs(r - limit) for r in ratios]
  assert gaps[0] > gaps[1] > gaps[2]


def test_lower_bound_ratio_degree_range():
  """Test that the witness is limited to degrees 1..4."""
  with pytest.raises(DomainError):
    lower_bound_ratio(5, 10.0)
  with pytest.raises(DomainError):
    lower_bound_ratio(0, 10.0)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("p", [4.0, 50.0, 200.0])
def test_sandwich_holds(d, p):
  """Test floor <= witness <= upper bound for the Poisson product."""
  report = sandwich(d, p)
  assert report.holds
  assert report.witness_floor == pytest.approx(math.exp(-d) / 2)
