import math

import numpy as np
import pytest
from scipy.stats import poisson

from ustat_bounds.model import center
from ustat_bounds.model import centered_poisson_log_moment
from ustat_bounds.model import centered_poisson_lp_norm
from ustat_bounds.model import kernel_lp_norm
from ustat_bounds.model import poisson_norm_growth
from ustat_bounds.model import sample_iid
from ustat_bounds.model import support_weights
from ustat_bounds.model import truncated_centered_poisson
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.kernel import build_kernel
from ustat_bounds.models.kernel import Kernel
from ustat_bounds.utils.error_handling import CapExceededError
from ustat_bounds.utils.error_handling import DegenerateKernelError
from ustat_bounds.utils.error_handling import DomainError
from ustat_bounds.utils.error_handling import NonSymmetricKernelError

BERNOULLI = DiscreteDistribution(atoms=[(0.0, 0.7), (1.0, 0.3)])


def test_support_weights_sum_to_one():
  """Test the product law over support^d."""
  weights = support_weights(BERNOULLI, 3)
  assert weights.shape == (2, 2, 2)
  assert weights.sum() == pytest.approx(1.0)


def test_center_records_mean_and_variance():
  """Test centering of the product kernel under a Bernoulli law."""
  centered = center(build_kernel("product", 2), BERNOULLI)
  assert centered.mean == pytest.approx(0.09)
  assert centered.variance == pytest.approx(0.09 - 0.09**2)
  assert centered(1.0, 1.0) == pytest.approx(0.91)
  assert centered.distribution == BERNOULLI


def test_center_is_idempotent():
  """Test that centering a centered kernel restarts from its base."""
  once = center(build_kernel("sum", 2), BERNOULLI)
  twice = center(once, BERNOULLI)
  assert twice.mean == pytest.approx(once.mean)
  assert twice(0.0, 1.0) == pytest.approx(once(0.0, 1.0))


def test_center_rejects_constant_kernel():
  """Test that a zero variance kernel raises DegenerateKernelError."""
  constant = Kernel(name="constant", arity=2, func=lambda x, y: 0 * x + 3.0)
  with pytest.raises(DegenerateKernelError):
    center(constant, BERNOULLI)


def test_kernel_lp_norm_of_rademacher_product():
  """Test that |x y| = 1 gives norm 1 at every order."""
  kernel = center(build_kernel("product", 3), DiscreteDistribution.rademacher())
  for p in (1.0, 2.0, 7.5):
    assert kernel_lp_norm(kernel, DiscreteDistribution.rademacher(),
                          p) == pytest.approx(1.0)


def test_kernel_lp_norm_domain_and_cap():
  """Test the order check, the enumeration cap and strict symmetry."""
  dist = DiscreteDistribution.rademacher()
  with pytest.raises(DomainError):
    kernel_lp_norm(build_kernel("sum", 2), dist, 0.5)
  with pytest.raises(CapExceededError):
    kernel_lp_norm(build_kernel("sum", 5), dist, 2.0, cap=16)
  difference = Kernel(name="difference", arity=2, func=lambda x, y: x - y)
  with pytest.raises(NonSymmetricKernelError):
    kernel_lp_norm(difference, dist, 2.0, strict=True)


def test_truncated_centered_poisson_is_centered():
  """Test that the truncated law keeps mean 0 and variance 1."""
  dist = truncated_centered_poisson(10.0)
  assert dist.points[0] == -1.0
  assert dist.mean() == pytest.approx(0.0, abs=1e-12)
  assert dist.variance() == pytest.approx(1.0, rel=1e-12)
  assert dist.lp_norm(10.0) == pytest.approx(centered_poisson_lp_norm(10.0),
                                             rel=1e-12)


def test_truncated_centered_poisson_rejects_bad_tolerance():
  """Test that a nonpositive tolerance is refused."""
  with pytest.raises(ValueError):
    truncated_centered_poisson(4.0, tail_tol=0.0)


@pytest.mark.parametrize("p_max, tail_tol", [(8.0, 1e-8), (20.0, 1e-10),
                                           (40.0, 1e-6)])
def test_truncation_keeps_the_top_moment(p_max, tail_tol):
  """Test that atoms past the cutoff move E|ξ|^p_max by < 10 tail_tol."""
  dist = truncated_centered_poisson(p_max, tail_tol=tail_tol)
  truncated = dist.lp_norm(p_max)**p_max
  k = np.arange(dist.size + 200)
  extended = math.fsum(poisson.pmf(k, 1.0) * np.abs(k - 1.0)**p_max)
  assert abs(truncated - extended) < 10 * tail_tol * extended


@pytest.mark.parametrize("p, expected", [
    (1.0, 2.0 / math.e),
    (2.0, 1.0),
    (3.0, (1.0 + 2.0 / math.e)**(1.0 / 3.0)),
    (4.0, 4.0**0.25),
])
def test_centered_poisson_low_order_norms(p, expected):
  """Test closed forms of E|ξ|, E ξ^2, E|ξ|^3 and E ξ^4."""
  assert centered_poisson_lp_norm(p) == pytest.approx(expected, rel=1e-12)


def test_centered_poisson_large_orders():
  """Test the log-space series at orders where probabilities underflow."""
  assert centered_poisson_lp_norm(20.0) == pytest.approx(4.324, rel=1e-3)
  assert centered_poisson_lp_norm(200.0) == pytest.approx(23.464, rel=1e-3)
  assert math.isfinite(centered_poisson_log_moment(500.0))


def test_poisson_norm_growth_at_two():
  """Test the ratio of |ξ|_2 to p / (e ln p) at p = 2."""
  assert poisson_norm_growth(2.0) == pytest.approx(math.e * math.log(2.0) / 2)


def test_poisson_norm_growth_decreases_toward_one():
  """Test that the exact norm approaches its asymptotic growth from above."""
  values = [poisson_norm_growth(p) for p in (50.0, 200.0, 500.0)]
  assert values[0] > values[1] > values[2] > 1.0


def test_sample_iid_is_reproducible():
  """Test that samples depend only on the seed."""
  dist = DiscreteDistribution(atoms=[(-1.0, 0.2), (0.5, 0.3), (3.0, 0.5)])
  first = sample_iid(dist, 50, seed=11)
  np.testing.assert_array_equal(first, sample_iid(dist, 50, seed=11))
  assert not np.array_equal(first, sample_iid(dist, 50, seed=12))
  assert set(first.tolist()) <= {-1.0, 0.5, 3.0}


def test_sample_iid_frequencies():
  """Test that atom frequencies match the law."""
  sample = sample_iid(BERNOULLI, 20_000, seed=3)
  assert sample.mean() == pytest.approx(0.3, abs=0.015)


def test_sample_iid_rejects_empty_samples():
  """Test that n must be positive."""
  with pytest.raises(ValueError):
    sample_iid(BERNOULLI, 0, seed=0)
