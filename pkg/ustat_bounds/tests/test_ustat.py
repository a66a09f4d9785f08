from itertools import combinations
import math

import numpy as np
import pytest

from ustat_bounds.model import center
from ustat_bounds.model import sample_iid
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.kernel import build_kernel
from ustat_bounds.ustat import brute_force_distribution
from ustat_bounds.ustat import brute_force_moment
from ustat_bounds.ustat import CountEvaluator
from ustat_bounds.ustat import evaluate
from ustat_bounds.ustat import evaluate_from_counts
from ustat_bounds.ustat import incremental_update
from ustat_bounds.ustat import kernel_mean
from ustat_bounds.ustat import StreamingUStatistic
from ustat_bounds.utils.error_handling import ArityMismatchError
from ustat_bounds.utils.error_handling import CapExceededError
from ustat_bounds.utils.error_handling import NotReadyError
from ustat_bounds.utils.error_handling import SampleTooShortError

RADEMACHER = DiscreteDistribution.rademacher()
THREE_POINT = DiscreteDistribution(atoms=[(-1.0, 0.2), (0.5, 0.3), (3.0, 0.5)])


def _naive(kernel, sample, n):
  values = [kernel(*(sample[i] for i in t)) for t in combinations(range(n),
                                                                  kernel.arity)]
  return math.fsum(values) / len(values)


def test_evaluate_pair_sum():
  """Test U(4) of the pairwise sum, which equals (n-1)/C(n,2) times the total."""
  result = evaluate(build_kernel("sum", 2), [1.0, 2.0, 3.0, 4.0], 4)
  assert result.value == 5.0
  assert result.tuple_count == 6
  assert result.centered_value is None


def test_evaluate_uses_first_n_points():
  """Test that later sample points are ignored."""
  result = evaluate(build_kernel("identity"), [1.0, 3.0, 100.0], 2)
  assert result.value == 2.0


def test_evaluate_matches_naive_enumeration():
  """Test vectorized chunks against a plain loop over tuples."""
  kernel = build_kernel("sign", 3)
  sample = sample_iid(THREE_POINT, 9, seed=5)
  result = evaluate(kernel, sample, 9, chunk_size=7)
  assert result.value == pytest.approx(_naive(kernel, sample, 9), abs=1e-15)
  assert result.tuple_count == 84


def test_evaluate_centers_with_distribution():
  """Test that the centered value subtracts E Φ under the law."""
  kernel = build_kernel("product", 2)
  dist = DiscreteDistribution(atoms=[(0.0, 0.5), (1.0, 0.5)])
  result = evaluate(kernel, [1.0, 1.0, 0.0], 3, dist=dist)
  assert result.value == pytest.approx(1.0 / 3.0)
  assert result.centered_value == pytest.approx(1.0 / 3.0 - 0.25)


def test_evaluate_centered_kernel():
  """Test that a centered kernel reports its own value as centered."""
  kernel = center(build_kernel("product", 2), THREE_POINT)
  result = evaluate(kernel, [0.5, 3.0, -1.0], 3)
  assert result.centered_value == result.value
  assert kernel_mean(kernel, THREE_POINT) == 0.0


@pytest.mark.parametrize("n, sample, error", [
    (1, [1.0, 2.0], ArityMismatchError),
    (4, [1.0, 2.0, 3.0], SampleTooShortError),
])
def test_evaluate_size_errors(n, sample, error):
  """Test n < d and a sample shorter than n."""
  with pytest.raises(error):
    evaluate(build_kernel("sum", 2), sample, n)


@pytest.mark.parametrize("name, arity", [("identity", 1), ("sum", 2), ("sum", 3),
                                         ("product", 2), ("product", 3),
                                         ("sample_variance", 2), ("sign", 2),
                                         ("sign", 3)])
def test_evaluate_is_permutation_invariant(name, arity):
  """Test that reordering the first n points leaves U(n) unchanged."""
  kernel = build_kernel(name, arity)
  rng = np.random.default_rng(5)
  for seed in range(10):
    sample = sample_iid(THREE_POINT, 12, seed=seed)
    expected = evaluate(kernel, sample, 9, dist=THREE_POINT)
    shuffled = np.concatenate([rng.permutation(sample[:9]), sample[9:]])
    value = evaluate(kernel, shuffled, 9, dist=THREE_POINT)
    assert value.value == pytest.approx(expected.value, rel=1e-10, abs=1e-12)
    assert value.centered_value == pytest.approx(expected.centered_value,
                                                 rel=1e-10,
                                                 abs=1e-12)


def test_evaluate_respects_cap():
  """Test that C(n, d) above the cap raises CapExceededError."""
  with pytest.raises(CapExceededError):
    evaluate(build_kernel("sum", 3), np.zeros(30), 30, cap=100)


def test_streaming_matches_batch_at_every_size():
  """Test the streaming statistic against batch evaluation."""
  kernel = build_kernel("sum", 3)
  sample = sample_iid(THREE_POINT, 8, seed=2)
  state = StreamingUStatistic(kernel)
  with pytest.raises(NotReadyError):
    state.value()
  for n, point in enumerate(sample, start=1):
    assert incremental_update(state, point) is state
    if n >= 3:
      assert state.value().value == pytest.approx(
          evaluate(kernel, sample, n).value, rel=1e-12)
  assert state.count == 8
  assert state.value().tuple_count == 56


def test_streaming_tuple_sum_for_degree_one():
  """Test that degree one accumulates plain sums."""
  state = StreamingUStatistic(build_kernel("identity")).extend([1.0, 2.0, 4.0])
  assert state.tuple_sum == 7.0
  assert state.value().value == pytest.approx(7.0 / 3.0)


def test_count_evaluator_matches_evaluate():
  """Test the multiset formula on seeded samples."""
  kernel = build_kernel("sign", 3)
  evaluator = CountEvaluator(kernel, THREE_POINT)
  samples = [sample_iid(THREE_POINT, 10, seed=s) for s in range(20)]
  counts = np.stack([evaluator.counts_of(s) for s in samples])
  values = evaluator(counts)
  for sample, value in zip(samples, values):
    assert value == pytest.approx(evaluate(kernel, sample, 10).value,
                                  abs=1e-12)


def test_count_evaluator_rejects_mixed_sizes():
  """Test that rows must describe samples of one size."""
  evaluator = CountEvaluator(build_kernel("sum", 2), RADEMACHER)
  with pytest.raises(ValueError):
    evaluator([[1, 2], [2, 2]])
  with pytest.raises(ArityMismatchError):
    evaluator([1, 0])


def test_evaluate_from_counts_product():
  """Test two -1's and three +1's under the product kernel."""
  result = evaluate_from_counts(build_kernel("product", 2), RADEMACHER, [2, 3])
  assert result.n == 5
  assert result.value == pytest.approx(-0.2)


def test_brute_force_distribution_of_sample_mean():
  """Test the exact law of the mean of two signs."""
  law = brute_force_distribution(build_kernel("identity"), RADEMACHER, 2)
  assert [u for u, _ in law] == [-1.0, 0.0, 1.0]
  assert [w for _, w in law] == pytest.approx([0.25, 0.5, 0.25])


def test_brute_force_distribution_sums_to_one():
  """Test that the enumerated law is a probability law."""
  law = brute_force_distribution(build_kernel("sign", 2),
                                 THREE_POINT,
                                 5,
                                 chunk_size=17)
  assert math.fsum(w for _, w in law) == pytest.approx(1.0)


def test_brute_force_moment_of_rademacher_product():
  """Test E|U(2)|^p = 1 for x y with signs."""
  assert brute_force_moment(build_kernel("product", 2), RADEMACHER, 2,
                            5.0) == pytest.approx(1.0)


def test_brute_force_errors():
  """Test n < d and the outcome cap."""
  with pytest.raises(ArityMismatchError):
    brute_force_distribution(build_kernel("sum", 3), RADEMACHER, 2)
  with pytest.raises(CapExceededError):
    brute_force_distribution(build_kernel("sum", 2), RADEMACHER, 12, cap=1000)
