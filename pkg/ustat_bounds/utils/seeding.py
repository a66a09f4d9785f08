"""Counter based seeding: every replication owns a seed derived from its index."""

import numpy as np

MAX_SEED: int = 2**64 - 1

SeedLike = int | np.random.SeedSequence


def validate_seed(seed: int) -> int:
  """Checks that `seed` is an unsigned 64-bit integer."""
  if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
    raise TypeError(f"Seed must be an integer, got {type(seed).__name__}.")
  if not 0 <= int(seed) <= MAX_SEED:
    raise ValueError(f"Seed must lie in [0, 2**64 - 1], got {seed}.")
  return int(seed)


def replication_seed(master_seed: int, n: int,
                     replication: int) -> np.random.SeedSequence:
  """Hashes (master_seed, n, replication) into an independent SeedSequence.

    The result depends only on its three arguments, so any subset of
    replications can be recomputed in any order on any worker.
    """
  return np.random.SeedSequence(entropy=validate_seed(master_seed),
                                spawn_key=(int(n), int(replication)))


def make_generator(seed: SeedLike) -> np.random.Generator:
  """Builds a PCG64 generator from an integer seed or a SeedSequence."""
  if not isinstance(seed, np.random.SeedSequence):
    seed = np.random.SeedSequence(entropy=validate_seed(seed))
  return np.random.Generator(np.random.PCG64(seed))
