__version__ = "0.1.0"
"""
U-statistic Bounds Package

Exact Hoeffding decompositions of U-statistics, explicit moment bounds with
their constants, Grand Lebesgue Space norms and tail envelopes, and a seeded
Monte Carlo harness that checks the bounds against simulated data.
"""

from ustat_bounds.analysis import UStatisticAnalysis
from ustat_bounds.models.distribution import DiscreteDistribution
from ustat_bounds.models.gls import PsiFunction
from ustat_bounds.models.gls import TailFunction
from ustat_bounds.models.kernel import build_kernel
from ustat_bounds.models.kernel import Kernel
from ustat_bounds.models.simulation import SimulationPlan

__all__ = [
    "UStatisticAnalysis",
    "DiscreteDistribution",
    "Kernel",
    "PsiFunction",
    "SimulationPlan",
    "TailFunction",
    "build_kernel",
]
