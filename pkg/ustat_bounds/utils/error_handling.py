from typing import Optional


class UStatBoundsError(Exception):
  """Base exception for all ustat_bounds errors."""

  default_message = "An error occurred while computing U-statistic bounds."

  def __init__(self, message: Optional[str] = None):
    """Initializes a UStatBoundsError with a default or custom message."""
    super().__init__(message or self.default_message)


class ValidationFailure(UStatBoundsError):
  """Raised when user supplied inputs are rejected before any computation."""

  default_message = "The supplied inputs are invalid."


class ConfigError(ValidationFailure):
  """Raised when a run configuration cannot be parsed or validated."""

  default_message = "The run configuration is invalid."


class ParamError(ValidationFailure):
  """Raised when the parameters of a tail or moment family are invalid."""

  default_message = "Invalid family parameters."


class ComputationError(UStatBoundsError):
  """Represents a failure while computing an exact or numerical quantity."""

  default_message = "The computation could not be completed."


class CapExceededError(ComputationError):
  """Raised when an exhaustive enumeration would exceed the configured cap."""

  default_message = "The enumeration exceeds the configured cap."

  def __init__(
      self,
      requested: Optional[int] = None,
      cap: Optional[int] = None,
      message: Optional[str] = None,
  ):
    """Initializes a CapExceededError.

        Args:
            requested (Optional[int]): Number of terms the enumeration needs.
            cap (Optional[int]): Largest number of terms allowed.
            message (Optional[str]): A descriptive error message.
        """
    super().__init__(message or self.default_message)
    self.requested = requested
    self.cap = cap

  def __str__(self) -> str:
    """Returns the message with the requested and allowed sizes, if known."""
    details = self.args[0]
    if self.requested is not None:
      details += f"\nRequested terms: {self.requested}"
    if self.cap is not None:
      details += f"\nCap: {self.cap}"
    return details


class NonSymmetricKernelError(ComputationError):
  """Raised when a kernel changes value under a permutation of its arguments."""

  default_message = "The kernel is not symmetric on the distribution support."


class DegenerateKernelError(ComputationError):
  """Raised when a kernel has (numerically) zero variance."""

  default_message = "The kernel has zero variance under the distribution."


class TrivialKernelError(ComputationError):
  """Raised when every Hoeffding projection of a kernel vanishes."""

  default_message = "All Hoeffding projections have zero variance."


class ArityMismatchError(ComputationError):
  """Raised when the sample size is incompatible with the kernel arity."""

  default_message = "The sample size is smaller than the kernel arity."


class SampleTooShortError(ComputationError):
  """Raised when fewer sample points are available than requested."""

  default_message = "The sample has fewer points than requested."


class NotReadyError(ComputationError):
  """Raised when a streaming statistic is read before it has enough points."""

  default_message = "Not enough points have been fed to the statistic."


class DomainError(ComputationError):
  """Raised when a function is evaluated outside its domain."""

  default_message = "The argument is outside the function domain."


class DivergentNormError(ComputationError):
  """Raised when a Grand Lebesgue norm keeps growing at the end of the grid."""

  default_message = "The Grand Lebesgue norm diverges."


class UnboundedConjugateError(ComputationError):
  """Raised when a Young-Fenchel objective grows without bound."""

  default_message = "The Young-Fenchel transform is unbounded at this point."

  def __init__(self,
               message: Optional[str] = None,
               lower_bound: Optional[float] = None):
    """Initializes an UnboundedConjugateError.

        Args:
            message (Optional[str]): A descriptive error message.
            lower_bound (Optional[float]): Largest objective value reached
                before giving up; the transform is at least this large.
        """
    super().__init__(message)
    self.lower_bound = lower_bound


class QuadratureFailureError(ComputationError):
  """Raised when a tail decays too slowly to integrate the requested moment."""

  default_message = "The tail decays too slowly for the requested moment."


class DegenerateVarianceError(ComputationError):
  """Raised when the variance of a U-statistic is not positive."""

  default_message = "The U-statistic has zero variance."


class BoundaryMaximumWarning(UserWarning):
  """Issued when a supremum is attained at the right end of its search grid."""


class SupportMismatchError(ComputationError):
  """Raised when sample values do not lie on the distribution support."""

  default_message = "Sample contains values outside the distribution support."
