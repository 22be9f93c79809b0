"""Exception hierarchy shared by all modules.

The CLI maps ``DomainError`` to exit status 2 and ``ResourceError`` to 3.
"""


class RCError(Exception):
    """Base class for errors raised by this package."""


class DomainError(RCError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ChannelValidationError(DomainError):
    """A channel document or matrix failed validation."""


class SingularChannelError(DomainError):
    """The tilted variance of the pairwise score vanishes (mu2 == 0)."""


class NotApplicableError(DomainError):
    """A bound is requested outside the regime in which it is stated."""


class ResourceError(RCError):
    """An enumeration or convolution would exceed a configured cap."""
