"""Exception types shared across the package."""


class SatsharpError(Exception):
    """Base class for all package-specific errors."""


class InsufficientStructureError(SatsharpError):
    """Image has no usable gradients (e.g. constant), so no kernel can be estimated."""


class InvalidKernelError(SatsharpError):
    """A kernel solve produced no positive mass to normalize."""


class DivergenceError(SatsharpError):
    """An iterative solve produced non-finite intermediates."""
