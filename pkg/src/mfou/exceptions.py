"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical routine produced an invalid result (conditioning, divergence)."""


class DegenerateSampleError(NumericalError):
    """An estimator was handed a sample with no usable variation."""
