import numpy as np


class ComplexError(ValueError):
    """Invalid simplicial input: repeated vertices, mixed dimensions, unknown simplices."""


class GluingError(ComplexError):
    """A gluing map that is not a valid isometric identification."""


class WeightError(ValueError):
    pass


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, message, smallest_eigenvalue=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class TransportError(ValueError):
    pass


class SingularFormError(np.linalg.LinAlgError):
    pass


class DivergentIntegralError(SingularFormError):
    """Seam integral with a zero or negative mode."""


class IndefiniteOperatorError(np.linalg.LinAlgError):
    def __init__(self, message, smallest_eigenvalue=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class QuadratureError(RuntimeError):
    pass


class DescriptionError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
