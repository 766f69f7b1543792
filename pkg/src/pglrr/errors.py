"""Exception hierarchy shared by every pglrr module."""


class PGLRRError(Exception):
    """Base class for all library errors."""


class DimensionError(PGLRRError, ValueError):
    """Shapes or ambient/subspace dimensions do not line up."""


class DegenerateInput(PGLRRError, ValueError):
    """Input data has too little rank to define the requested subspace."""


class EmptyDataset(PGLRRError, ValueError):
    pass


class InvalidK(PGLRRError, ValueError):
    pass


class LengthMismatch(PGLRRError, ValueError):
    pass


class NumericalFailure(PGLRRError, ArithmeticError):
    """A dense linear-algebra kernel failed (non-convergence, non-SPD system)."""


class MalformedFile(PGLRRError):
    pass


class ManifestError(PGLRRError):
    pass
