"""Exception hierarchy.

ValidationError covers bad shapes, names, schemas and plans; the CLI maps it
to exit code 2. NumericalError covers singularities, definiteness failures
and non-convergence; the CLI maps it to exit code 3.
"""
from __future__ import annotations


class QznetError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QznetError):
    pass


class NumericalError(QznetError):
    pass


class SPDError(NumericalError):
    """A matrix that must be symmetric positive definite is not."""


class PoleHitError(NumericalError):
    """Evaluation requested exactly on a pole of the rational function."""


class SingularSampleError(NumericalError):
    """A per-frequency linear solve was singular at specific samples."""

    def __init__(self, message: str, sample_indices=()):
        self.sample_indices = tuple(int(i) for i in sample_indices)
        if self.sample_indices:
            message = f"{message} (sample indices {list(self.sample_indices)})"
        super().__init__(message)


class ConditioningError(NumericalError):
    """A least-squares or eigenvalue problem was too ill-conditioned to trust."""


class LosslessProjectionError(NumericalError):
    """The fitted model could not be projected onto the lossless form."""


class NonphysicalAdmittanceError(NumericalError):
    """Re(Y) <= 0 where a passive environment requires Re(Y) > 0."""


class IdentificationError(NumericalError):
    """Eigenstate identification by overlap was ambiguous."""


class DegeneracyError(NumericalError):
    """A perturbative formula hit an exact zero detuning."""
