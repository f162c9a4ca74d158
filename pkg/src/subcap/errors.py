"""Exception types shared across the package."""


class SubcapError(Exception):
    """Base class for solver errors."""


class SingularityError(SubcapError):
    """Evaluation requested at a kernel singularity (x = 0 or on the source lattice)."""


class DomainError(SubcapError):
    """Arguments outside the mathematical domain of an operation."""


class AnomalyError(SubcapError):
    """Rayleigh-Wood anomaly: k within tolerance of |alpha + q| for a dual lattice point q."""

    def __init__(self, q, dist):
        self.q = q
        self.dist = dist
        super().__init__(f"Rayleigh-Wood anomaly near dual lattice point q={q} (|k - |alpha+q|| = {dist:.3e})")


class AssemblyError(SubcapError):
    """Operator or matrix assembly failed (overlap, singular system, asymmetry...)."""


class ConvergenceError(SubcapError):
    """Iterative solver failed to converge."""


class UnsupportedError(SubcapError):
    """Configuration outside the supported problem classes."""
