"""Exception hierarchy shared by every module of the package."""


class PwclraError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(PwclraError, ValueError):
    """Invalid system, scenario or design configuration."""


class DegenerateGeometryError(PwclraError, ValueError):
    """Two points coincide (zero or negative propagation distance)."""


class ProtocolError(PwclraError, ValueError):
    """Observations do not match the training design they are processed with."""


class InfeasibleRankError(PwclraError, ValueError):
    """A requested subspace rank violates a feasibility constraint."""


class RankEstimationError(PwclraError, ValueError):
    """Not enough snapshots to run model-order selection."""


class AssemblyError(PwclraError, ValueError):
    """Piece-wise estimates cannot be assembled into a full channel."""


class UndefinedMetricError(PwclraError, ValueError):
    """The metric is undefined for the given inputs (e.g. zero-energy truth)."""


class CalibrationError(PwclraError, ValueError):
    """Transmit power cannot be calibrated (zero channel energy)."""


class OracleInfeasibleError(PwclraError, ValueError):
    """The known-channel regressor of the oracle baseline is rank deficient."""
