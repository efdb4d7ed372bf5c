"""Exception hierarchy shared by the engine modules."""


class EngineError(Exception):
    """Base class for every error raised by the verification engine."""


class OffManifoldError(EngineError):
    pass


class NonTangentError(EngineError):
    pass


class ChartBoundaryError(EngineError):
    pass


class EvaluationError(EngineError):
    """A user or catalog callback produced NaN/inf or raised."""


class DegenerateImmersionError(EngineError):
    pass


class FrameContinuityError(EngineError):
    pass


class KahlerError(EngineError):
    """The supplied J is not an orthogonal complex structure at the sample."""


class NotMinimalError(EngineError):
    pass


class TargetShapeError(EngineError):
    pass


class ConfigError(EngineError):
    """Invalid run configuration; message carries the section/field and line."""
