"""Exception types shared across the package."""


class LiftLabError(Exception):
    """Base class for all package errors."""


class GeometryError(LiftLabError):
    """Invalid polygon, rectangle, or body-family parameter."""


class FlowShapeError(LiftLabError):
    """Invalid flow profile or undefined flow-shape operation."""


class MeshError(LiftLabError):
    """Mesh generation or validation failure."""


class SolverError(LiftLabError):
    """Nonlinear or linear solve failure."""


class NewtonDivergenceError(SolverError):
    """Newton iteration failed to converge after continuation was exhausted."""


class LiftEvaluationError(LiftLabError):
    """Lift functional requested on an unsuitable field or mesh."""


class SearchError(LiftLabError):
    """Root search or optimization cannot proceed."""


class NoSignChangeError(SearchError):
    """Bolzano search endpoints do not bracket a zero."""


class ConfigError(LiftLabError):
    """Configuration file failed validation; message lists offending keys."""
