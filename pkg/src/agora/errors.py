"""Shared exception hierarchy. Module-specific errors subclass AgoraError."""


class AgoraError(Exception):
    """Base class for all domain errors raised by this package."""


class GeometryError(AgoraError):
    """Degenerate polygon or invalid geometric argument."""


class ScenarioError(AgoraError):
    """Scenario violates a structural invariant or is infeasible."""


class PlanStructureError(AgoraError):
    """Plan references plot ids that do not exist in the scenario."""


class PopulationError(AgoraError):
    """Population synthesis or need elicitation failed."""


class MetricsError(AgoraError):
    """Metric preconditions violated (empty population, missing needs...)."""


class PlannerError(AgoraError):
    """Baseline planner cannot satisfy the scenario constraints."""


class ConfigError(AgoraError):
    """Invalid run or CLI configuration."""
