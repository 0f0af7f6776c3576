"""Custom exceptions for mutsched."""


class MutschedError(Exception):
    """Base exception for all mutsched errors."""
    pass


class ModelError(MutschedError):
    """Raised when a model file cannot be parsed."""
    pass


class ModelValidationError(ModelError):
    """Raised when a parsed model violates the task-model invariants."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(v.message for v in report.violations))


class ConfigurationError(MutschedError):
    """Raised when configuration is invalid or missing."""
    pass


class SimulationError(MutschedError):
    """Raised when a model cannot be simulated."""
    pass


class TraceError(MutschedError):
    """Raised when a trace is malformed."""
    pass


class MutationError(MutschedError):
    """Raised when a mutation descriptor cannot be applied."""
    pass


class EmptyOperatorSetError(MutationError):
    """Raised when no mutation operator is enabled."""
    pass


class AnalysisError(MutschedError):
    """Raised when traces or reports cannot be compared or scored."""
    pass


class StorageError(MutschedError):
    """Raised when file operations fail."""
    pass
