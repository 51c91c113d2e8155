"""Exception hierarchy shared across the bench.

CLI exit-code contract: ConfigError and its subclasses map to exit
status 1 (configuration / validation problems); every other BenchError,
and plain OSError, maps to exit status 2 (runtime data or metric
problems).
"""


class BenchError(Exception):
    """Base class for every failure raised by the bench."""

    exit_code = 2


class ConfigError(BenchError):
    """Bad configuration value or invalid parameter combination."""

    exit_code = 1


class ValidationError(ConfigError):
    """Domain object rejected at construction; carries the violation list."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class EnrollmentError(BenchError):
    """Enrollment material is unusable (too few samples)."""


class StreamError(BenchError):
    """A session query stream cannot be built as configured."""


class MetricError(BenchError):
    """A performance measure cannot be computed from the given scores."""


class PartitionError(BenchError):
    """A sessionless sample collection cannot be split as requested."""


class FormatError(BenchError):
    """A delimited-text file does not match the expected layout."""
