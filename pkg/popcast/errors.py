"""Exceptions and warnings raised by popcast.

Every exception carries the exit code the command line returns for it.
"""


class PopcastError(Exception):
    """Base class for all popcast errors."""
    exit_code: int = 3


class UsageError(PopcastError):
    """Wrong command-line usage."""
    exit_code = 1


class ConfigError(PopcastError, ValueError):
    """A configuration value violates the `SystemConfig` invariants or can't be parsed."""
    exit_code = 2


class OverCapacity(PopcastError):
    """More sessions than the capacity can carry at the minimum bandwidth."""

    def __init__(self, sessions: int, beta_min_kbps: float, capacity_kbps: float):
        self.sessions = sessions
        self.beta_min_kbps = beta_min_kbps
        self.capacity_kbps = capacity_kbps
        super().__init__(
            f"over capacity: {sessions} sessions x {beta_min_kbps:g} kbps > {capacity_kbps:g} kbps"
        )


class DuplicateSessionId(PopcastError, ValueError):
    """Two snapshots share the same session id."""

    def __init__(self, session_id: str):
        self.session_id = session_id
        super().__init__(f"duplicate session id '{session_id}'")


class RankOutOfRange(PopcastError, IndexError):
    """A rank outside of the valid range was requested."""


class BandwidthOutOfRange(PopcastError, ValueError):
    """A bandwidth outside of [beta_min, beta_max] was given."""


class InvalidSpec(PopcastError, ValueError):
    """A scenario description that can't be generated."""


class MalformedTrace(PopcastError, ValueError):
    """An event trace violating the session lifecycle or the timestamp order."""


class DataError(PopcastError, ValueError):
    """Malformed snapshot or trace input."""


class EmptyPopulationWarning(UserWarning):
    """Sessions are active, but nobody watches: all sessions are treated as equally popular."""


class LastRankCapWarning(UserWarning):
    """Rounding made the least popular session reach the cap; it was clamped to beta_max."""
