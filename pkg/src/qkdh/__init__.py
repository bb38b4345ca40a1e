"""QKD-based key establishment, hybrid encryption and security harnesses."""

from .protocol import SessionParams, SessionOutcome, run_session

__version__ = "0.1.0"

__all__ = ["SessionParams", "SessionOutcome", "run_session", "__version__"]
