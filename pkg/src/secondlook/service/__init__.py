"""Session-oriented HTTP API: annotate, recommend, adjudicate."""

from .app import create_app
from .store import EventLog, SessionState, replay

__all__ = ["create_app", "EventLog", "SessionState", "replay"]
