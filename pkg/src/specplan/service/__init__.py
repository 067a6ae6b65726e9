"""Session service: FastAPI app, schemas, and session lifecycle."""

from specplan.service.app import app, create_app
from specplan.service.sessions import Session, SessionManager, SessionStatus

__all__ = ["Session", "SessionManager", "SessionStatus", "app", "create_app"]
