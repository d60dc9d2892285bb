"""FastAPI service wrapping the simulation core: batch runs over REST and a
live teleoperation loop over a websocket."""

from .app import create_app

__all__ = ["create_app"]
