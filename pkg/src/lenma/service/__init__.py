"""HTTP front end for a shared mining session."""

from .app import create_app

__all__ = ["create_app"]
