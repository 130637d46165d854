"""HTTP service exposing the estimation library."""

from .app import create_app

__all__ = ["create_app"]
