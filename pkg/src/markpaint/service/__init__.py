"""HTTP service wrapping the single-image operations with warm model state."""

from .app import create_app

__all__ = ["create_app"]
