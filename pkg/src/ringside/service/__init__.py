"""HTTP service exposing the pipeline; the CLI is a client of this app."""

from .app import app, create_app

__all__ = ["app", "create_app"]
