"""HTTP service package."""

from .app import create_app, load_artifacts

__all__ = ["create_app", "load_artifacts"]
