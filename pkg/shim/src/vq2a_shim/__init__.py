"""Reference HTTP service exposing QG/QA models over the vq2a wire protocol."""

from .app import create_app
from .engines import ModelLoadError, RecordedEngine, TransformersEngine

__version__ = "0.1.0"

__all__ = ["ModelLoadError", "RecordedEngine", "TransformersEngine", "create_app"]
