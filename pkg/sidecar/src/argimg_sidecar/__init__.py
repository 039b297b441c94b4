"""Optional inference service for the argimg wire protocol."""

__version__ = "0.1.0"

from .app import create_app  # noqa: F401
from .config import ServiceConfig  # noqa: F401
