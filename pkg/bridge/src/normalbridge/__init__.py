"""Reference bridge adapter: serves a differentiable normal estimator over
a length-prefixed binary frame protocol on stdin/stdout."""

__version__ = "0.1.0"

from .model import ModelSession, TinyNormalNet
from .server import serve

__all__ = ["ModelSession", "TinyNormalNet", "serve"]
