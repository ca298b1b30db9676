"""Story understanding by shadowing a raw autobiographical memory."""

from .domain import DomainLibrary, load_domain
from .engine import Engine, EngineConfig
from .hls import Purpose
from .kernels import BACKEND
from .parser import parse_program

__all__ = ["BACKEND", "DomainLibrary", "Engine", "EngineConfig", "Purpose", "load_domain",
           "parse_program"]
__version__ = "0.1.0"
