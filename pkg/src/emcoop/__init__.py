"""Cooperation benchmark for embodied multi-agent episodes."""

from .kernel import EpisodeRecord, load_trace, save_trace
from .harness import RunConfig, run

__version__ = "0.1.0"

__all__ = ["EpisodeRecord", "RunConfig", "load_trace", "run", "save_trace", "__version__"]
