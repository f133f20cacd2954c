"""Participatory land-use planning simulator.

Synthetic communities of plots and residents, rule-based baseline planners,
an agent-driven discussion pipeline, four coverage/need metrics, and a live
sandbox HTTP API.
"""

__version__ = "0.1.0"

from .errors import AgoraError

__all__ = ["AgoraError", "__version__"]
