"""Reference client for the vgenv/1 wire protocol.

Talks newline-delimited JSON to an environment server and exposes a
gym-like reset/step surface with numpy observations. The client never
imports the simulator; the protocol is the entire contract.
"""

from vgclient.client import (
    EpisodeDone,
    NoEpisode,
    ProtocolViolation,
    RemoteEnv,
    VersionMismatch,
    connect,
)

__version__ = "0.1.0"

__all__ = [
    "RemoteEnv",
    "connect",
    "ProtocolViolation",
    "VersionMismatch",
    "EpisodeDone",
    "NoEpisode",
    "__version__",
]
