"""Seeded simulator of GHZ-triplet quantum key distribution.

Alice keeps particles P1 and P3 of each GHZ triplet and sends P2 to Bob;
only Bob announces his basis, and Alice infers his outcome from the GHZ
parity law, so no round is lost to basis mismatch.
"""
from ._kernel import BACKEND
from .ghzcorr import derive_table, verify_decompositions
from .postproc import PostprocConfig
from .protocol import SessionConfig, run_session
from .threat import ChannelConfig, EntangleAncilla, InterceptResend, NoEve, eve_information

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ChannelConfig", "EntangleAncilla", "InterceptResend", "NoEve", "PostprocConfig",
    "SessionConfig", "derive_table", "eve_information", "run_session", "verify_decompositions",
]
