from .frames import (AckFrame, ErrFrame, Frame, FrameError, parse_frame,
                     serialize_frame)
from .session import Session

__all__ = ["Frame", "AckFrame", "ErrFrame", "FrameError", "parse_frame",
           "serialize_frame", "Session"]
