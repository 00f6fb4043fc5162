"""Exception types shared across the toolkit.

Each class corresponds to one failure mode of the public API; callers that
need finer context should catch the specific class, everything derives from
:class:`DepthbenchError`.
"""


class DepthbenchError(Exception):
    pass


class InvalidConfig(DepthbenchError):
    """An evaluation-config field violates its constraint."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class InvalidRaster(DepthbenchError):
    pass


# --- file formats ---------------------------------------------------------

class BadMagic(DepthbenchError):
    pass


class TruncatedPayload(DepthbenchError):
    pass


class ZeroScale(DepthbenchError):
    pass


class NotPng16(DepthbenchError):
    pass


class DecodeError(DepthbenchError):
    pass


# --- manifests and submissions --------------------------------------------

class ParseError(DepthbenchError):
    pass


class DuplicateFrameId(DepthbenchError):
    pass


class MissingField(DepthbenchError):
    pass


class MissingFrame(DepthbenchError):
    def __init__(self, frame_id: str):
        super().__init__(f"submission has no prediction for frame {frame_id!r}")
        self.frame_id = frame_id


class BadMeta(DepthbenchError):
    pass


class BadArchive(DepthbenchError):
    pass


# --- alignment and metrics -------------------------------------------------

class TooFewPixels(DepthbenchError):
    pass


class NonPositivePrediction(DepthbenchError):
    pass


class AllInvalid(DepthbenchError):
    pass


class EmptyMask(DepthbenchError):
    pass


class InvalidTransform(DepthbenchError):
    pass


# --- challenge service ------------------------------------------------------

class UnknownPhase(DepthbenchError):
    pass


class PhaseClosed(DepthbenchError):
    pass


class RateLimited(DepthbenchError):
    pass


class NotFound(DepthbenchError):
    pass


class Forbidden(DepthbenchError):
    pass
