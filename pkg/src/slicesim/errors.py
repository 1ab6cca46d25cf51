"""Exception hierarchy shared by all simulator subsystems."""


class SliceSimError(Exception):
    """Base class for every simulator-raised error."""


class ScenarioError(SliceSimError):
    """Malformed scenario detected during the validate phase, before any run."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class SchedulingError(SliceSimError):
    """Event scheduled into the past; always a configuration bug, never recoverable."""


class SimulationError(SliceSimError):
    """Event-handler failure, re-raised with event context attached."""


class OverlapError(SliceSimError):
    """Two grid segments claim the same (block, subframe) cell."""


class BoundsError(SliceSimError):
    """Segment spec outside the grid's block or period bounds."""


class ConflictError(SliceSimError):
    """Requested cell already owned by another slice."""


class CapacityError(SliceSimError):
    """Not enough free cells in the segment to satisfy a carve request."""


class UnknownSliceError(SliceSimError):
    """Operation on a slice that owns no subset (or is otherwise unregistered)."""


class NoPathError(SliceSimError):
    """Flow's service tag matches no CN slice paired to its RAN slice."""


class DigestMismatchError(SliceSimError):
    """Container payload digest check failed on unpack."""


class LinkDownError(SliceSimError):
    """Radio link between offload peers lost while a message was in flight."""
