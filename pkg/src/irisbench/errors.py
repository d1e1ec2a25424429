"""Exception hierarchy shared by every pipeline stage."""


class IrisError(Exception):
    """Base class. ``stage`` is filled in by the pipeline drivers."""

    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class ParameterError(IrisError, ValueError):
    pass


class EmptyInputError(IrisError, ValueError):
    pass


class DegenerateInputError(IrisError, ValueError):
    pass


class InvalidRunError(IrisError, ValueError):
    pass


class ShapeError(IrisError, ValueError):
    pass


class NoPupilIndicatorError(IrisError):
    pass


class InvalidSeedError(IrisError, ValueError):
    pass


class SegmentationError(IrisError):
    pass


class IncomparableCodesError(IrisError):
    pass


class CorpusError(IrisError):
    pass


def annotate(err, stage):
    """Tag ``err`` with the pipeline stage it came from, keeping the innermost tag."""
    if err.stage is None:
        err.stage = stage
    return err
