import sys


def error_message_detail(error, error_detail: sys):
    _, _, exc_tb = error_detail.exc_info()
    if exc_tb is None:
        return str(error)
    # innermost frame is where the failure happened
    while exc_tb.tb_next is not None:
        exc_tb = exc_tb.tb_next
    file_name = exc_tb.tb_frame.f_code.co_filename
    error_message = "Error occurred python script name [{0}] line number [{1}] error message [{2}]".format(
        file_name, exc_tb.tb_lineno, str(error)
    )

    return error_message


class SeegPretrainException(Exception):
    def __init__(self, error_message, error_detail):
        """
        :param error_message: error message or the exception being wrapped
        """
        super().__init__(error_message)
        self.original = error_message if isinstance(error_message, BaseException) else None
        self.error_message = error_message_detail(
            error_message, error_detail=error_detail
        )

    def __str__(self):
        return self.error_message


class PipelineError(Exception):
    """Base class for every domain error raised by the processing and modeling code."""


class RejectedInputError(PipelineError, ValueError):
    """Input data violates a basic invariant (e.g. non-finite samples)."""


class ParameterError(PipelineError, ValueError):
    """A parameter lies outside its admissible range."""


class EmptyInputError(PipelineError, ValueError):
    """Input too short for the requested operation."""


class EmptyOutputError(PipelineError, ValueError):
    """The operation would produce an empty result."""


class RejectedPlanError(PipelineError, ValueError):
    """A mask plan is out of bounds or a replace source overlaps its target."""


class ShapeError(PipelineError, ValueError):
    pass


class StateError(PipelineError, RuntimeError):
    pass


class LengthError(PipelineError, ValueError):
    pass


class LayerIndexError(PipelineError, IndexError):
    pass


class DivergenceError(PipelineError, RuntimeError):
    """Training produced a non-finite loss."""


class DegenerateTaskError(PipelineError, ValueError):
    """A training split contains a single class."""


class UndefinedMetricError(PipelineError, ValueError):
    pass


class ElectrodeSelectionError(PipelineError, ValueError):
    pass


class DegenerateCloudError(PipelineError, ValueError):
    """An embedding cloud has zero total variance."""


class GenerationError(PipelineError, RuntimeError):
    pass


class ConfigError(PipelineError, ValueError):
    pass


class FormatError(PipelineError, ValueError):
    """A persisted file does not match its declared format."""


class OutputExistsError(PipelineError, FileExistsError):
    pass


class UsageError(PipelineError, ValueError):
    pass
