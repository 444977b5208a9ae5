"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's precondition."""


class ParseError(ValueError):
    """A bitstream could not be parsed.

    Carries the byte offset at which parsing failed and, when the stream
    ended early, the name of the marker that was expected next.
    """

    def __init__(self, message, offset=None, missing_marker=None):
        detail = message
        if missing_marker is not None:
            detail += f" (missing marker {missing_marker})"
        if offset is not None:
            detail += f" at byte offset {offset}"
        super().__init__(detail)
        self.offset = offset
        self.missing_marker = missing_marker


class UnsupportedFormatError(ValueError):
    """The stream is valid but uses a feature outside the baseline subset."""


class InsufficientDataError(ValueError):
    """Too few effective pixels for the requested estimate."""


class UnobservableBlurError(ValueError):
    """Region has no gradient energy, so blur width cannot be measured."""


class EmptySelectionError(ValueError):
    """Segmentation produced no pixels after post-processing."""


class ExternalUnavailableError(RuntimeError):
    """External segmenter could not be reached within its deadline."""


class ExternalProtocolError(RuntimeError):
    """External segmenter responded outside its wire contract."""


class ExportPolicyError(ValueError):
    """Export settings would re-degrade the output; pass force to override."""
