"""Exception hierarchy shared by all charfix modules."""


class CharfixError(Exception):
    """Base class for every error raised by charfix."""


class LengthMismatch(CharfixError, ValueError):
    """Hamming distance requested on strings of different lengths."""


class IndexOutOfRange(CharfixError, IndexError):
    pass


class TemplateError(CharfixError, ValueError):
    pass


class BackendUnavailable(CharfixError):
    """The language-model backend could not be reached or answered badly."""


class UnknownToken(CharfixError, KeyError):
    pass


class NoHypothesis(CharfixError):
    """Every hypothesis was discarded before reaching the end of the input."""


class ParseError(CharfixError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LineCountMismatch(CharfixError, ValueError):
    pass
