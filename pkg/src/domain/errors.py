from typing import Optional


class FrapError(Exception):
    """
    Base class for every error raised by the planning/learning engine.
    """


class WrongAccessMode(FrapError):
    pass


class TerminalQuery(FrapError):
    pass


class EpisodeEnded(FrapError):
    pass


class MdpParseError(FrapError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MdpValidationError(FrapError):
    pass


class InvalidLayout(FrapError):
    pass


class UnsupportedInit(FrapError):
    pass


class NotOnFrontier(FrapError):
    pass


class NoVisitedChildren(FrapError):
    pass


class MissingHeuristicEntry(FrapError):
    pass


class MissingChild(FrapError):
    pass


class DistributionRequired(FrapError):
    pass


class MissingReturns(FrapError):
    pass


class UnvisitedPair(FrapError):
    def __init__(self, state: int, action: int):
        self.state = state
        self.action = action
        super().__init__(f"pair (s={state}, a={action}) has never been observed")


class ConfigError(FrapError):
    pass


class UnknownPreset(FrapError):
    pass


class NonConvergent(FrapError):
    pass


class MdpNotFound(FrapError):
    pass
