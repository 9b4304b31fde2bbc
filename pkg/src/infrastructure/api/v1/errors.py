import logging

from fastapi import HTTPException, status

from src.domain.errors import ConfigError, FrapError, MdpNotFound, MdpParseError, MdpValidationError, UnknownPreset

logger = logging.getLogger(__name__)

UNPROCESSABLE = (UnknownPreset, ConfigError, MdpParseError, MdpValidationError)


def to_http_exception(error: Exception) -> HTTPException:
    """Maps engine errors onto HTTP statuses; the detail keeps the `<ErrorClass>: <message>` form of the CLI."""
    detail = f"{type(error).__name__}: {error}"
    if isinstance(error, MdpNotFound):
        return HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=detail)
    if isinstance(error, UNPROCESSABLE):
        return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=detail)
    if isinstance(error, FrapError):
        logger.warning("Request failed: %s", detail)
    else:
        logger.exception("Unexpected error while serving request")
    return HTTPException(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        detail=f"An unexpected error occurred: {detail}",
    )
