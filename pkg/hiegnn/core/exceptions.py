"""
Exception hierarchy and global exception handlers.

Every error raised by the package derives from HieGnnError and carries the
exit code the command line reports for it.
"""

from typing import Any, Optional

from fastapi import Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from sqlalchemy.exc import SQLAlchemyError
import logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3


class HieGnnError(Exception):
    """Base class for all package errors."""

    exit_code: int = EXIT_USAGE


class ConfigError(HieGnnError):
    """Invalid configuration file, flag or setting."""

    exit_code = EXIT_USAGE


class DataError(HieGnnError):
    """Problem with input data, caches or checkpoints."""

    exit_code = EXIT_DATA


class CorpusFormatError(DataError):
    """Metadata or corpus file does not follow the two-file layout."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class CheckpointError(DataError):
    """Checkpoint is missing, malformed or incompatible with the model."""


class InvalidInputError(DataError, ValueError):
    """An operation received arguments outside its domain."""


class DimensionError(DataError, ValueError):
    """Tensor or graph shapes do not agree."""


class TrainingError(HieGnnError):
    """Training could not complete."""

    exit_code = EXIT_TRAINING


class TrainingDivergedError(TrainingError):
    """Loss became non-finite. Carries the report collected so far."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """
    Handle request validation errors.
    Returns a clean JSON response with validation error details.
    """
    errors = [
        {
            "field": " -> ".join(str(x) for x in error["loc"]),
            "message": error["msg"],
            "type": error["type"],
        }
        for error in exc.errors()
    ]

    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content={"detail": "Validation error", "errors": errors},
    )


async def hiegnn_exception_handler(request: Request, exc: HieGnnError):
    """Domain errors are the caller's problem: report them as 400."""
    logger.warning(f"{type(exc).__name__} on {request.url.path}: {exc}")

    return JSONResponse(
        status_code=status.HTTP_400_BAD_REQUEST,
        content={"detail": str(exc), "type": type(exc).__name__},
    )


async def database_exception_handler(request: Request, exc: SQLAlchemyError):
    """
    Handle run-registry database errors without exposing internal details.
    """
    logger.error(f"Database error: {exc}")

    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content={"detail": "A database error occurred. Please try again later."},
    )


async def general_exception_handler(request: Request, exc: Exception):
    """
    Catch-all handler for unexpected exceptions.
    """
    logger.error(f"Unexpected error: {exc}", exc_info=True)

    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content={"detail": "An unexpected error occurred. Please try again later."},
    )
