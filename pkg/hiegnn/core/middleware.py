"""
HTTP middleware for the inference service.
"""

import logging
import time

from fastapi import Request
from starlette.middleware.base import BaseHTTPMiddleware

logger = logging.getLogger(__name__)


class RequestTimingMiddleware(BaseHTTPMiddleware):
    """
    Log method, path, status and processing time of every request and
    return the time in an `X-Process-Time` header (seconds).
    """

    async def dispatch(self, request: Request, call_next):
        started = time.perf_counter()
        client_host = request.client.host if request.client else "unknown"

        response = await call_next(request)

        elapsed = time.perf_counter() - started
        logger.info(
            f"{request.method} {request.url.path} from {client_host} "
            f"- Status: {response.status_code} - Time: {elapsed:.3f}s"
        )
        response.headers["X-Process-Time"] = f"{elapsed:.6f}"
        return response
