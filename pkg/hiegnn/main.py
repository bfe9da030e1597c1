"""
Inference service entry point.
"""

import logging
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import RedirectResponse
from sqlalchemy.exc import SQLAlchemyError

from hiegnn import __version__
from hiegnn.api.v1 import predict, runs
from hiegnn.core.config import settings
from hiegnn.core.exceptions import (
    HieGnnError,
    database_exception_handler,
    general_exception_handler,
    hiegnn_exception_handler,
    validation_exception_handler,
)
from hiegnn.core.middleware import RequestTimingMiddleware
from hiegnn.services.checkpoint import load_checkpoint

# Configure logging
logging.basicConfig(
    level=settings.log_level,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

DESCRIPTION = """
# HieGNN inference API

Classifies raw text with a trained hierarchical graph attention checkpoint.

## Authentication

When the server has `API_TOKEN` set, every `/api/v1` endpoint requires

```
Authorization: Bearer <API_TOKEN>
```

## Resources

- **Prediction**: fused class probabilities plus the word, sentence and
  document level outputs and their weights
- **Runs**: training runs recorded by the command-line tool
"""


def create_app(checkpoint_path: Optional[str] = None) -> FastAPI:
    """
    Build the application. The checkpoint (argument or `CHECKPOINT_PATH`)
    is loaded at startup; without one the prediction endpoints answer 503.
    """

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        path = checkpoint_path or settings.CHECKPOINT_PATH
        app.state.checkpoint = None
        if path:
            app.state.checkpoint = load_checkpoint(Path(path))
            logger.info(f"Serving checkpoint {path} with {len(app.state.checkpoint.labels)} classes")
        else:
            logger.warning("CHECKPOINT_PATH is not set; prediction endpoints are disabled")
        yield

    app = FastAPI(
        title="HieGNN API",
        description=DESCRIPTION,
        version=__version__,
        docs_url="/docs",
        redoc_url="/redoc",
        lifespan=lifespan,
    )

    # Register exception handlers
    app.add_exception_handler(RequestValidationError, validation_exception_handler)
    app.add_exception_handler(HieGnnError, hiegnn_exception_handler)
    app.add_exception_handler(SQLAlchemyError, database_exception_handler)
    app.add_exception_handler(Exception, general_exception_handler)

    app.add_middleware(RequestTimingMiddleware)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=settings.CORS_ORIGINS,
        allow_credentials=True,
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    @app.get("/", include_in_schema=False)
    async def root():
        """Redirect root to API documentation."""
        return RedirectResponse(url="/docs")

    # Public, no token required
    @app.get("/health", tags=["Health"])
    async def health_check():
        return {
            "status": "healthy",
            "version": __version__,
            "service": "HieGNN API",
            "model_loaded": getattr(app.state, "checkpoint", None) is not None,
        }

    app.include_router(predict.router, prefix="/api/v1")
    app.include_router(runs.router, prefix="/api/v1")

    @app.get("/api/v1", tags=["API Info"])
    async def api_info():
        """API version and available endpoints."""
        return {
            "version": __version__,
            "endpoints": {
                "model": "/api/v1/model",
                "predict": "/api/v1/predict",
                "runs": "/api/v1/runs",
                "health": "/health",
                "docs": "/docs",
            },
        }

    return app


app = create_app()
