"""
Database connection and session management for the corpus cache and the
run registry.
"""

from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Generator

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from hiegnn.core.config import settings

# Create Base class for models
Base = declarative_base()

_engines: Dict[str, Engine] = {}


def sqlite_url(path: Path) -> str:
    """SQLAlchemy URL for a SQLite file, creating its parent directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return f"sqlite:///{path}"


def get_engine(url: str) -> Engine:
    """
    Return a cached engine for `url` with all tables created.

    Args:
        url: SQLAlchemy database URL

    Returns:
        Engine: engine bound to the database
    """
    engine = _engines.get(url)
    if engine is None:
        if url.startswith("sqlite:///"):
            Path(url[len("sqlite:///"):]).parent.mkdir(parents=True, exist_ok=True)
        engine = create_engine(url, echo=settings.DEBUG)
        # Register every table on Base before creating them
        import hiegnn.models  # noqa: F401

        Base.metadata.create_all(engine)
        _engines[url] = engine
    return engine


@contextmanager
def session_scope(url: str) -> Generator[Session, None, None]:
    """
    Transactional session: commits on success, rolls back on any error.

    Usage:
        with session_scope(url) as db:
            db.add(row)
    """
    factory = sessionmaker(autocommit=False, autoflush=False, bind=get_engine(url))
    db = factory()
    try:
        yield db
        db.commit()
    except Exception:
        db.rollback()
        raise
    finally:
        db.close()


def get_db() -> Generator[Session, None, None]:
    """
    FastAPI dependency yielding a session on the run registry.

    Usage:
        @router.get("/runs")
        def list_runs(db: Session = Depends(get_db)):
            return db.query(TrainingRun).all()
    """
    factory = sessionmaker(autocommit=False, autoflush=False,
                           bind=get_engine(settings.database_url))
    db = factory()
    try:
        yield db
    finally:
        db.close()


def dispose_engine(url: str) -> None:
    """Close and forget the engine for `url`."""
    engine = _engines.pop(url, None)
    if engine is not None:
        engine.dispose()
