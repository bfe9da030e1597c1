"""
Run registry endpoints.
"""

from typing import List, Optional

from fastapi import APIRouter, Depends, Query
from sqlalchemy.orm import Session

from hiegnn.core.database import get_db
from hiegnn.core.security import require_token
from hiegnn.schemas.reports import TrainingRunSchema
from hiegnn.services.run_registry import list_runs

router = APIRouter(
    prefix="/runs",
    tags=["Runs"],
    dependencies=[Depends(require_token)],
)


@router.get("", response_model=List[TrainingRunSchema])
def get_runs(
    corpus: Optional[str] = None,
    limit: int = Query(100, ge=1, le=1000),
    db: Session = Depends(get_db),
):
    """Most recent training runs, newest first."""
    return list_runs(db, corpus=corpus, limit=limit)
