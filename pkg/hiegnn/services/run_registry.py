"""
Run registry: one row per completed training run.
"""

import logging
from typing import List, Optional

from sqlalchemy.orm import Session

from hiegnn.core.database import session_scope
from hiegnn.models.runs import TrainingRun
from hiegnn.schemas.reports import TrainReport

logger = logging.getLogger(__name__)


def record_run(url: str, *, run_id: str, command: str, corpus: str, report: TrainReport,
               setting: str = "hiegat", report_path: Optional[str] = None) -> None:
    with session_scope(url) as db:
        db.add(TrainingRun(
            run_id=run_id,
            command=command,
            corpus=corpus,
            seed=report.seed,
            setting=setting,
            test_accuracy=report.test_accuracy,
            best_epoch=report.best_epoch,
            epochs=len(report.epochs),
            report_path=report_path,
            checkpoint_path=report.checkpoint_path,
        ))
    logger.debug(f"Recorded run {run_id} ({setting}, seed {report.seed})")


def list_runs(db: Session, corpus: Optional[str] = None, limit: int = 100) -> List[TrainingRun]:
    query = db.query(TrainingRun)
    if corpus:
        query = query.filter(TrainingRun.corpus == corpus)
    return query.order_by(TrainingRun.id.desc()).limit(limit).all()
