"""
Run registry table.
"""

from sqlalchemy import Column, DateTime, Float, Integer, String, func

from hiegnn.core.database import Base


class TrainingRun(Base):
    __tablename__ = "training_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String, nullable=False, index=True)
    command = Column(String, nullable=False)
    corpus = Column(String, nullable=False)
    seed = Column(Integer, nullable=False)
    setting = Column(String, nullable=False, default="hiegat")
    test_accuracy = Column(Float)
    best_epoch = Column(Integer)
    epochs = Column(Integer)
    report_path = Column(String)
    checkpoint_path = Column(String)
    created_at = Column(DateTime, server_default=func.now())
