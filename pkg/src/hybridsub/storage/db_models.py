"""Database models for experiment results."""

import json
from datetime import datetime

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text, UniqueConstraint
from sqlalchemy.orm import declarative_base, relationship, validates

Base = declarative_base()


class ExperimentRun(Base):
    """One invocation of ``sweep`` or ``compare``."""

    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    kind = Column(String(50), nullable=False)
    master_seed = Column(Integer, nullable=False, default=0)
    trials = Column(Integer, nullable=False, default=1)
    config_json = Column(Text, nullable=False, default="{}")
    status = Column(String(20), nullable=False, default="running")  # running, finished, failed
    error_message = Column(Text, nullable=True)
    created_at = Column(DateTime, default=datetime.utcnow, nullable=False)
    finished_at = Column(DateTime, nullable=True)

    results = relationship("TrialResult", back_populates="run", cascade="all, delete-orphan")

    @validates('trials')
    def validate_trials(self, key, trials):
        """Validate trial count."""
        if trials < 1:
            raise ValueError(f"Invalid trial count: {trials}")
        return trials

    @property
    def config(self) -> dict:
        return json.loads(self.config_json or "{}")

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, kind='{self.kind}', status='{self.status}')>"


class TrialResult(Base):
    """Metrics of one method on one trial of one grid cell."""

    __tablename__ = "trial_results"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id", ondelete="CASCADE"), nullable=False)
    cell_key = Column(String(255), nullable=False)  # canonical JSON of the grid coordinates
    method = Column(String(50), nullable=False)
    trial = Column(Integer, nullable=False)
    subspace_error = Column(Float, nullable=True)
    s_error = Column(Float, nullable=True)
    f1 = Column(Float, nullable=True)
    precision = Column(Float, nullable=True)
    recall = Column(Float, nullable=True)
    reconstruction_error = Column(Float, nullable=True)
    objective = Column(Float, nullable=True)
    iterations = Column(Integer, nullable=True)
    wall_time_seconds = Column(Float, nullable=True)
    extra_json = Column(Text, nullable=True)

    run = relationship("ExperimentRun", back_populates="results")

    __table_args__ = (
        UniqueConstraint('run_id', 'cell_key', 'method', 'trial', name='_run_cell_method_trial_uc'),
    )

    def __repr__(self):
        return f"<TrialResult(run_id={self.run_id}, cell={self.cell_key}, method='{self.method}', trial={self.trial})>"
