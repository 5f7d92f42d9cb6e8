"""Experiment result storage backed by SQLite."""

import json
import math
from datetime import datetime
from typing import Any, Dict, List, Optional

from sqlalchemy.exc import IntegrityError

from .database import get_db_manager
from .db_models import ExperimentRun, TrialResult
from .models import RunSummary, TrialRow
from ..utils.logger import logger

METRIC_COLUMNS = (
    "subspace_error", "s_error", "f1", "precision", "recall",
    "reconstruction_error", "objective", "iterations", "wall_time_seconds",
)


def cell_key(cell: Dict[str, Any]) -> str:
    """Canonical text form of a grid cell."""
    return json.dumps(cell, sort_keys=True, separators=(",", ":"))


def _clean(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class ResultStorage:
    """Manage experiment runs and their trial results."""

    def __init__(self, db_path: str = "results.db"):
        """Initialize result storage."""
        self.db_path = db_path
        self.manager = get_db_manager(db_path)

    def _db_to_run(self, db_run: ExperimentRun) -> RunSummary:
        """Convert database model to RunSummary model."""
        return RunSummary(
            id=db_run.id,
            kind=db_run.kind,
            master_seed=db_run.master_seed,
            trials=db_run.trials,
            status=db_run.status,
            config=db_run.config,
            created_at=db_run.created_at,
            finished_at=db_run.finished_at,
            error_message=db_run.error_message,
        )

    def _db_to_row(self, db_row: TrialResult) -> TrialRow:
        """Convert database model to TrialRow model."""
        metrics = {name: getattr(db_row, name) for name in METRIC_COLUMNS}
        return TrialRow(
            cell=json.loads(db_row.cell_key),
            method=db_row.method,
            trial=db_row.trial,
            metrics=metrics,
            extra=json.loads(db_row.extra_json) if db_row.extra_json else {},
        )

    def create_run(self, kind: str, master_seed: int, trials: int, config: Dict[str, Any]) -> int:
        """Register a new run and return its ID."""
        with self.manager.get_session() as session:
            db_run = ExperimentRun(kind=kind, master_seed=master_seed, trials=trials,
                                   config_json=json.dumps(config, sort_keys=True, default=str))
            session.add(db_run)
            session.flush()  # Get the ID before commit
            run_id = db_run.id
            logger.info(f"Started {kind} run (ID: {run_id})")
            return run_id

    def add_trials(self, run_id: int, rows: List[TrialRow]) -> int:
        """Store trial rows for a run."""
        with self.manager.get_session() as session:
            for row in rows:
                extra = {key: _clean(value) for key, value in row.metrics.items()
                         if key not in METRIC_COLUMNS}
                extra.update(row.extra)
                db_row = TrialResult(
                    run_id=run_id,
                    cell_key=cell_key(row.cell),
                    method=row.method,
                    trial=row.trial,
                    extra_json=json.dumps(extra, sort_keys=True, default=str) if extra else None,
                    **{name: _clean(row.metrics.get(name)) for name in METRIC_COLUMNS},
                )
                session.add(db_row)
            try:
                session.flush()
            except IntegrityError:
                logger.error(f"Duplicate trial rows for run {run_id}")
                raise ValueError(f"Duplicate trial rows for run {run_id}")
        return len(rows)

    def finish_run(self, run_id: int, error_message: Optional[str] = None) -> bool:
        """Mark a run finished (or failed)."""
        with self.manager.get_session() as session:
            db_run = session.query(ExperimentRun).filter_by(id=run_id).first()
            if not db_run:
                logger.error(f"Run with ID {run_id} not found")
                return False
            db_run.finished_at = datetime.utcnow()
            db_run.status = 'failed' if error_message else 'finished'
            db_run.error_message = error_message
            return True

    def get_run(self, run_id: int) -> Optional[RunSummary]:
        """Get a run by ID."""
        with self.manager.get_session() as session:
            db_run = session.query(ExperimentRun).filter_by(id=run_id).first()
            return self._db_to_run(db_run) if db_run else None

    def get_recent_runs(self, limit: int = 10) -> List[RunSummary]:
        """Most recent runs first."""
        with self.manager.get_session() as session:
            db_runs = session.query(ExperimentRun).order_by(
                ExperimentRun.id.desc()
            ).limit(limit).all()
            return [self._db_to_run(db_run) for db_run in db_runs]

    def get_trials(self, run_id: int, method: Optional[str] = None) -> List[TrialRow]:
        """Trial rows of a run, ordered by cell, method and trial."""
        with self.manager.get_session() as session:
            query = session.query(TrialResult).filter_by(run_id=run_id)
            if method is not None:
                query = query.filter_by(method=method)
            db_rows = query.order_by(TrialResult.cell_key, TrialResult.method, TrialResult.trial).all()
            return [self._db_to_row(db_row) for db_row in db_rows]

    def delete_run(self, run_id: int) -> bool:
        """Delete a run and its trial rows."""
        with self.manager.get_session() as session:
            db_run = session.query(ExperimentRun).filter_by(id=run_id).first()
            if not db_run:
                logger.error(f"Run with ID {run_id} not found")
                return False
            session.delete(db_run)
            logger.info(f"Deleted run {run_id}")
            return True

    def export_run(self, run_id: int) -> Dict[str, Any]:
        """Export a run with its rows (for backup or plotting)."""
        run = self.get_run(run_id)
        if run is None:
            raise ValueError(f"Run with ID {run_id} not found")
        data = run.to_dict()
        data['rows'] = [row.to_dict() for row in self.get_trials(run_id)]
        return data
