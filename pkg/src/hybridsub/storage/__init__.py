"""Storage components for experiment results and matrix files."""

from .result_storage import ResultStorage
from .models import RunSummary, TrialRow
from .database import get_db_manager
from .db_models import ExperimentRun, TrialResult

__all__ = ["ResultStorage", "RunSummary", "TrialRow", "get_db_manager", "ExperimentRun", "TrialResult"]
