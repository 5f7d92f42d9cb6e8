"""Data models for stored experiment results."""

from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, Optional


@dataclass
class RunSummary:
    """Experiment run model."""
    id: int
    kind: str
    master_seed: int
    trials: int
    status: str
    config: Dict[str, Any] = field(default_factory=dict)
    created_at: Optional[datetime] = None
    finished_at: Optional[datetime] = None
    error_message: Optional[str] = None

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            'id': self.id,
            'kind': self.kind,
            'master_seed': self.master_seed,
            'trials': self.trials,
            'status': self.status,
            'config': self.config,
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'finished_at': self.finished_at.isoformat() if self.finished_at else None,
            'error_message': self.error_message,
        }


@dataclass
class TrialRow:
    """One method's metrics on one trial of a grid cell."""
    cell: Dict[str, Any]
    method: str
    trial: int
    metrics: Dict[str, Optional[float]] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            'cell': self.cell,
            'method': self.method,
            'trial': self.trial,
            'metrics': dict(self.metrics),
            'extra': dict(self.extra),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TrialRow':
        """Create from dictionary."""
        return cls(
            cell=data.get('cell', {}),
            method=data.get('method', ''),
            trial=data.get('trial', 0),
            metrics=data.get('metrics', {}),
            extra=data.get('extra', {}),
        )
