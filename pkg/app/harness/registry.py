"""In-memory registry of submitted sweeps."""

import logging
import threading
import uuid
from datetime import datetime
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from app.harness.config import config_hash
from app.harness.sweep import SweepRunner
from app.models.scenario import Scenario, SweepResult

logger = logging.getLogger(__name__)


class SweepStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class SweepEntry(BaseModel):
    id: str = Field(default_factory=lambda: str(uuid.uuid4()))
    status: SweepStatus = SweepStatus.PENDING
    scenario: Scenario
    config_hash: str
    result: Optional[SweepResult] = None
    error: Optional[str] = None
    submitted_at: datetime = Field(default_factory=datetime.now)
    finished_at: Optional[datetime] = None


class SweepRegistry:
    """Keeps sweep entries keyed by id; sweeps execute through ``execute``."""

    def __init__(self, max_workers: int = 1):
        self.max_workers = max_workers
        self.entries: dict[str, SweepEntry] = {}
        self._lock = threading.Lock()

    def submit(self, scenario: Scenario) -> SweepEntry:
        entry = SweepEntry(scenario=scenario, config_hash=config_hash(scenario))
        with self._lock:
            self.entries[entry.id] = entry
        logger.info(f"Sweep {entry.id} submitted for scenario '{scenario.name}'")
        return entry

    def execute(self, sweep_id: str) -> SweepEntry:
        entry = self.get(sweep_id)
        if entry is None:
            raise KeyError(sweep_id)
        entry.status = SweepStatus.RUNNING
        try:
            entry.result = SweepRunner(max_workers=self.max_workers).run(entry.scenario)
            entry.status = SweepStatus.COMPLETED if entry.result.success else SweepStatus.FAILED
            if not entry.result.success:
                entry.error = "; ".join(
                    f"tau={r.tau:g}: {r.error}" for r in entry.result.records if not r.success
                ) or entry.result.relaxed_error
        except Exception as e:
            logger.error(f"Sweep {sweep_id} failed: {e}")
            entry.status = SweepStatus.FAILED
            entry.error = str(e)
        entry.finished_at = datetime.now()
        return entry

    def get(self, sweep_id: str) -> Optional[SweepEntry]:
        with self._lock:
            return self.entries.get(sweep_id)

    def list(self) -> list[SweepEntry]:
        with self._lock:
            return sorted(self.entries.values(), key=lambda e: e.submitted_at, reverse=True)
