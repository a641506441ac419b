"""
Run Ledger Service
Creates and finishes RunLog entries for the management commands.
"""
import logging

from django.db import DatabaseError
from django.utils import timezone

from .models import RunLog

logger = logging.getLogger(__name__)


class RunService:
    """
    Best-effort ledger writes: a failing database never changes a command's
    exit code.

    Usage:
        from runs.service import RunService

        log = RunService.record('checks', suite='transport', config=config, seed=1)
        ...
        RunService.finish(log, 'ok', max_residual=3e-11, report_path='runs_output/checks.json')
    """

    @staticmethod
    def record(command: str, suite: str = '', config: dict = None, seed: int = 0):
        """
        Open a ledger entry in the `running` state.

        Returns:
            RunLog, or None when the database is unavailable
        """
        try:
            return RunLog.objects.create(
                command=command,
                suite=suite or '',
                config=config or {},
                seed=int(seed or 0),
                status='running',
            )
        except DatabaseError as e:
            logger.error(f"[Runs] Failed to record {command} run: {e}")
            return None

    @staticmethod
    def finish(log, status: str, max_residual: float = None, report_path: str = '', error_message: str = None):
        if log is None:
            return None
        log.status = status
        log.max_residual = max_residual
        log.report_path = str(report_path or '')
        log.error_message = error_message
        log.finished_at = timezone.now()
        try:
            log.save(update_fields=['status', 'max_residual', 'report_path', 'error_message', 'finished_at'])
        except DatabaseError as e:
            logger.error(f"[Runs] Failed to finish run {log.pk}: {e}")
        return log


def record_run(command, status, suite='', config=None, seed=0, max_residual=None, report_path='', error_message=None):
    """Record an already finished run in one call."""
    log = RunService.record(command, suite=suite, config=config, seed=seed)
    return RunService.finish(log, status, max_residual=max_residual, report_path=report_path,
                             error_message=error_message)
