"""
Run Models
Ledger of command invocations, enough to replay any of them.
"""
from django.db import models


class RunLog(models.Model):
    """One command invocation with its validated config and outcome."""

    COMMAND_CHOICES = [
        ('sample', 'Sample'),
        ('graph', 'Graph'),
        ('solve', 'Solve'),
        ('checks', 'Check suites'),
        ('pullback_demo', 'Pullback demo'),
    ]

    STATUS_CHOICES = [
        ('running', 'Running'),
        ('ok', 'OK'),
        ('fail', 'Failed'),
        ('error', 'Input error'),
    ]

    command = models.CharField(max_length=30, choices=COMMAND_CHOICES, db_index=True)

    # Suite name for `checks`, equation or mode for the others
    suite = models.CharField(max_length=50, blank=True, default='')

    # Validated config; together with the seed it reproduces the run
    config = models.JSONField(default=dict, blank=True)
    seed = models.IntegerField(default=0)

    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='running')
    max_residual = models.FloatField(null=True, blank=True)
    report_path = models.CharField(max_length=500, blank=True, default='')
    error_message = models.TextField(blank=True, null=True)

    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-created_at']
        verbose_name = 'Run Log'
        verbose_name_plural = 'Run Logs'
        indexes = [
            models.Index(fields=['command', 'created_at'], name='runs_command_created_idx'),
            models.Index(fields=['status', 'created_at'], name='runs_status_created_idx'),
        ]

    def __str__(self):
        status_emoji = {'running': '⏳', 'ok': '✅', 'fail': '❌', 'error': '⚠️'}
        label = f"{self.command} {self.suite}".strip()
        return f"{status_emoji.get(self.status, '')} {label} (seed {self.seed})"
