from django.contrib import admin
from .models import RunLog


@admin.register(RunLog)
class RunLogAdmin(admin.ModelAdmin):
    list_display = ('command', 'suite', 'seed', 'status', 'max_residual', 'created_at', 'finished_at')
    list_filter = ('command', 'status', 'created_at')
    search_fields = ('suite', 'report_path', 'error_message')
    readonly_fields = ('command', 'suite', 'config', 'seed', 'status', 'max_residual', 'report_path', 'error_message', 'created_at', 'finished_at')
    date_hierarchy = 'created_at'

    list_per_page = 50

    def has_add_permission(self, request):
        return False  # Runs are recorded by the commands

    def has_change_permission(self, request, obj=None):
        return False  # Ledger is read-only
