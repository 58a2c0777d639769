from django.db import models


class ScanJob(models.Model):
    """A persisted (E, c) grid scan and its result rows"""

    JOB_STATUS = [
        ("pending", "Pending"),
        ("running", "Running"),
        ("completed", "Completed"),
        ("failed", "Failed"),
    ]

    job_id = models.CharField(max_length=100, unique=True)
    potential = models.JSONField(default=dict)
    parameters = models.JSONField(default=dict)
    status = models.CharField(max_length=20, choices=JOB_STATUS, default="pending")
    rows = models.JSONField(default=list)
    error_message = models.TextField(blank=True)
    start_time = models.DateTimeField(null=True, blank=True)
    end_time = models.DateTimeField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        db_table = "scan_jobs"
        indexes = [
            models.Index(fields=["status"]),
            models.Index(fields=["created_at"]),
        ]

    def __str__(self):
        name = self.potential.get("name", "potential")
        return f"Scan {self.job_id}: {name} ({self.status})"

    @property
    def row_count(self) -> int:
        return len(self.rows or [])
