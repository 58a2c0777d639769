import logging

from celery import shared_task
from django.utils import timezone

from .exceptions import WaveStabilityError
from .models import ScanJob
from .potential import Potential
from .reports import scan_grid, scan_row
from .tolerances import Tolerances

logger = logging.getLogger(__name__)


@shared_task
def analyze_grid_point(potential_config, E, c, tolerances=None):
    """
    Celery task computing one scan row; domain and numerical errors land in the row
    """
    tol = Tolerances.build(tolerances or {})
    potential = Potential.from_config(potential_config, tol)
    return scan_row(potential, E, c, tol)


@shared_task(bind=True)
def run_scan_job(self, job_id):
    """
    Celery task running a persisted grid scan in the background
    """
    job = ScanJob.objects.get(job_id=job_id)
    try:
        job.status = "running"
        job.start_time = timezone.now()
        job.save()

        parameters = job.parameters
        tol = Tolerances.build(parameters.get("tolerances", {}))
        potential = Potential.from_config(job.potential, tol)
        rows = scan_grid(
            potential,
            parameters.get("energies", []),
            parameters.get("speeds", []),
            tol,
            executor="threads",
            threads=parameters.get("threads", 1),
        )

        job.status = "completed"
        job.end_time = timezone.now()
        job.rows = rows
        job.save()

        logger.info(f"Scan job {job_id} completed with {len(rows)} rows")
        return {"job_id": job_id, "rows": len(rows)}

    except WaveStabilityError as exc:
        job.status = "failed"
        job.end_time = timezone.now()
        job.error_message = f"{exc.code}: {exc.message}"
        job.save()
        logger.error(f"Scan job {job_id} rejected: {exc.message}")
        return {"job_id": job_id, "error": exc.code}

    except Exception as exc:
        job.status = "failed"
        job.end_time = timezone.now()
        job.error_message = str(exc)
        job.save()

        logger.error(f"Scan job {job_id} failed: {exc}")
        raise self.retry(exc=exc, countdown=60, max_retries=3)
