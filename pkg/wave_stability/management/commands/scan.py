import uuid

from django.conf import settings

from wave_stability.management.base import WaveCommand
from wave_stability.models import ScanJob
from wave_stability.reports import (
    SCAN_COLUMNS,
    parse_grid,
    render_csv,
    scan_grid,
    write_text,
)


class Command(WaveCommand):
    help = "Classify an (E, c) grid: region, rho, gamma and Whitham type per row (CSV)"

    needs_wave = False
    parallel = True

    def add_command_arguments(self, parser):
        config = getattr(settings, "WAVE_STABILITY", {})
        parser.add_argument("--E-grid", dest="E_grid", default="", help="start:stop:num or a,b,c")
        parser.add_argument("--c-grid", dest="c_grid", default="", help="start:stop:num or a,b,c")
        parser.add_argument(
            "--executor",
            choices=["threads", "celery"],
            default=config.get("SCAN_EXECUTOR", "threads"),
        )
        parser.add_argument(
            "--record", action="store_true", help="Persist the scan as a ScanJob"
        )
        parser.add_argument(
            "--queue",
            action="store_true",
            help="Persist the scan and run it in a Celery worker; prints the job id",
        )

    def run(self, **options):
        tol = self.tolerances(options)
        potential = self.potential(options, tol)
        energies = parse_grid(options["E_grid"])
        speeds = parse_grid(options["c_grid"])

        if options["record"] or options["queue"]:
            job = ScanJob.objects.create(
                job_id=str(uuid.uuid4()),
                potential=potential.to_config(),
                parameters={
                    "energies": energies,
                    "speeds": speeds,
                    "tolerances": tol.as_dict(),
                    "threads": options["threads"],
                },
            )
            if options["queue"]:
                from wave_stability.tasks import run_scan_job

                run_scan_job.delay(job.job_id)
                self.stdout.write(job.job_id)
                return

        rows = scan_grid(
            potential,
            energies,
            speeds,
            tol,
            executor=options["executor"],
            threads=options["threads"],
        )
        if options["record"]:
            job.rows = rows
            job.status = "completed"
            job.save()
        write_text(render_csv(rows, SCAN_COLUMNS), options["out"], self.stdout)
