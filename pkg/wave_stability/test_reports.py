"""
Tests for reports, grid scans, the management commands, tasks and the ScanJob model
"""

import io
import json
import math
from types import SimpleNamespace
from unittest import mock

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.test import SimpleTestCase, TestCase

from kleingordon_backend.celery import app as celery_app
from wave_stability.exceptions import InvalidConfig
from wave_stability.models import ScanJob
from wave_stability.potential import sine_gordon
from wave_stability.reports import (
    CURVE_COLUMNS,
    PROFILE_COLUMNS,
    SCAN_COLUMNS,
    build_report,
    parse_grid,
    render_json,
    scan_grid,
    scan_points,
    scan_row,
    verdict,
)
from wave_stability.tasks import analyze_grid_point, run_scan_job
from wave_stability.wavetrain import WaveClass, WaveParameters

SQRT2 = math.sqrt(2.0)


class EagerCeleryMixin:
    def setUp(self):
        super().setUp()
        self._eager = celery_app.conf.task_always_eager
        self._propagates = celery_app.conf.task_eager_propagates
        celery_app.conf.task_always_eager = True
        celery_app.conf.task_eager_propagates = True

    def tearDown(self):
        celery_app.conf.task_always_eager = self._eager
        celery_app.conf.task_eager_propagates = self._propagates
        super().tearDown()


class ReportTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.potential = sine_gordon()

    def test_subluminal_rotational_is_stable(self):
        report = build_report(self.potential, WaveParameters(-2.0, 0.5))
        self.assertEqual(report["verdict"], "spectrally stable")
        self.assertEqual(report["wave"]["class"], "SubluminalRotational")
        self.assertEqual(report["indices"]["rho"], 1)
        self.assertEqual(report["real_eigenvalues"]["periodic"], [])
        self.assertEqual(report["whitham"]["kind"], "Hyperbolic")

    def test_subluminal_librational_is_unstable(self):
        report = build_report(self.potential, WaveParameters(0.0, 0.5))
        self.assertEqual(report["verdict"], "spectrally unstable")
        self.assertEqual(report["modulational"], "StrongInstability")
        self.assertTrue(report["real_eigenvalues"]["periodic"])
        kinds = {cert["kind"] for cert in report["certificates"]}
        self.assertEqual(kinds, {"RealPeriodicEigenvalue"})
        names = [check["name"] for check in report["checks"]]
        self.assertIn("abel", names)
        self.assertIn("fast_path", names)
        self.assertTrue(all(check["passed"] for check in report["checks"] if check["name"] in ("abel", "fast_path")))
        self.assertIn("W_E_equals_T", names)

    def test_verdict_table(self):
        stable = SimpleNamespace(T_E=-1.0)
        self.assertEqual(verdict(WaveClass.SUPERLUMINAL_ROTATIONAL, stable, []), "spectrally unstable")
        self.assertEqual(verdict(WaveClass.SUBLUMINAL_LIBRATIONAL, stable, []), "spectrally unstable")
        self.assertEqual(verdict(WaveClass.SUPERLUMINAL_LIBRATIONAL, stable, []), "undetermined")
        self.assertEqual(verdict(WaveClass.SUPERLUMINAL_LIBRATIONAL, stable, ["cert"]), "spectrally unstable")
        growing = SimpleNamespace(T_E=2.0)
        self.assertEqual(verdict(WaveClass.SUPERLUMINAL_LIBRATIONAL, growing, []), "spectrally unstable")

    def test_report_is_json(self):
        report = build_report(self.potential, WaveParameters(-2.0, 0.5), trace_steps=16, threads=2)
        data = json.loads(render_json(report))
        self.assertEqual(data["schema"], 1)
        self.assertEqual(data["config"]["potential"]["name"], "sine-gordon")
        self.assertEqual(set(data["curves"]), {"Plus+", "Minus+", "Plus-", "Minus-"})


class ScanTest(EagerCeleryMixin, SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.potential = sine_gordon()

    def test_parse_grid(self):
        self.assertEqual(parse_grid("0:1:3"), [0.0, 0.5, 1.0])
        self.assertEqual(parse_grid("0.5, 2"), [0.5, 2.0])
        self.assertEqual(parse_grid(""), [])
        self.assertEqual(parse_grid(None), [])
        with self.assertRaises(InvalidConfig):
            parse_grid("a:b")

    def test_scan_points_skip_sonic_and_separatrix(self):
        points = scan_points(self.potential, [-2.0, 1.0, 0.0], [0.5, 1.0, 2.0])
        self.assertEqual(points, [(-2.0, 0.5), (-2.0, 2.0), (0.0, 0.5), (0.0, 2.0)])

    def test_error_rows(self):
        self.assertEqual(scan_row(self.potential, 0.0, 1.0)["error"], "sonic_speed")
        row = scan_row(self.potential, -2.0, 2.0)
        self.assertEqual(row["error"], "empty_region")
        self.assertIsNone(row["region"])

    def test_unexpected_numerics_row(self):
        with mock.patch("wave_stability.reports.indices", side_effect=FloatingPointError("overflow in exp")):
            row = scan_row(self.potential, -2.0, 0.5)
        self.assertEqual(row["error"], "unexpected_numerics")
        self.assertEqual(row["region"], "SubluminalRotational")
        self.assertIsNone(row["rho"])

    def test_thread_scan_keeps_order(self):
        rows = scan_grid(self.potential, [-2.0, 0.0], [0.5, 2.0], threads=2)
        self.assertEqual([(r["E"], r["c"]) for r in rows], [(-2.0, 0.5), (-2.0, 2.0), (0.0, 0.5), (0.0, 2.0)])
        self.assertEqual(rows[0]["region"], "SubluminalRotational")
        self.assertEqual(rows[0]["rho"], 1)
        self.assertEqual(rows[0]["whitham_kind"], "Hyperbolic")
        self.assertEqual(rows[1]["error"], "empty_region")
        self.assertEqual(rows[3]["region"], "SuperluminalLibrational")
        self.assertEqual(rows[3]["rho"], -1)
        self.assertEqual(rows[3]["whitham_kind"], "Elliptic")
        for row in rows:
            self.assertEqual(list(row), SCAN_COLUMNS)

    def test_celery_scan_matches_threads(self):
        threads = scan_grid(self.potential, [-2.0], [0.5, 2.0], threads=1)
        celery = scan_grid(self.potential, [-2.0], [0.5, 2.0], executor="celery")
        self.assertEqual([r["error"] for r in celery], [r["error"] for r in threads])
        self.assertEqual(celery[0]["rho"], threads[0]["rho"])
        self.assertEqual(celery[0]["region"], threads[0]["region"])

    def test_unknown_executor(self):
        with self.assertRaises(InvalidConfig):
            scan_grid(self.potential, [-2.0], [0.5], executor="mpi")

    def test_analyze_grid_point_task(self):
        row = analyze_grid_point.delay(self.potential.to_config(), -2.0, 0.5).get()
        self.assertEqual(row["region"], "SubluminalRotational")
        self.assertEqual(row["error"], "")


class CommandTest(SimpleTestCase):
    def call(self, name, **options):
        out = io.StringIO()
        call_command(name, stdout=out, stderr=io.StringIO(), **options)
        return out.getvalue()

    def test_report(self):
        data = json.loads(self.call("report", E=-2.0, c=0.5))
        self.assertEqual(data["verdict"], "spectrally stable")

    def test_profile(self):
        frame = pd.read_csv(io.StringIO(self.call("profile", E=0.0, c=SQRT2, samples=16)))
        self.assertEqual(list(frame.columns), PROFILE_COLUMNS)
        self.assertEqual(len(frame), 17)
        self.assertAlmostEqual(frame["z"].iloc[-1], 7.4162987092, places=8)
        self.assertLess(frame["energy_residual"].abs().max(), 1e-8)

    def test_nls(self):
        data = json.loads(self.call("nls", k=2.0))
        self.assertEqual(data["schema"], 1)
        self.assertEqual(data["kind"], "focusing")
        self.assertAlmostEqual(data["omega"], math.sqrt(5.0), places=12)

    def test_nls_rho_check(self):
        data = json.loads(self.call("nls", check_rho=True))
        self.assertTrue(data["consistent"])
        self.assertEqual(data["rho"], -1)

    def test_whitham(self):
        data = json.loads(self.call("whitham", E=-2.0, c=0.5))
        self.assertEqual(data["schema"], 1)
        self.assertEqual(data["kind"], "Hyperbolic")

    def test_hill(self):
        data = json.loads(self.call("hill", E=-2.0, c=0.5))
        self.assertTrue(data["bands"])
        self.assertAlmostEqual(data["bands"][-1][1], 0.0, delta=1e-6)

    def test_trace(self):
        text = self.call("trace", E=-2.0, c=0.5, branch="Plus", theta_max=0.5, steps=8)
        frame = pd.read_csv(io.StringIO(text))
        self.assertEqual(list(frame.columns), CURVE_COLUMNS)
        self.assertEqual(set(frame["branch"]), {"Plus"})
        self.assertLess(frame["re_lambda"].abs().max(), 1e-6)

    def test_unexpected_numerics_exit_code(self):
        err = io.StringIO()
        target = "wave_stability.management.commands.profile.profile"
        with mock.patch(target, side_effect=np.linalg.LinAlgError("Singular matrix")):
            with self.assertRaises(SystemExit) as ctx:
                call_command("profile", E=0.0, c=SQRT2, stdout=io.StringIO(), stderr=err)
        self.assertEqual(ctx.exception.code, 3)
        data = json.loads(err.getvalue())
        self.assertEqual(data["error"], "unexpected_numerics")
        self.assertEqual(data["details"]["type"], "LinAlgError")

    def test_hill_threads(self):
        single = json.loads(self.call("hill", E=0.0, c=SQRT2, threads=1))
        pooled = json.loads(self.call("hill", E=0.0, c=SQRT2, threads=3))
        self.assertEqual(pooled, single)

    def test_trace_threads(self):
        options = dict(E=-2.0, c=0.5, theta_max=0.5, steps=8, symmetric=True)
        single = self.call("trace", threads=1, **options)
        pooled = self.call("trace", threads=2, **options)
        self.assertEqual(pooled, single)
        frame = pd.read_csv(io.StringIO(pooled))
        self.assertLess(frame["theta"].min(), 0.0)
        self.assertGreater(frame["theta"].max(), 0.0)

    def test_domain_error_exit_code(self):
        err = io.StringIO()
        with self.assertRaises(SystemExit) as ctx:
            call_command("report", E=0.0, c=1.0, stdout=io.StringIO(), stderr=err)
        self.assertEqual(ctx.exception.code, 2)
        self.assertEqual(json.loads(err.getvalue())["error"], "sonic_speed")

    def test_missing_wave_parameters(self):
        with self.assertRaises(SystemExit) as ctx:
            call_command("profile", stdout=io.StringIO(), stderr=io.StringIO())
        self.assertEqual(ctx.exception.code, 2)

    def test_numerical_failure_exit_code(self):
        with self.assertRaises(SystemExit) as ctx:
            call_command(
                "profile", E=0.0, c=SQRT2, tol_period_max=1.0,
                stdout=io.StringIO(), stderr=io.StringIO(),
            )
        self.assertEqual(ctx.exception.code, 3)


class ScanJobTest(EagerCeleryMixin, TestCase):
    def call_scan(self, **options):
        out = io.StringIO()
        call_command(
            "scan", E_grid="-2", c_grid="0.5,2", threads=1,
            stdout=out, stderr=io.StringIO(), **options
        )
        return out.getvalue()

    def test_scan_command_writes_csv(self):
        frame = pd.read_csv(io.StringIO(self.call_scan()))
        self.assertEqual(list(frame.columns), SCAN_COLUMNS)
        self.assertEqual(len(frame), 2)
        self.assertFalse(ScanJob.objects.exists())

    def test_record(self):
        self.call_scan(record=True)
        job = ScanJob.objects.get()
        self.assertEqual(job.status, "completed")
        self.assertEqual(job.row_count, 2)
        self.assertEqual(job.parameters["energies"], [-2.0])
        self.assertIn("sine-gordon", str(job))

    def test_queue_runs_job(self):
        job_id = self.call_scan(queue=True).strip()
        job = ScanJob.objects.get(job_id=job_id)
        self.assertEqual(job.status, "completed")
        self.assertEqual(job.row_count, 2)
        self.assertIsNotNone(job.end_time)

    def test_run_scan_job_records_domain_errors(self):
        job = ScanJob.objects.create(
            job_id="broken",
            potential={"kind": "bessel"},
            parameters={"energies": [-2.0], "speeds": [0.5]},
        )
        result = run_scan_job.delay(job.job_id).get()
        self.assertEqual(result["error"], "invalid_config")
        job.refresh_from_db()
        self.assertEqual(job.status, "failed")
        self.assertTrue(job.error_message.startswith("invalid_config"))

    def test_str_and_row_count(self):
        job = ScanJob(job_id="abc", potential={"name": "quartic"}, rows=None)
        self.assertEqual(str(job), "Scan abc: quartic (pending)")
        self.assertEqual(job.row_count, 0)
