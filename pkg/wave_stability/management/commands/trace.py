import math

from wave_stability.management.base import WaveCommand
from wave_stability.reports import CURVE_COLUMNS, render_csv, write_text
from wave_stability.spectrum import Branch, parallel_map, trace_branches, trace_curve
from wave_stability.wavetrain import profile


class Command(WaveCommand):
    help = "Trace the spectral curves leaving lambda = 0 (CSV)"

    parallel = True

    def add_command_arguments(self, parser):
        parser.add_argument(
            "--branch", choices=["both", "Plus", "Minus"], default="both"
        )
        parser.add_argument("--theta-max", type=float, default=math.pi)
        parser.add_argument("--steps", type=int, default=256)
        parser.add_argument(
            "--symmetric",
            action="store_true",
            help="Trace [-theta_max, 0] as well as [0, theta_max]",
        )

    def run(self, **options):
        tol = self.tolerances(options)
        potential = self.potential(options, tol)
        wave = profile(potential, self.wave_parameters(options), options["family"], tol)
        limits = [options["theta_max"]]
        if options["symmetric"]:
            limits.append(-options["theta_max"])

        def trace(limit):
            if options["branch"] == "both":
                return trace_branches(wave, limit, options["steps"], tol)
            return [trace_curve(wave, Branch(options["branch"]), limit, options["steps"], tol)]

        rows = []
        for curves in parallel_map(trace, limits, options["threads"]):
            for curve in curves:
                rows.extend(curve.rows())
                if curve.diagnostic:
                    self.stderr.write(f"{curve.branch.value}: {curve.diagnostic}")
        write_text(render_csv(rows, CURVE_COLUMNS), options["out"], self.stdout)
