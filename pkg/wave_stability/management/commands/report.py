from wave_stability.management.base import WaveCommand
from wave_stability.reports import build_report, render_json, write_text


class Command(WaveCommand):
    help = "Full stability report for one periodic traveling wave (JSON)"

    parallel = True

    def add_command_arguments(self, parser):
        parser.add_argument(
            "--trace-steps",
            type=int,
            default=0,
            help="Also trace both spectral branches over [-pi, pi] with this many steps",
        )

    def run(self, **options):
        tol = self.tolerances(options)
        potential = self.potential(options, tol)
        report = build_report(
            potential,
            self.wave_parameters(options),
            options["family"],
            tol,
            trace_steps=options["trace_steps"],
            threads=options["threads"],
        )
        write_text(render_json(report), options["out"], self.stdout)
