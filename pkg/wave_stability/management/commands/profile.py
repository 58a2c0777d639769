from wave_stability.management.base import WaveCommand
from wave_stability.reports import PROFILE_COLUMNS, profile_rows, render_csv, write_text
from wave_stability.wavetrain import profile


class Command(WaveCommand):
    help = "Sampled wave profile z, f, f_z and the energy residual (CSV)"

    def add_command_arguments(self, parser):
        parser.add_argument("--samples", type=int, default=256)

    def run(self, **options):
        tol = self.tolerances(options)
        potential = self.potential(options, tol)
        wave = profile(potential, self.wave_parameters(options), options["family"], tol)
        rows = profile_rows(wave, options["samples"])
        write_text(render_csv(rows, PROFILE_COLUMNS), options["out"], self.stdout)
