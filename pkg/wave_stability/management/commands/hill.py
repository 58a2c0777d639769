from wave_stability.management.base import WaveCommand
from wave_stability.reports import render_json, write_text
from wave_stability.spectrum import hill_spectrum
from wave_stability.wavetrain import profile


class Command(WaveCommand):
    help = "Band and gap structure of the Hill spectrum of a wave (JSON)"

    parallel = True

    def add_command_arguments(self, parser):
        parser.add_argument("--nu-min", type=float, default=None)
        parser.add_argument("--nu-max", type=float, default=None)

    def run(self, **options):
        tol = self.tolerances(options)
        potential = self.potential(options, tol)
        wave = profile(potential, self.wave_parameters(options), options["family"], tol)
        spectrum = hill_spectrum(wave, options["nu_min"], options["nu_max"], tol, options["threads"])
        write_text(render_json({"schema": 1, **spectrum.as_dict()}), options["out"], self.stdout)
