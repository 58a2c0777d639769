from wave_stability.management.base import WaveCommand
from wave_stability.modulation import whitham_classify
from wave_stability.reports import render_json, write_text


class Command(WaveCommand):
    help = "Type and characteristic velocities of the Whitham modulation system (JSON)"

    def run(self, **options):
        tol = self.tolerances(options)
        potential = self.potential(options, tol)
        result = whitham_classify(potential, self.wave_parameters(options), options["family"], tol)
        write_text(render_json({"schema": 1, **result.as_dict()}), options["out"], self.stdout)
