from wave_stability.management.base import WaveCommand
from wave_stability.modulation import nls_coefficients, nls_rho_check
from wave_stability.reports import render_json, write_text


class Command(WaveCommand):
    help = "NLS coefficients of a carrier wave about an equilibrium (JSON)"

    needs_wave = False

    def add_command_arguments(self, parser):
        parser.add_argument("--u0", type=float, default=0.0, help="Equilibrium of V")
        parser.add_argument("--k", type=float, default=1.0, help="Carrier wavenumber")
        parser.add_argument(
            "--check-rho",
            action="store_true",
            help="Compare the NLS type with rho of the near-equilibrium wave",
        )

    def run(self, **options):
        tol = self.tolerances(options)
        potential = self.potential(options, tol)
        if options["check_rho"]:
            data = nls_rho_check(potential, options["u0"], options["k"], tol).as_dict()
        else:
            data = nls_coefficients(potential, options["u0"], options["k"], tol).as_dict()
        write_text(render_json({"schema": 1, **data}), options["out"], self.stdout)
