"""
Shared plumbing for the wave stability management commands.
"""

import json
import logging

from django.conf import settings
from django.core.management.base import BaseCommand

from wave_stability.exceptions import (
    UNEXPECTED_NUMERICS,
    InvalidConfig,
    UnexpectedNumerics,
    WaveStabilityError,
)
from wave_stability.potential import Potential
from wave_stability.tolerances import Tolerances
from wave_stability.wavetrain import WaveParameters

logger = logging.getLogger(__name__)


class WaveCommand(BaseCommand):
    """
    Base command: common flags, tolerance overrides and error-to-exit-code mapping
    """

    needs_wave = True
    parallel = False

    def add_arguments(self, parser):
        parser.add_argument(
            "--potential",
            default="sine-gordon",
            help="Builtin potential name or path to a JSON potential config",
        )
        if self.needs_wave:
            parser.add_argument("--E", dest="E", type=float, help="Wave energy")
            parser.add_argument("--c", dest="c", type=float, help="Wave speed")
            parser.add_argument(
                "--family",
                type=int,
                default=None,
                help="Index of the enclosed critical point (multi-well potentials)",
            )
        parser.add_argument("--out", default=None, help="Output file (default: stdout)")
        if self.parallel:
            parser.add_argument(
                "--threads",
                type=int,
                default=getattr(settings, "WAVE_STABILITY", {}).get("SCAN_THREADS", 4),
                help="Worker threads (results do not depend on the count)",
            )
        defaults = Tolerances()
        for name in Tolerances.field_names():
            kind = type(getattr(defaults, name))
            parser.add_argument(
                f"--tol-{name.replace('_', '-')}",
                dest=f"tol_{name}",
                type=kind,
                default=None,
                help=f"Override {name} (default from settings)",
            )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def tolerances(self, options) -> Tolerances:
        overrides = {
            name: options.get(f"tol_{name}") for name in Tolerances.field_names()
        }
        return Tolerances.from_settings(**overrides)

    def potential(self, options, tol: Tolerances) -> Potential:
        return Potential.load(options["potential"], tol)

    def wave_parameters(self, options) -> WaveParameters:
        if options.get("E") is None or options.get("c") is None:
            raise InvalidConfig("--E and --c are required")
        return WaveParameters(float(options["E"]), float(options["c"]))

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except WaveStabilityError as exc:
            self.fail(exc)
        except UNEXPECTED_NUMERICS as exc:
            self.fail(UnexpectedNumerics.wrap(exc))

    def fail(self, exc: WaveStabilityError):
        logger.error(f"{self.__module__.rsplit('.', 1)[-1]}: {exc.code}: {exc.message}")
        self.stderr.write(json.dumps(exc.as_dict(), sort_keys=True))
        raise SystemExit(exc.exit_code)

    def run(self, **options):
        raise NotImplementedError
