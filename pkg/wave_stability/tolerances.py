"""
Numerical tolerances shared by every analysis.

Defaults come from ``settings.WAVE_STABILITY``; the same values are used when
the module is imported without configured Django settings.
"""

import dataclasses
from dataclasses import dataclass
from typing import Any, Dict, Optional

from .exceptions import InvalidConfig


@dataclass(frozen=True)
class Tolerances:
    ode_method: str = "DOP853"
    ode_rtol: float = 1e-11
    ode_atol: float = 1e-12
    quad_tol: float = 1e-11
    critical_grid: int = 1024
    newton_tol: float = 1e-12
    newton_maxiter: int = 50
    separatrix_tol: float = 1e-10
    sonic_tol: float = 1e-10
    energy_residual_tol: float = 1e-9
    closure_tol: float = 1e-8
    period_max: float = 1e6
    te_relative_step: float = 1e-4
    abel_alarm: float = 1e-6
    abel_tol: float = 1e-8
    magnus_step: float = 1e-3
    fast_path_tol: float = 1e-5
    degenerate_tol: float = 1e-8
    tangent_tol: float = 1e-10
    evans_tol: float = 1e-8
    root_scan_points: int = 400
    root_xtol: float = 1e-10
    hill_scan_points: int = 1200
    near_equilibrium_offset: float = 1e-3

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_settings(cls, **overrides: Any) -> "Tolerances":
        """Build tolerances from Django settings, then apply overrides"""
        values: Dict[str, Any] = {}
        try:
            from django.conf import settings

            if settings.configured:
                configured = getattr(settings, "WAVE_STABILITY", {}) or {}
                names = set(cls.field_names())
                values = {
                    key.lower(): value
                    for key, value in configured.items()
                    if key.lower() in names
                }
        except ImportError:
            pass
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.build(values)

    @classmethod
    def build(cls, values: Dict[str, Any]) -> "Tolerances":
        names = set(cls.field_names())
        unknown = sorted(set(values) - names)
        if unknown:
            raise InvalidConfig(
                f"Unknown tolerance keys: {', '.join(unknown)}",
                {"unknown": unknown},
            )
        defaults = cls()
        cleaned = {}
        for name, value in values.items():
            kind = type(getattr(defaults, name))
            try:
                cleaned[name] = kind(value)
            except (TypeError, ValueError) as exc:
                raise InvalidConfig(
                    f"Tolerance {name} must be {kind.__name__}", {"key": name}
                ) from exc
            if kind in (int, float) and cleaned[name] <= 0:
                raise InvalidConfig(f"Tolerance {name} must be positive", {"key": name})
        return cls(**cleaned)

    def as_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def resolve(tol: Optional[Tolerances]) -> Tolerances:
    return tol if tol is not None else Tolerances.from_settings()
