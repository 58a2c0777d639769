"""
Potential functions V(u) for the Klein-Gordon equation u_tt - u_xx + V'(u) = 0.

Two analytic families are supported: finite trigonometric series (2*pi
periodic) and polynomials.  Derivatives through fourth order are evaluated
term by term, never by differencing.
"""

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq, minimize_scalar

from .exceptions import (
    DegenerateCritical,
    InvalidConfig,
    NotNormalized,
    UnsupportedOrder,
)
from .tolerances import Tolerances, resolve

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
MAX_ORDER = 4
NORMALIZATION_TOL = 1e-8
CRITICAL_RESIDUAL_TOL = 1e-10
DEGENERATE_CURVATURE = 1e-8
CONFIG_KEYS = {"name", "kind", "cos", "sin", "poly"}


class PotentialKind(str, Enum):
    TRIG = "trig"
    POLY = "poly"
    SINE_GORDON = "sine_gordon"


class CriticalKind(str, Enum):
    MIN = "Min"
    MAX = "Max"


class ChiconeSign(str, Enum):
    PLUS = "Plus"
    MINUS = "Minus"


@dataclass(frozen=True)
class CriticalPoint:
    u: float
    value: float
    kind: CriticalKind
    second_derivative: float

    def as_dict(self) -> Dict[str, Any]:
        return {
            "u": self.u,
            "value": self.value,
            "kind": self.kind.value,
            "second_derivative": self.second_derivative,
        }


@dataclass(frozen=True)
class Normalization:
    minimum: float
    maximum: float
    normalized: bool


class Potential:
    """Immutable potential V(u) with analytic derivatives up to V''''"""

    def __init__(
        self,
        name: str,
        kind: Union[PotentialKind, str],
        cos: Sequence[float] = (),
        sin: Sequence[float] = (),
        poly: Sequence[float] = (),
        tol: Optional[Tolerances] = None,
    ):
        try:
            self.kind = PotentialKind(kind)
        except ValueError as exc:
            raise InvalidConfig(f"Unknown potential kind: {kind!r}") from exc
        self.name = str(name)
        self._tol = resolve(tol)

        if self.kind is PotentialKind.SINE_GORDON:
            if len(cos) or len(sin) or len(poly):
                raise InvalidConfig("sine_gordon potentials take no coefficients")
            cos, sin = (-1.0,), ()
        elif self.kind is PotentialKind.TRIG and len(poly):
            raise InvalidConfig("trig potentials take no polynomial coefficients")
        elif self.kind is PotentialKind.POLY and (len(cos) or len(sin)):
            raise InvalidConfig("poly potentials take no trigonometric coefficients")

        cos_arr = _coefficients(cos, "cos")
        sin_arr = _coefficients(sin, "sin")
        size = max(len(cos_arr), len(sin_arr))
        self._cos = np.pad(cos_arr, (0, size - len(cos_arr)))
        self._sin = np.pad(sin_arr, (0, size - len(sin_arr)))
        self._harmonics = np.arange(1, size + 1, dtype=float)
        poly_arr = _coefficients(poly, "poly")
        self._poly = npoly.polytrim(poly_arr, 0.0) if poly_arr.size else poly_arr

        if self.kind is PotentialKind.POLY and not np.any(self._poly):
            raise InvalidConfig("poly potentials need at least one coefficient")
        if self.periodic and not (np.any(self._cos) or np.any(self._sin)):
            raise InvalidConfig("trig potentials need at least one coefficient")

    def __repr__(self):
        return f"Potential(name={self.name!r}, kind={self.kind.value})"

    @property
    def periodic(self) -> bool:
        return self.kind is not PotentialKind.POLY

    @property
    def period(self) -> Optional[float]:
        return TWO_PI if self.periodic else None

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def eval(self, u, order: int = 0):
        """Return the order-th derivative of V at u (scalar or array)"""
        if isinstance(order, bool) or not isinstance(order, (int, np.integer)):
            raise UnsupportedOrder(f"Derivative order must be an integer, got {order!r}")
        if order < 0 or order > MAX_ORDER:
            raise UnsupportedOrder(
                f"Derivative order {order} is not supported (0..{MAX_ORDER})",
                {"order": int(order)},
            )
        u = np.asarray(u, dtype=float)
        if self.periodic:
            phase = np.multiply.outer(u, self._harmonics)
            c, s = np.cos(phase), np.sin(phase)
            scale = self._harmonics**order
            a, b = self._cos * scale, self._sin * scale
            rem = order % 4
            if rem == 0:
                value = c @ a + s @ b
            elif rem == 1:
                value = -(s @ a) + c @ b
            elif rem == 2:
                value = -(c @ a) - s @ b
            else:
                value = s @ a - c @ b
        else:
            if order >= len(self._poly):
                value = np.zeros_like(u)
            else:
                coef = npoly.polyder(self._poly, order) if order else self._poly
                value = npoly.polyval(u, coef)
        if np.ndim(value) == 0:
            return float(value)
        return value

    def __call__(self, u):
        return self.eval(u, 0)

    def increment(self, a, d):
        """V(a + d) - V(a) evaluated without cancellation for small d"""
        a, d = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(d, dtype=float))
        if self.periodic:
            mid = np.multiply.outer(a + 0.5 * d, self._harmonics)
            half = np.sin(np.multiply.outer(0.5 * d, self._harmonics))
            value = (-2.0 * np.sin(mid) * half) @ self._cos + (
                2.0 * np.cos(mid) * half
            ) @ self._sin
        else:
            value = np.zeros_like(a)
            degree = len(self._poly) - 1
            for k in range(1, degree + 1):
                coef = npoly.polyder(self._poly, k)
                value = value + npoly.polyval(a, coef) / math.factorial(k) * d**k
        if np.ndim(value) == 0:
            return float(value)
        return value

    # ------------------------------------------------------------------
    # Critical points
    # ------------------------------------------------------------------

    def critical_points(self, interval: Tuple[float, float]) -> List[CriticalPoint]:
        """All roots of V' in the closed interval, Newton polished and sorted"""
        lo, hi = float(interval[0]), float(interval[1])
        if not hi > lo:
            raise InvalidConfig(f"Empty interval [{lo}, {hi}]")
        if self.periodic:
            if hi - lo > TWO_PI * (1.0 + 1e-12):
                raise InvalidConfig("Interval exceeds one fundamental period")
            roots = self._scan_roots(lo, hi)
        else:
            roots = [r for r in self._polynomial_roots() if lo <= r <= hi]
        return [self._critical_point(r) for r in sorted(roots)]

    @cached_property
    def base_critical_points(self) -> List[CriticalPoint]:
        """Critical points over [0, 2*pi) for periodic kinds, all real ones otherwise"""
        if not self.periodic:
            return [self._critical_point(r) for r in self._polynomial_roots()]
        roots = []
        for r in self._scan_roots(0.0, TWO_PI):
            r = math.fmod(r, TWO_PI)
            if r < 0:
                r += TWO_PI
            if TWO_PI - r < 1e-9:
                r = 0.0
            if all(_circular_distance(r, other) > 1e-9 for other in roots):
                roots.append(r)
        return [self._critical_point(r) for r in sorted(roots)]

    @property
    def critical_values(self) -> List[float]:
        return [cp.value for cp in self.base_critical_points]

    @cached_property
    def normalization(self) -> Normalization:
        values = np.array(self.critical_values)
        if values.size == 0:
            return Normalization(math.nan, math.nan, False)
        lowest, highest = float(values.min()), float(values.max())
        if not self.periodic:
            return Normalization(lowest, highest, False)
        n_min = int(np.sum(np.abs(values - lowest) <= NORMALIZATION_TOL))
        n_max = int(np.sum(np.abs(values - highest) <= NORMALIZATION_TOL))
        normalized = (
            abs(lowest + 1.0) <= NORMALIZATION_TOL
            and abs(highest - 1.0) <= NORMALIZATION_TOL
            and n_min == 1
            and n_max == 1
        )
        if not normalized:
            logger.debug(f"{self.name}: not normalized (min={lowest}, max={highest})")
        return Normalization(lowest, highest, normalized)

    @property
    def is_normalized(self) -> bool:
        return self.normalization.normalized

    def family_index(self, u: float) -> int:
        """Index of the base critical point closest to u (modulo the period)"""
        points = self.base_critical_points
        if not points:
            raise InvalidConfig(f"{self.name} has no critical points")
        if self.periodic:
            distances = [_circular_distance(u, cp.u) for cp in points]
        else:
            distances = [abs(u - cp.u) for cp in points]
        return int(np.argmin(distances))

    def _scan_roots(self, lo: float, hi: float) -> List[float]:
        grid = np.linspace(lo, hi, self._tol.critical_grid)
        slope = self.eval(grid, 1)
        roots = []
        for i in range(len(grid) - 1):
            if slope[i] == 0.0:
                roots.append(float(grid[i]))
            elif slope[i] * slope[i + 1] < 0.0:
                roots.append(self._polish(float(grid[i]), float(grid[i + 1])))
        if slope[-1] == 0.0:
            roots.append(float(grid[-1]))
        unique: List[float] = []
        for r in roots:
            if all(abs(r - other) > 1e-9 for other in unique):
                unique.append(r)
        return unique

    def _polish(self, a: float, b: float) -> float:
        x = 0.5 * (a + b)
        for _ in range(self._tol.newton_maxiter):
            curvature = self.eval(x, 2)
            if curvature == 0.0:
                break
            step = self.eval(x, 1) / curvature
            x -= step
            if not a <= x <= b:
                break
            if abs(step) <= self._tol.newton_tol * (1.0 + abs(x)):
                return x
        return brentq(lambda t: self.eval(t, 1), a, b, xtol=1e-15, maxiter=200)

    def _polynomial_roots(self) -> List[float]:
        slope = npoly.polytrim(npoly.polyder(self._poly), 0.0)
        if len(slope) < 2:
            return []
        raw = npoly.polyroots(slope)
        real = sorted(
            float(r.real) for r in raw if abs(r.imag) <= 1e-9 * (1.0 + abs(r))
        )
        roots: List[float] = []
        for r in real:
            for _ in range(5):
                curvature = self.eval(r, 2)
                if curvature == 0.0:
                    break
                r -= self.eval(r, 1) / curvature
            if all(abs(r - other) > 1e-9 for other in roots):
                roots.append(r)
        return roots

    def _critical_point(self, u: float) -> CriticalPoint:
        curvature = self.eval(u, 2)
        if abs(curvature) <= DEGENERATE_CURVATURE:
            raise DegenerateCritical(
                f"Degenerate critical point of {self.name} at u={u}",
                {"u": u, "second_derivative": curvature},
            )
        residual = abs(self.eval(u, 1))
        if residual > CRITICAL_RESIDUAL_TOL:
            logger.warning(f"{self.name}: critical point at u={u} has |V'|={residual:.3e}")
        kind = CriticalKind.MIN if curvature > 0 else CriticalKind.MAX
        return CriticalPoint(float(u), self.eval(u, 0), kind, curvature)

    # ------------------------------------------------------------------
    # Derived quantities
    # ------------------------------------------------------------------

    def chicone_N(self, u, sign: Union[ChiconeSign, str]):
        """Chicone monotonicity function N+ or N- at u"""
        if not self.is_normalized:
            raise NotNormalized(
                f"{self.name} is not normalized to min -1 and max +1",
                {
                    "minimum": self.normalization.minimum,
                    "maximum": self.normalization.maximum,
                },
            )
        shift = 1.0 if ChiconeSign(sign) is ChiconeSign.PLUS else -1.0
        v = self.eval(u, 0) + shift
        d1, d2, d3 = self.eval(u, 1), self.eval(u, 2), self.eval(u, 3)
        return 6.0 * v * d2**2 - 3.0 * d1**2 * d2 - 2.0 * v * d1 * d3

    def max_curvature(self, lo: Optional[float] = None, hi: Optional[float] = None) -> float:
        """max |V''| over one period, or over [lo, hi] for polynomials"""
        if self.periodic:
            lo, hi = 0.0, TWO_PI
        elif lo is None or hi is None:
            raise InvalidConfig("Polynomial curvature bound needs an interval")
        grid = np.linspace(lo, hi, 4097)
        values = np.abs(self.eval(grid, 2))
        i = int(np.argmax(values))
        best = float(values[i])
        step = grid[1] - grid[0]
        left, right = max(lo, grid[i] - step), min(hi, grid[i] + step)
        if right > left:
            res = minimize_scalar(
                lambda x: -abs(self.eval(x, 2)),
                bounds=(left, right),
                method="bounded",
                options={"xatol": 1e-12},
            )
            best = max(best, float(-res.fun))
        return best

    # ------------------------------------------------------------------
    # Configuration
    # ------------------------------------------------------------------

    def to_config(self) -> Dict[str, Any]:
        config: Dict[str, Any] = {"name": self.name, "kind": self.kind.value}
        if self.kind is PotentialKind.TRIG:
            config["cos"] = [float(x) for x in self._cos]
            config["sin"] = [float(x) for x in self._sin]
        elif self.kind is PotentialKind.POLY:
            config["poly"] = [float(x) for x in self._poly]
        return config

    @classmethod
    def from_config(cls, config: Dict[str, Any], tol: Optional[Tolerances] = None) -> "Potential":
        if not isinstance(config, dict):
            raise InvalidConfig("Potential config must be a JSON object")
        unknown = sorted(set(config) - CONFIG_KEYS)
        if unknown:
            raise InvalidConfig(
                f"Unknown potential config keys: {', '.join(unknown)}",
                {"unknown": unknown},
            )
        kind = config.get("kind", PotentialKind.TRIG.value)
        return cls(
            name=config.get("name", str(kind)),
            kind=kind,
            cos=config.get("cos", []),
            sin=config.get("sin", []),
            poly=config.get("poly", []),
            tol=tol,
        )

    @classmethod
    def load(cls, source: str, tol: Optional[Tolerances] = None) -> "Potential":
        """Resolve a builtin name or a JSON config file path"""
        if source in BUILTIN_POTENTIALS:
            return builtin(source, tol)
        path = Path(source)
        if not path.is_file():
            raise InvalidConfig(
                f"{source!r} is neither a builtin potential nor a file",
                {"builtins": sorted(BUILTIN_POTENTIALS)},
            )
        try:
            config = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"Invalid JSON in {source}: {exc}") from exc
        return cls.from_config(config, tol)


def _coefficients(values: Sequence[float], label: str) -> np.ndarray:
    try:
        arr = np.asarray(list(values), dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"{label} coefficients must be numbers") from exc
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise InvalidConfig(f"{label} coefficients must be a flat list of finite numbers")
    return arr


def _circular_distance(a: float, b: float) -> float:
    d = math.fmod(abs(a - b), TWO_PI)
    return min(d, TWO_PI - d)


def _two_harmonic_amplitude() -> float:
    # cos u + sin(2u)/3 peaks where 4 sin^2 u + 3 sin u - 2 = 0
    s = (-3.0 + math.sqrt(41.0)) / 8.0
    return 1.0 / (math.sqrt(1.0 - s * s) * (1.0 + 2.0 * s / 3.0))


def _four_critical_amplitude() -> float:
    # cos u - sin(2u) peaks where 4 sin^2 u - sin u - 2 = 0
    s = (1.0 - math.sqrt(33.0)) / 8.0
    return 1.0 / (math.sqrt(1.0 - s * s) * (1.0 - 2.0 * s))


def _builtin_config(name: str) -> Dict[str, Any]:
    if name == "sine-gordon":
        return {"name": name, "kind": "sine_gordon"}
    if name == "quartic":
        return {"name": name, "kind": "poly", "poly": [0.0, 0.0, 0.5, 0.0, -0.25]}
    if name == "two-harmonic":
        a = _two_harmonic_amplitude()
        return {"name": name, "kind": "trig", "cos": [-a], "sin": [0.0, -a / 3.0]}
    if name == "four-critical":
        a = _four_critical_amplitude()
        return {"name": name, "kind": "trig", "cos": [-a], "sin": [0.0, a]}
    raise InvalidConfig(f"Unknown builtin potential {name!r}")


BUILTIN_POTENTIALS = ("sine-gordon", "quartic", "two-harmonic", "four-critical")


def builtin(name: str, tol: Optional[Tolerances] = None) -> Potential:
    return Potential.from_config(_builtin_config(name), tol)


def sine_gordon(tol: Optional[Tolerances] = None) -> Potential:
    return builtin("sine-gordon", tol)
