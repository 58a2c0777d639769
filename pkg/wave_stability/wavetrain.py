"""
Periodic traveling waves u = f(x - c t) of the Klein-Gordon equation.

A wave is fixed by its energy E and speed c through the first integral
    (c^2 - 1) f_z^2 / 2 = E - V(f).
This module classifies (E, c), locates turning points, and computes the
period T, its energy derivative T_E, the profile itself, the finite-part
integral delta and the averaged action W.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq
from numpy.polynomial import polynomial as npoly

from .exceptions import (
    EmptyRegion,
    IntegrationFailure,
    InvalidConfig,
    MultipleCriticalPoints,
    NotLibrational,
    OnSeparatrix,
    PeriodOverflow,
    SonicSpeed,
    StepUnderflow,
    UnboundedOrbit,
    ZeroLocationFailure,
)
from .potential import TWO_PI, CriticalKind, CriticalPoint, Potential
from .quadrature import tanh_sinh
from .tolerances import Tolerances, resolve

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
MIN_TE_STEP = 1e-10
DELTA_WINDOW = 1e-3
WINDOW_FIT_NODES = np.linspace(1.0, 3.0, 5)
WINDOW_FIT_DEGREE = 4
ZERO_SCAN_POINTS = 4097
TINY = 1e-300


@dataclass(frozen=True)
class WaveParameters:
    E: float
    c: float

    @property
    def gap(self) -> float:
        """c^2 - 1"""
        return self.c * self.c - 1.0

    @property
    def sigma(self) -> int:
        return 1 if self.gap > 0 else -1


class WaveClass(str, Enum):
    SUBLUMINAL_LIBRATIONAL = "SubluminalLibrational"
    SUBLUMINAL_ROTATIONAL = "SubluminalRotational"
    SUPERLUMINAL_LIBRATIONAL = "SuperluminalLibrational"
    SUPERLUMINAL_ROTATIONAL = "SuperluminalRotational"

    @property
    def librational(self) -> bool:
        return self.value.endswith("Librational")

    @property
    def superluminal(self) -> bool:
        return self.value.startswith("Superluminal")

    @classmethod
    def build(cls, superluminal: bool, librational: bool) -> "WaveClass":
        speed = "Superluminal" if superluminal else "Subluminal"
        shape = "Librational" if librational else "Rotational"
        return cls(speed + shape)


@dataclass(frozen=True)
class TurningPoints:
    f_minus: float
    f_plus: float


@dataclass(frozen=True)
class Classification:
    klass: WaveClass
    family: int
    center: CriticalPoint
    turning: Optional[TurningPoints]


@dataclass(frozen=True)
class PeriodData:
    T: float
    T_E: float
    delta: float
    v0: float
    gap: float

    @property
    def identity_residual(self) -> float:
        """|delta + (c^2 - 1) T_E| relative to 1 + |delta|"""
        return abs(self.delta + self.gap * self.T_E) / (1.0 + abs(self.delta))

    def as_dict(self) -> Dict[str, float]:
        return {
            "T": self.T,
            "T_E": self.T_E,
            "delta": self.delta,
            "v0": self.v0,
            "delta_identity_residual": self.identity_residual,
        }


@dataclass(frozen=True, eq=False)
class WaveProfile:
    """Dense trajectory of one period of f with its defining data"""

    potential: Potential
    params: WaveParameters
    klass: WaveClass
    family: int
    T: float
    u0: float
    v0: float
    turning: Optional[TurningPoints]
    solution: Any = field(repr=False)
    energy_residual: float = 0.0
    closure_residual: float = 0.0

    @property
    def gap(self) -> float:
        return self.params.gap

    @property
    def c(self) -> float:
        return self.params.c

    @property
    def E(self) -> float:
        return self.params.E

    @property
    def q(self) -> float:
        return self.c * self.T / self.gap

    def state(self, z):
        """(f, f_z) at z"""
        return self.solution(z)

    def f(self, z):
        return self.solution(z)[0]

    def f_z(self, z):
        return self.solution(z)[1]

    def f_zz(self, z):
        return -self.potential.eval(self.f(z), 1) / self.gap

    def hill_potential(self, z):
        """P(z) = V''(f(z)) / (c^2 - 1)"""
        return self.potential.eval(self.f(z), 2) / self.gap

    def samples(self, n: int = 256) -> Dict[str, np.ndarray]:
        z = np.linspace(0.0, self.T, n + 1)
        f, g = self.solution(z)
        residual = 0.5 * self.gap * g**2 - (self.E - self.potential.eval(f, 0))
        return {"z": z, "f": f, "f_z": g, "energy_residual": residual}


# ----------------------------------------------------------------------
# Classification
# ----------------------------------------------------------------------


def classify(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> Classification:
    """Place (E, c) in one of the four wave regions"""
    tol = resolve(tol)
    E, gap = params.E, params.gap
    if abs(gap) <= tol.sonic_tol:
        raise SonicSpeed(f"|c^2 - 1| = {abs(gap):.3e} is sonic", {"c": params.c})
    for cp in potential.base_critical_points:
        if abs(E - cp.value) <= tol.separatrix_tol:
            raise OnSeparatrix(
                f"E = {E} equals the critical value at u = {cp.u}",
                {"E": E, "critical_u": cp.u, "critical_value": cp.value},
            )
    sigma = params.sigma
    index, center = _family_center(potential, sigma, family)
    if sigma * (E - center.value) <= 0:
        raise EmptyRegion(
            f"No real wave with E = {E}, c = {params.c} in family {index}",
            {"E": E, "c": params.c, "family": index},
        )
    turning = _locate_turning_points(potential, E, sigma, center.u, tol)
    if turning is not None:
        enclosed = _enclosed_critical_points(potential, turning)
        if len(enclosed) != 1:
            raise MultipleCriticalPoints(
                f"Orbit at E = {E} encloses {len(enclosed)} critical points",
                {"E": E, "enclosed": enclosed},
            )
    klass = WaveClass.build(sigma > 0, turning is not None)
    logger.debug(f"classify(E={E}, c={params.c}) -> {klass.value}, family {index}")
    return Classification(klass, index, center, turning)


def _family_center(
    potential: Potential, sigma: int, family: Optional[int]
) -> Tuple[int, CriticalPoint]:
    points = potential.base_critical_points
    wanted = CriticalKind.MIN if sigma > 0 else CriticalKind.MAX
    if family is not None:
        if not 0 <= family < len(points):
            raise InvalidConfig(
                f"Family {family} does not exist ({len(points)} critical points)"
            )
        if points[family].kind is not wanted:
            raise EmptyRegion(
                f"Family {family} is a {points[family].kind.value}; "
                f"{'super' if sigma > 0 else 'sub'}luminal waves need a {wanted.value}"
            )
        return family, points[family]
    candidates = [(i, cp) for i, cp in enumerate(points) if cp.kind is wanted]
    if not candidates:
        raise EmptyRegion(f"{potential.name} has no {wanted.value} to oscillate about")
    key = (lambda item: (item[1].value, item[1].u)) if sigma > 0 else (
        lambda item: (-item[1].value, item[1].u)
    )
    return min(candidates, key=key)


def _locate_turning_points(
    potential: Potential, E: float, sigma: int, center: float, tol: Tolerances
) -> Optional[TurningPoints]:
    if not potential.periodic:
        return _polynomial_turning_points(potential, E, sigma, center)

    def allowed(u):
        return sigma * (E - potential.eval(u, 0))

    n = tol.critical_grid
    offsets = TWO_PI * np.arange(1, n + 1) / n
    ends = []
    for direction in (-1.0, 1.0):
        grid = center + direction * offsets
        values = allowed(grid)
        hits = np.nonzero(values <= 0.0)[0]
        if hits.size == 0:
            ends.append(None)
            continue
        i = int(hits[0])
        inner = center if i == 0 else float(grid[i - 1])
        outer = float(grid[i])
        if values[i] == 0.0:
            ends.append(outer)
        else:
            ends.append(brentq(allowed, inner, outer, xtol=1e-15, maxiter=200))
    if ends[0] is None and ends[1] is None:
        return None
    if ends[0] is None or ends[1] is None:
        raise ZeroLocationFailure(f"Turning point search at E = {E} found one end only")
    return TurningPoints(ends[0], ends[1])


def _polynomial_turning_points(
    potential: Potential, E: float, sigma: int, center: float
) -> TurningPoints:
    coef = np.array(potential.to_config()["poly"], dtype=float)
    coef[0] -= E
    raw = npoly.polyroots(coef) if len(coef) > 1 else np.array([])
    real = [float(r.real) for r in raw if abs(r.imag) <= 1e-9 * (1.0 + abs(r))]
    left = [r for r in real if r < center]
    right = [r for r in real if r > center]
    if not left or not right:
        raise UnboundedOrbit(
            f"Orbit at E = {E} escapes to infinity", {"E": E, "center": center}
        )
    polished = []
    for r in (max(left), min(right)):
        for _ in range(5):
            slope = potential.eval(r, 1)
            if slope == 0.0:
                break
            r -= (potential.eval(r, 0) - E) / slope
        polished.append(r)
    return TurningPoints(polished[0], polished[1])


def _enclosed_critical_points(potential: Potential, turning: TurningPoints) -> List[float]:
    found = []
    for cp in potential.base_critical_points:
        if potential.periodic:
            k_lo = math.floor((turning.f_minus - cp.u) / TWO_PI)
            k_hi = math.ceil((turning.f_plus - cp.u) / TWO_PI)
            shifts = [cp.u + k * TWO_PI for k in range(k_lo, k_hi + 1)]
        else:
            shifts = [cp.u]
        found.extend(u for u in shifts if turning.f_minus < u < turning.f_plus)
    return sorted(found)


def turning_points(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> TurningPoints:
    cls = classify(potential, params, family, tol)
    if cls.turning is None:
        raise NotLibrational(
            f"{cls.klass.value} waves have no turning points",
            {"E": params.E, "c": params.c},
        )
    return cls.turning


# ----------------------------------------------------------------------
# Period and its energy derivative
# ----------------------------------------------------------------------


def _librational_integral(
    potential: Potential,
    E: float,
    sigma: int,
    turning: TurningPoints,
    power: float,
    tol: Tolerances,
) -> float:
    """Integral of |E - V|^power between the turning points"""
    fm, fp = turning.f_minus, turning.f_plus

    def integrand(x, left, right):
        # E - V(x) anchored at the nearer turning point, where V = E
        near_left = -sigma * potential.increment(fm, left)
        near_right = -sigma * potential.increment(fp, -right)
        gap = np.abs(np.where(left <= right, near_left, near_right))
        return np.maximum(gap, TINY) ** power

    return tanh_sinh(integrand, fm, fp, tol=tol.quad_tol)


def _rotational_integral(
    potential: Potential, E: float, start: float, power: float, tol: Tolerances
) -> float:
    def integrand(x, left, right):
        return np.abs(E - potential.eval(x, 0)) ** power

    return tanh_sinh(integrand, start, start + TWO_PI, tol=tol.quad_tol)


def _period(
    potential: Potential, params: WaveParameters, cls: Classification, tol: Tolerances
) -> float:
    root = math.sqrt(abs(params.gap))
    if cls.turning is not None:
        integral = _librational_integral(
            potential, params.E, params.sigma, cls.turning, -0.5, tol
        )
        T = SQRT2 * root * integral
    else:
        integral = _rotational_integral(potential, params.E, cls.center.u, -0.5, tol)
        T = root / SQRT2 * integral
    if not math.isfinite(T) or T > tol.period_max:
        raise PeriodOverflow(
            f"Period {T} exceeds {tol.period_max}",
            {"E": params.E, "c": params.c, "T": T},
        )
    return T


def period(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> float:
    """Fundamental period T of f_z"""
    tol = resolve(tol)
    cls = classify(potential, params, family, tol)
    T = _period(potential, params, cls, tol)
    logger.debug(f"period(E={params.E}, c={params.c}) = {T!r}")
    return T


def period_energy_derivative(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> float:
    """dT/dE at fixed c"""
    tol = resolve(tol)
    cls = classify(potential, params, family, tol)
    gap = params.gap
    if cls.turning is None:
        integral = _rotational_integral(potential, params.E, cls.center.u, -1.5, tol)
        T_E = -params.sigma * math.sqrt(abs(gap)) / (2.0 * SQRT2) * integral
        if not gap * T_E < 0:
            logger.warning(f"(c^2-1)T_E = {gap * T_E} is not negative for a rotational wave")
        return T_E

    distance = min(abs(params.E - v) for v in potential.critical_values)
    h = tol.te_relative_step * distance
    if h <= MIN_TE_STEP:
        raise StepUnderflow(
            f"Energy step {h:.3e} too small near a separatrix",
            {"E": params.E, "distance": distance},
        )

    def T_at(energy: float) -> float:
        shifted = WaveParameters(energy, params.c)
        return _period(potential, shifted, classify(potential, shifted, cls.family, tol), tol)

    values = {k: T_at(params.E + k * h) for k in (-4, -2, -1, 1, 2, 4)}

    def central(m: int) -> float:
        return (
            -values[2 * m] + 8.0 * values[m] - 8.0 * values[-m] + values[-2 * m]
        ) / (12.0 * m * h)

    return (16.0 * central(1) - central(2)) / 15.0


# ----------------------------------------------------------------------
# Profile
# ----------------------------------------------------------------------


def profile(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> WaveProfile:
    """Integrate the wave ODE over one period from the normalized start"""
    tol = resolve(tol)
    cls = classify(potential, params, family, tol)
    T = _period(potential, params, cls, tol)
    gap = params.gap
    u0 = cls.center.u
    v0 = math.sqrt(2.0 * (params.E - cls.center.value) / gap)

    def rhs(z, y):
        return [y[1], -potential.eval(y[0], 1) / gap]

    sol = solve_ivp(
        rhs,
        (0.0, T),
        [u0, v0],
        method=tol.ode_method,
        rtol=tol.ode_rtol,
        atol=tol.ode_atol,
        dense_output=True,
    )
    if not sol.success:
        raise IntegrationFailure(f"Profile integration failed: {sol.message}")

    shift = 0.0 if cls.turning is not None else TWO_PI
    f_end, g_end = sol.y[:, -1]
    closure = max(abs(f_end - u0 - shift), abs(g_end - v0))
    residual = float(
        np.max(np.abs(0.5 * gap * sol.y[1] ** 2 - (params.E - potential.eval(sol.y[0], 0))))
    )
    if closure > tol.closure_tol:
        raise IntegrationFailure(
            f"Profile does not close after one period (residual {closure:.3e})",
            {"closure": closure, "T": T},
        )
    if residual > tol.energy_residual_tol:
        raise IntegrationFailure(
            f"Energy drifts by {residual:.3e} along the profile", {"residual": residual}
        )
    logger.info(
        f"profile {cls.klass.value} E={params.E} c={params.c}: T={T:.12g} "
        f"closure={closure:.2e} energy={residual:.2e}"
    )
    return WaveProfile(
        potential=potential,
        params=params,
        klass=cls.klass,
        family=cls.family,
        T=T,
        u0=u0,
        v0=v0,
        turning=cls.turning,
        solution=sol.sol,
        energy_residual=residual,
        closure_residual=closure,
    )


def first_return_period(wave: WaveProfile, tol: Optional[Tolerances] = None) -> float:
    """Return time of the ODE orbit to its starting phase, independent of quadrature"""
    tol = resolve(tol)
    gap = wave.gap
    target = wave.u0 + (0.0 if wave.klass.librational else TWO_PI)

    def rhs(z, y):
        return [y[1], -wave.potential.eval(y[0], 1) / gap]

    def crossing(z, y):
        return y[0] - target

    crossing.direction = 1.0
    sol = solve_ivp(
        rhs,
        (0.0, 1.25 * wave.T),
        [wave.u0, wave.v0],
        method=tol.ode_method,
        rtol=tol.ode_rtol,
        atol=tol.ode_atol,
        events=crossing,
    )
    times = [t for t in sol.t_events[0] if t > 0.5 * wave.T]
    if not sol.success or not times:
        raise IntegrationFailure("No return to the initial phase within 1.25 periods")
    return float(times[0])


def fz_zeros(wave: WaveProfile) -> List[float]:
    """Zeros of f_z in (0, T), located by bisection on the dense output"""
    z = np.linspace(0.0, wave.T, ZERO_SCAN_POINTS)
    g = wave.f_z(z)
    zeros = []
    for i in range(len(z) - 1):
        if g[i] == 0.0 and i > 0:
            zeros.append(float(z[i]))
        elif g[i] * g[i + 1] < 0.0:
            zeros.append(brentq(lambda s: wave.f_z(s), z[i], z[i + 1], xtol=1e-13))
    return zeros


# ----------------------------------------------------------------------
# Finite-part delta and averaged quantities
# ----------------------------------------------------------------------


def finite_part_delta(wave: WaveProfile, tol: Optional[Tolerances] = None) -> float:
    """Finite part of the integral of 1/f_z^2 over one period"""
    T = wave.T
    if not wave.klass.librational:
        value, _ = quad(lambda y: 1.0 / wave.f_z(y) ** 2, 0.0, T, epsabs=1e-13, epsrel=1e-11, limit=200)
        return value

    zeros = fz_zeros(wave)
    if len(zeros) != 2:
        raise ZeroLocationFailure(
            f"Expected two zeros of f_z, found {len(zeros)}", {"zeros": zeros}
        )
    slopes = [wave.f_zz(z) for z in zeros]
    if any(abs(a) < 1e-12 for a in slopes):
        raise ZeroLocationFailure("f_zz vanishes at a zero of f_z", {"slopes": slopes})

    def singular(y):
        return sum(1.0 / (a * a * (y - z) ** 2) for z, a in zip(zeros, slopes))

    def regular(y):
        return 1.0 / wave.f_z(y) ** 2 - singular(y)

    def limit_at(k: int) -> float:
        z, a = zeros[k], slopes[k]
        curvature = wave.potential.eval(wave.f(z), 2)
        value = curvature / (3.0 * a * a * wave.gap)
        for j, (zj, aj) in enumerate(zip(zeros, slopes)):
            if j != k:
                value -= 1.0 / (aj * aj * (z - zj) ** 2)
        return value

    eps = DELTA_WINDOW * T
    z1, z2 = zeros

    def window_integral(k: int) -> float:
        """Regular part over [z - eps, z + eps] from a quartic fit to its limit and nearby values"""
        z = zeros[k]
        offsets = np.concatenate((-WINDOW_FIT_NODES[::-1], WINDOW_FIT_NODES))
        values = [regular(z + eps * s) for s in offsets] + [limit_at(k)]
        coefficients = npoly.polyfit(np.append(offsets, 0.0), values, WINDOW_FIT_DEGREE)
        antiderivative = npoly.polyint(coefficients)
        return eps * float(npoly.polyval(1.0, antiderivative) - npoly.polyval(-1.0, antiderivative))

    pieces = [(0.0, z1 - eps), (z1 + eps, z2 - eps), (z2 + eps, T)]
    total = 0.0
    for lo, hi in pieces:
        if hi > lo:
            value, _ = quad(regular, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)
            total += value
    total += sum(window_integral(k) for k in range(2))
    total -= sum((1.0 / (a * a)) * (1.0 / z + 1.0 / (T - z)) for z, a in zip(zeros, slopes))
    return total


def averaged_W(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
    wave: Optional[WaveProfile] = None,
) -> float:
    """W = (c^2 - 1) * integral of f_z^2 over one period, from the profile"""
    wave = wave or profile(potential, params, family, tol)
    value, _ = quad(lambda y: wave.f_z(y) ** 2, 0.0, wave.T, epsabs=1e-13, epsrel=1e-11, limit=200)
    return wave.gap * value


def averaged_W_phase(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
) -> float:
    """W from its phase-plane form, integrating sqrt|E - V| over f"""
    tol = resolve(tol)
    cls = classify(potential, params, family, tol)
    root = math.sqrt(abs(params.gap))
    if cls.turning is not None:
        integral = _librational_integral(
            potential, params.E, params.sigma, cls.turning, 0.5, tol
        )
        return 2.0 * SQRT2 * params.sigma * root * integral
    integral = _rotational_integral(potential, params.E, cls.center.u, 0.5, tol)
    return SQRT2 * params.sigma * root * integral


def period_data(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
    wave: Optional[WaveProfile] = None,
) -> PeriodData:
    tol = resolve(tol)
    wave = wave or profile(potential, params, family, tol)
    T_E = period_energy_derivative(potential, params, wave.family, tol)
    delta = finite_part_delta(wave, tol)
    data = PeriodData(T=wave.T, T_E=T_E, delta=delta, v0=wave.v0, gap=params.gap)
    if data.identity_residual > 1e-4:
        logger.warning(
            f"delta = {delta!r} disagrees with -(c^2-1)T_E = {-params.gap * T_E!r}"
        )
    return data
