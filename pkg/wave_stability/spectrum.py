"""
Spectral diagnostics of periodic traveling waves.

The periodic Evans function D(lambda, e^{i theta}) = det(M(lambda) - e^{i theta} I)
vanishes exactly on the partial spectrum sigma_theta.  With
Delta^H(nu) the Hill discriminant and nu = lambda^2 / (c^2 - 1)^2,

    D = e^{q lambda} mu (2 cosh(q lambda - i theta) - Delta^H(nu)),  mu = e^{i theta},

so every root search below works on the bracketed reduced factor and only
reports |D| itself.
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .exceptions import (
    DegenerateIndex,
    DegenerateTangent,
    InvalidConfig,
    NoGapFound,
    PreconditionFailed,
    WindowTooNarrow,
    ZeroLocationFailure,
)
from .floquet import (
    MAGNUS_CHUNK,
    FastMonodromy,
    HillPropagator,
    fast_path_check,
    hill_propagator,
    monodromy_series,
)
from .potential import Potential
from .tolerances import Tolerances, resolve
from .wavetrain import (
    WaveParameters,
    WaveProfile,
    finite_part_delta,
    period_energy_derivative,
    profile,
)

logger = logging.getLogger(__name__)

CAUCHY_POINTS = 32
CAUCHY_RADIUS = 0.5
MAX_VANISHING_ORDER = 6
ORDER_THRESHOLD = 1e-6
ROUTE_AGREEMENT = 1e-4
FD_STEP = 1e-3
MIN_THETA_STEP = math.pi / 2**16
COLLISION_TOL = 1e-10
GAP_MIDPOINT_TOL = 1e-9
EDGE_XTOL = 1e-13
THETA_POLISH = 0.05
G_REWRITE_TOL = 1e-6


class Branch(str, Enum):
    PLUS = "Plus"
    MINUS = "Minus"


class CertificateKind(str, Enum):
    REAL_PERIODIC_EIGENVALUE = "RealPeriodicEigenvalue"
    G_SIGN_CHANGE = "GSignChange"
    CURVE_TRANSVERSAL = "CurveTransversal"


class ModulationalClass(str, Enum):
    STABLE = "Stable"
    WEAK_INSTABILITY_POSSIBLE = "WeakInstabilityPossible"
    STRONG_INSTABILITY = "StrongInstability"
    DEGENERATE = "Degenerate"


class InfiniteSpeedVerdict(str, Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"


# ----------------------------------------------------------------------
# Records
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityIndices:
    gamma: Optional[int]
    rho: int
    kappa: float
    q: float
    d2_evans: float
    d2_evans_fd: float
    vanish_order_p: Optional[int]
    rho_routes: Tuple[float, float, float]
    routes_agree: bool
    degenerate: bool
    T_E: float
    delta: float
    evans_taylor: Tuple[float, ...] = ()

    @property
    def d2_residual(self) -> float:
        return abs(self.d2_evans_fd - self.d2_evans) / max(abs(self.d2_evans), 1e-12)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma if self.gamma is not None else "Indeterminate",
            "rho": self.rho,
            "kappa": self.kappa,
            "q": self.q,
            "d2_evans": self.d2_evans,
            "d2_evans_fd": self.d2_evans_fd,
            "d2_residual": self.d2_residual,
            "vanish_order_p": self.vanish_order_p,
            "rho_routes": {
                "m12": self.rho_routes[0],
                "period_slope": self.rho_routes[1],
                "finite_part": self.rho_routes[2],
                "agree": self.routes_agree,
            },
            "degenerate": self.degenerate,
        }


class CurvePoint(NamedTuple):
    theta: float
    lam: complex
    evans_residual: float


@dataclass(frozen=True)
class SpectralCurve:
    branch: Branch
    points: List[CurvePoint]
    tangent_s0: complex
    diagnostic: Optional[str] = None
    collisions: Tuple[float, ...] = ()

    @property
    def complete(self) -> bool:
        return self.diagnostic is None

    @property
    def max_real_part(self) -> float:
        return max((abs(p.lam.real) for p in self.points), default=0.0)

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "theta": p.theta,
                "re_lambda": p.lam.real,
                "im_lambda": p.lam.imag,
                "branch": self.branch.value,
                "abs_evans": p.evans_residual,
            }
            for p in self.points
        ]


@dataclass(frozen=True)
class HillSpectrum:
    bands: List[Tuple[float, float]]
    periodic_eigenvalues: List[float]
    antiperiodic_eigenvalues: List[float]
    gaps: List[Tuple[float, float]]
    scan_window: Tuple[float, float]

    def negative_gaps(self) -> List[Tuple[float, float]]:
        """Gaps, clipped to nu < 0"""
        return [(lo, min(hi, 0.0)) for lo, hi in self.gaps if lo < 0.0 and min(hi, 0.0) > lo]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "bands": [list(b) for b in self.bands],
            "periodic": list(self.periodic_eigenvalues),
            "antiperiodic": list(self.antiperiodic_eigenvalues),
            "gaps": [list(g) for g in self.gaps],
            "scan_window": list(self.scan_window),
        }


@dataclass(frozen=True)
class InstabilityCertificate:
    lambda0: complex
    kind: CertificateKind
    residual: float
    bracket: Optional[Tuple[complex, complex]] = None
    theta: Optional[float] = None
    evans_residual: Optional[float] = None

    def as_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "lambda0": [self.lambda0.real, self.lambda0.imag],
            "kind": self.kind.value,
            "residual": self.residual,
        }
        if self.bracket is not None:
            data["bracket"] = [[z.real, z.imag] for z in self.bracket]
        if self.theta is not None:
            data["theta"] = self.theta
        if self.evans_residual is not None:
            data["evans_residual"] = self.evans_residual
        return data


@dataclass(frozen=True)
class InfiniteSpeedResult:
    verdict: InfiniteSpeedVerdict
    negative_gaps: List[Tuple[float, float]]
    spectrum: HillSpectrum

    def as_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "negative_gaps": [list(g) for g in self.negative_gaps],
            "hill": self.spectrum.as_dict(),
        }


def parallel_map(func: Callable[[Any], Any], items: Iterable[Any], threads: int = 1) -> List[Any]:
    """Ordered map, on a thread pool when threads > 1"""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(func, items))


# ----------------------------------------------------------------------
# Evans function
# ----------------------------------------------------------------------


class EvansEvaluator:
    """Vectorized Evans function of one wave, backed by its Hill propagator"""

    def __init__(self, wave: WaveProfile, tol: Optional[Tolerances] = None):
        self.wave = wave
        self.tol = resolve(tol)
        self.fast = FastMonodromy.for_profile(wave, self.tol)
        self.fast_path = fast_path_check(wave, self.tol)
        self.q = wave.q
        self.gap = wave.gap

    def hill(self, lams) -> np.ndarray:
        return self.fast.propagator.discriminant(self.fast.nu(np.atleast_1d(lams)))

    def evans(self, lams, thetas) -> np.ndarray:
        lams, thetas = np.broadcast_arrays(
            np.atleast_1d(np.asarray(lams, dtype=complex)), np.asarray(thetas, dtype=float)
        )
        mu = np.exp(1j * thetas)
        growth = np.exp(self.q * lams)
        return mu * mu - growth * self.hill(lams) * mu + growth * growth

    def reduced(self, lams, thetas) -> np.ndarray:
        """2 cosh(q lambda - i theta) - Delta^H(nu)"""
        lams, thetas = np.broadcast_arrays(
            np.atleast_1d(np.asarray(lams, dtype=complex)), np.asarray(thetas, dtype=float)
        )
        return 2.0 * np.cosh(self.q * lams - 1j * thetas) - self.hill(lams)

    def tilde(self, lams, mus) -> np.ndarray:
        """e^{-q lambda} mu^{-1} D(lambda, mu)"""
        lams, mus = np.broadcast_arrays(
            np.atleast_1d(np.asarray(lams, dtype=complex)), np.asarray(mus, dtype=complex)
        )
        growth = np.exp(self.q * lams)
        return mus / growth - self.hill(lams) + growth / mus

    def real_axis(self, lams, antiperiodic: bool = False) -> np.ndarray:
        """e^{-q lambda} D(lambda, -+1) for real lambda"""
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        hill = self.hill(lams).real
        sign = 1.0 if antiperiodic else -1.0
        return 2.0 * np.cosh(self.q * lams) + sign * hill

    def scale(self, lams) -> np.ndarray:
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        growth = np.exp(self.q * lams)
        return 1.0 + np.abs(growth * self.hill(lams)) + np.abs(growth) ** 2


def evans(wave: WaveProfile, lam: complex, theta: float, tol: Optional[Tolerances] = None) -> complex:
    return complex(EvansEvaluator(wave, tol).evans([lam], theta)[0])


def _hill_multiplier(discriminant: complex) -> complex:
    root = np.sqrt(complex(discriminant) ** 2 - 4.0)
    a, b = 0.5 * (discriminant + root), 0.5 * (discriminant - root)
    return complex(a if abs(a) >= abs(b) else b)


def multipliers(
    wave: WaveProfile,
    lam: complex,
    previous: Optional[Tuple[complex, complex]] = None,
    tol: Optional[Tolerances] = None,
) -> Tuple[complex, complex]:
    """Floquet multipliers of M(lambda), labeled against ``previous`` when given"""
    evaluator = EvansEvaluator(wave, tol)
    lam = complex(lam)
    x = _hill_multiplier(evaluator.hill([lam])[0])
    growth = complex(np.exp(evaluator.q * lam))
    pair = (growth * x, growth / x)
    if previous is None:
        return tuple(sorted(pair, key=lambda z: (z.real, z.imag), reverse=True))
    keep = abs(pair[0] - previous[0]) + abs(pair[1] - previous[1])
    swap = abs(pair[1] - previous[0]) + abs(pair[0] - previous[1])
    return pair if keep <= swap else (pair[1], pair[0])


def multiplier_path(
    wave: WaveProfile, lams: Sequence[complex], tol: Optional[Tolerances] = None
) -> List[Tuple[complex, complex]]:
    path: List[Tuple[complex, complex]] = []
    for lam in lams:
        path.append(multipliers(wave, lam, path[-1] if path else None, tol))
    return path


def _g_rewrite(evaluator: EvansEvaluator, lam: complex) -> float:
    x = _hill_multiplier(evaluator.hill([lam])[0])
    return (evaluator.q * lam.real) ** 2 - math.log(abs(x)) ** 2


def g_function(wave: WaveProfile, lam: complex, tol: Optional[Tolerances] = None) -> float:
    """log|mu_+| log|mu_-|, from the eigenvalues of M(lambda)"""
    evaluator = EvansEvaluator(wave, tol)
    lam = complex(lam)
    matrix = evaluator.fast.matrices([lam])[0]
    eig = np.linalg.eigvals(matrix)
    big = complex(eig[int(np.argmax(np.abs(eig)))])
    small = complex(np.exp(2.0 * evaluator.q * lam)) / big
    value = math.log(abs(big)) * math.log(abs(small))
    rewrite = _g_rewrite(evaluator, lam)
    if abs(value - rewrite) > G_REWRITE_TOL * max(1.0, abs(value)):
        logger.warning(f"G({lam}) = {value!r} but its Hill rewrite gives {rewrite!r}")
    return value


# ----------------------------------------------------------------------
# Indices at lambda = 0
# ----------------------------------------------------------------------


def _hill_taylor(propagator: HillPropagator, count: int = MAX_VANISHING_ORDER + 1) -> np.ndarray:
    nodes = CAUCHY_RADIUS * np.exp(2j * np.pi * np.arange(CAUCHY_POINTS) / CAUCHY_POINTS)
    values = propagator.discriminant(nodes)
    coefficients = np.fft.fft(values) / CAUCHY_POINTS
    return np.array(
        [coefficients[k].real / CAUCHY_RADIUS**k for k in range(count)], dtype=float
    )


def _evans_taylor(q: float, gap: float, hill: np.ndarray) -> List[Tuple[float, float]]:
    """(b_2p, scale) for the lambda^{2p} coefficient of 2 cosh(q lambda) - Delta^H"""
    out = []
    for p in range(1, len(hill)):
        trig = 2.0 * q ** (2 * p) / math.factorial(2 * p)
        hill_term = hill[p] / gap ** (2 * p)
        out.append((trig - hill_term, abs(trig) + abs(hill_term)))
    return out


def _sign(x: float) -> int:
    return 1 if x > 0 else (-1 if x < 0 else 0)


def indices(wave: WaveProfile, tol: Optional[Tolerances] = None) -> StabilityIndices:
    """Parity index gamma, modulational index rho and the local Evans data"""
    tol = resolve(tol)
    series = monodromy_series(wave, tol)
    q, gap, v0 = wave.q, wave.gap, wave.v0
    T_E = period_energy_derivative(wave.potential, wave.params, wave.family, tol)
    delta = finite_part_delta(wave, tol)

    routes = (series.m12, -gap * T_E * v0 * v0, delta * v0 * v0)
    spread = max(abs(a - b) for a in routes for b in routes)
    routes_agree = spread <= ROUTE_AGREEMENT * max(abs(r) for r in routes)
    signs = {_sign(r) for r in routes}

    degenerate = False
    if abs(T_E) <= tol.degenerate_tol or abs(series.m12) <= tol.degenerate_tol:
        logger.warning(f"Degenerate modulational index: T_E={T_E!r}, M12(0)={series.m12!r}")
        degenerate, rho = True, 0
    elif len(signs) != 1:
        logger.warning(f"rho routes disagree in sign: {routes}")
        degenerate, rho = True, 0
    else:
        rho = _sign(series.m12)
    if not routes_agree and not degenerate:
        logger.warning(f"rho routes spread {spread:.3e} beyond relative {ROUTE_AGREEMENT}")

    evaluator = EvansEvaluator(wave, tol)
    taylor = _evans_taylor(q, gap, _hill_taylor(evaluator.fast.propagator))
    gamma: Optional[int] = None
    order: Optional[int] = None
    for p, (coefficient, size) in enumerate(taylor, start=1):
        if abs(coefficient) > ORDER_THRESHOLD * max(1.0, size):
            order = p
            gamma = _sign(gap * coefficient)
            break
    if order is None:
        logger.warning("Evans function vanishes beyond the detectable order at (0, 1)")

    h = FD_STEP
    samples = evaluator.evans(np.array([-2 * h, -h, 0.0, h, 2 * h]), 0.0).real
    d2_fd = float(
        (-samples[0] + 16 * samples[1] - 30 * samples[2] + 16 * samples[3] - samples[4])
        / (12.0 * h * h)
    )
    result = StabilityIndices(
        gamma=gamma,
        rho=rho,
        kappa=series.kappa,
        q=q,
        d2_evans=2.0 * (q * q - series.kappa),
        d2_evans_fd=d2_fd,
        vanish_order_p=order,
        rho_routes=routes,
        routes_agree=routes_agree,
        degenerate=degenerate,
        T_E=T_E,
        delta=delta,
        evans_taylor=tuple(b for b, _ in taylor),
    )
    logger.info(
        f"indices E={wave.E} c={wave.c}: gamma={gamma} rho={rho} "
        f"kappa={series.kappa:.10g} q={q:.10g} p={order}"
    )
    return result


def local_tangents(
    wave: WaveProfile, tol: Optional[Tolerances] = None
) -> Tuple[complex, complex]:
    """s0+- = 1/(q +- sqrt(kappa)); spectral curves leave 0 along i s0 theta"""
    tol = resolve(tol)
    series = monodromy_series(wave, tol)
    q, kappa = wave.q, series.kappa
    if abs(kappa) <= tol.tangent_tol or abs(kappa - q * q) <= tol.tangent_tol:
        raise DegenerateTangent(
            f"Tangents undefined for kappa = {kappa!r}, q^2 = {q * q!r}",
            {"kappa": kappa, "q": q},
        )
    root = np.sqrt(complex(kappa))
    return complex(1.0 / (q + root)), complex(1.0 / (q - root))


def classify_modulational(
    result: StabilityIndices, tol: Optional[Tolerances] = None, strict: bool = False
) -> ModulationalClass:
    """Strong / weak-possible / degenerate; strict raises on degenerate indices"""
    tol = resolve(tol)
    if result.rho == 0:
        if strict:
            raise DegenerateIndex(
                "rho routes vanish or disagree", {"rho_routes": list(result.rho_routes)}
            )
        return ModulationalClass.DEGENERATE
    if result.rho == -1:
        return ModulationalClass.STRONG_INSTABILITY
    near_double = abs(result.kappa - result.q**2) <= tol.tangent_tol * max(1.0, result.q**2)
    if near_double and (result.vanish_order_p or 1) > 1:
        return ModulationalClass.STRONG_INSTABILITY
    return ModulationalClass.WEAK_INSTABILITY_POSSIBLE


# ----------------------------------------------------------------------
# Spectral curves
# ----------------------------------------------------------------------


def _newton(
    evaluator: EvansEvaluator, guess: complex, theta: float, tol: Tolerances
) -> Tuple[complex, float, bool]:
    lam = complex(guess)
    step = math.inf
    for _ in range(tol.newton_maxiter):
        eta = 1e-6 * (1.0 + abs(lam))
        h0, hp, hm = evaluator.reduced([lam, lam + eta, lam - eta], theta)
        slope = (hp - hm) / (2.0 * eta)
        if slope == 0 or not np.isfinite(slope):
            return lam, math.inf, False
        step = complex(h0 / slope)
        lam -= step
        if abs(step) <= 1e-13 * (1.0 + abs(lam)):
            break
    value = abs(evaluator.evans([lam], theta)[0])
    ok = (
        np.isfinite(value)
        and value <= tol.evans_tol * float(evaluator.scale([lam])[0])
        and abs(step) <= 1e-8 * (1.0 + abs(lam))
    )
    return lam, float(value), bool(ok)


def trace_curve(
    wave: WaveProfile,
    branch: Union[Branch, str],
    theta_max: float = math.pi,
    n_steps: int = 256,
    tol: Optional[Tolerances] = None,
) -> SpectralCurve:
    """Continue the branch of sigma_theta leaving lambda = 0 from theta = 0 to theta_max"""
    tol = resolve(tol)
    branch = Branch(branch)
    if abs(theta_max) > math.pi * (1.0 + 1e-12) or theta_max == 0.0:
        raise InvalidConfig(f"theta_max must satisfy 0 < |theta_max| <= pi, got {theta_max}")
    if n_steps < 1:
        raise InvalidConfig("n_steps must be positive")
    s_plus, s_minus = local_tangents(wave, tol)
    s0 = s_plus if branch is Branch.PLUS else s_minus
    evaluator = EvansEvaluator(wave, tol)

    points = [CurvePoint(0.0, 0j, float(abs(evaluator.evans([0.0], 0.0)[0])))]
    targets = np.linspace(0.0, theta_max, n_steps + 1)[1:]
    base = abs(targets[0])
    direction = math.copysign(1.0, theta_max)
    theta, lam = 0.0, 0j
    previous: Optional[Tuple[float, complex]] = None
    step = base
    for target in targets:
        while abs(target - theta) > 1e-15:
            nxt = theta + direction * min(step, abs(target - theta))
            if previous is None:
                guess = 1j * s0 * nxt
            else:
                guess = lam + (lam - previous[1]) * (nxt - theta) / (theta - previous[0])
            new, residual, ok = _newton(evaluator, guess, nxt, tol)
            if ok and abs(new - guess) <= 0.5 * abs(guess - lam) + 1e-10:
                previous = (theta, lam)
                theta, lam = nxt, new
                points.append(CurvePoint(float(theta), complex(lam), residual))
                step = min(2.0 * step, base)
                continue
            step *= 0.5
            if step < MIN_THETA_STEP:
                diagnostic = f"Newton diverged at theta={nxt:.6g}"
                logger.warning(f"{branch.value} branch: {diagnostic}; returning partial curve")
                return SpectralCurve(branch, points, s0, diagnostic)
    return SpectralCurve(branch, points, s0)


def trace_branches(
    wave: WaveProfile,
    theta_max: float = math.pi,
    n_steps: int = 256,
    tol: Optional[Tolerances] = None,
) -> Tuple[SpectralCurve, SpectralCurve]:
    """Both branches over [0, theta_max], with branch collisions flagged"""
    plus = trace_curve(wave, Branch.PLUS, theta_max, n_steps, tol)
    minus = trace_curve(wave, Branch.MINUS, theta_max, n_steps, tol)
    other = {p.theta: p.lam for p in minus.points}
    collisions = tuple(
        p.theta
        for p in plus.points
        if p.theta != 0.0 and p.theta in other and abs(p.lam - other[p.theta]) <= COLLISION_TOL
    )
    if collisions:
        logger.warning(f"Branch collision at {len(collisions)} theta values, first {collisions[0]:.6g}")
        plus = dataclasses.replace(plus, collisions=collisions)
        minus = dataclasses.replace(minus, collisions=collisions)
    return plus, minus


# ----------------------------------------------------------------------
# Real eigenvalues, bounds and Hill spectrum
# ----------------------------------------------------------------------


def spectral_bound(wave: WaveProfile) -> float:
    potential = wave.potential
    if potential.periodic:
        M = potential.max_curvature()
    else:
        M = potential.max_curvature(wave.turning.f_minus, wave.turning.f_plus)
    c = wave.c
    if wave.gap < 0:
        return math.sqrt(M)
    return max(math.sqrt(2.0 * M) * abs(c), 0.25 * (2.0 * c * c + 1.0 + (c * c - 1.0) / (c * c)))


def real_periodic_eigenvalues(
    wave: WaveProfile,
    antiperiodic: bool = False,
    upper: Optional[float] = None,
    tol: Optional[Tolerances] = None,
) -> List[float]:
    """Positive real roots of D(lambda, 1) (or D(lambda, -1))"""
    tol = resolve(tol)
    evaluator = EvansEvaluator(wave, tol)
    top = upper if upper is not None else spectral_bound(wave)
    grid = np.linspace(1e-3 * top, top, tol.root_scan_points)
    values = evaluator.real_axis(grid, antiperiodic)

    def func(x: float) -> float:
        return float(evaluator.real_axis([x], antiperiodic)[0])

    roots = []
    for i in range(len(grid) - 1):
        if values[i] == 0.0:
            roots.append(float(grid[i]))
        elif values[i] * values[i + 1] < 0.0:
            roots.append(brentq(func, grid[i], grid[i + 1], xtol=tol.root_xtol))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    logger.debug(
        f"{'antiperiodic' if antiperiodic else 'periodic'} real eigenvalues on (0, {top:.6g}]: {roots}"
    )
    return roots


def real_eigenvalue_certificate(
    wave: WaveProfile, lam: float, tol: Optional[Tolerances] = None
) -> InstabilityCertificate:
    evaluator = EvansEvaluator(wave, tol)
    residual = float(abs(evaluator.evans([lam], 0.0)[0]))
    return InstabilityCertificate(
        lambda0=complex(lam),
        kind=CertificateKind.REAL_PERIODIC_EIGENVALUE,
        residual=residual,
        theta=0.0,
        evans_residual=residual,
    )


def hill_spectrum_for(
    propagator: HillPropagator,
    nu_min: float,
    nu_max: float,
    tol: Optional[Tolerances] = None,
    threads: int = 1,
) -> HillSpectrum:
    """Bands |Delta^H| <= 2 of one Hill propagator inside [nu_min, nu_max]"""
    tol = resolve(tol)
    if not nu_max > nu_min:
        raise InvalidConfig(f"Empty Hill window [{nu_min}, {nu_max}]")
    grid = np.linspace(nu_min, nu_max, tol.hill_scan_points)
    # chunks are whole Magnus batches, so values match the unthreaded scan bit for bit
    blocks = -(-len(grid) // MAGNUS_CHUNK)
    width = -(-blocks // max(1, int(threads))) * MAGNUS_CHUNK
    chunks = [grid[i : i + width] for i in range(0, len(grid), width)]
    values = np.concatenate(parallel_map(lambda part: propagator.discriminant(part).real, chunks, threads))

    def shifted(level: float):
        return lambda x: float(propagator.discriminant([x])[0].real) - level

    brackets = []
    for i in range(len(grid) - 1):
        for level in (2.0, -2.0):
            if (values[i] - level) * (values[i + 1] - level) < 0.0:
                brackets.append((grid[i], grid[i + 1], level))

    def refine(bracket: Tuple[float, float, float]) -> Tuple[float, float]:
        a, b, level = bracket
        return brentq(shifted(level), a, b, xtol=EDGE_XTOL), level

    crossings: List[Tuple[float, float]] = sorted(parallel_map(refine, brackets, threads))

    inside = abs(values[0]) <= 2.0
    start = nu_min if inside else None
    bands: List[Tuple[float, float]] = []
    for position, _ in crossings:
        if inside:
            bands.append((start, position))
            inside = False
        else:
            start = position
            inside = True
    if inside:
        bands.append((start, nu_max))
    if not bands:
        raise WindowTooNarrow(
            f"No Hill band in [{nu_min}, {nu_max}]", {"window": [nu_min, nu_max]}
        )

    merged = [bands[0]]
    for lo, hi in bands[1:]:
        middle = 0.5 * (merged[-1][1] + lo)
        excess = abs(float(propagator.discriminant([middle])[0].real)) - 2.0
        if excess < GAP_MIDPOINT_TOL:
            merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    gaps = [(a[1], b[0]) for a, b in zip(merged[:-1], merged[1:])]
    periodic = sorted(p for p, level in crossings if level > 0)
    antiperiodic = sorted(p for p, level in crossings if level < 0)
    return HillSpectrum(
        bands=merged,
        periodic_eigenvalues=periodic,
        antiperiodic_eigenvalues=antiperiodic,
        gaps=gaps,
        scan_window=(float(nu_min), float(nu_max)),
    )


def default_hill_window(wave: WaveProfile, propagator: HillPropagator) -> Tuple[float, float]:
    peak = propagator.max_potential
    nu_min = -2.0 * (peak + (2.0 * math.pi / wave.T) ** 2)
    return nu_min, max(1.0, 2.0 * peak)


def hill_spectrum(
    wave: WaveProfile,
    nu_min: Optional[float] = None,
    nu_max: Optional[float] = None,
    tol: Optional[Tolerances] = None,
    threads: int = 1,
) -> HillSpectrum:
    tol = resolve(tol)
    propagator = hill_propagator(wave, tol)
    default_min, default_max = default_hill_window(wave, propagator)
    nu_min = default_min if nu_min is None else nu_min
    nu_max = default_max if nu_max is None else nu_max
    if not nu_min < 0:
        raise InvalidConfig(f"nu_min must be negative, got {nu_min}")
    spectrum = hill_spectrum_for(propagator, nu_min, nu_max, tol, threads)
    logger.info(
        f"Hill spectrum E={wave.E} c={wave.c}: {len(spectrum.bands)} bands, "
        f"{len(spectrum.gaps)} gaps in [{nu_min:.6g}, {nu_max:.6g}]"
    )
    return spectrum


# ----------------------------------------------------------------------
# Instability certificates
# ----------------------------------------------------------------------


def find_unstable_point(wave: WaveProfile, tol: Optional[Tolerances] = None) -> InstabilityCertificate:
    """Zero of G between an imaginary Hill-gap preimage and a far real-part point"""
    tol = resolve(tol)
    if wave.gap <= 0:
        raise PreconditionFailed(
            f"{wave.klass.value} waves admit no G-function certificate",
            {"class": wave.klass.value},
        )
    propagator = hill_propagator(wave, tol)
    nu_min, nu_max = default_hill_window(wave, propagator)
    gaps = hill_spectrum(wave, nu_min, nu_max, tol).negative_gaps()
    if not gaps:
        logger.debug("No negative Hill gap; widening the window once")
        gaps = hill_spectrum(wave, 4.0 * nu_min, nu_max, tol).negative_gaps()
    if not gaps:
        raise NoGapFound(
            f"No negative Hill gap down to nu = {4.0 * nu_min:.6g}",
            {"nu_min": 4.0 * nu_min},
        )
    lo, hi = max(gaps, key=lambda g: g[1] - g[0])
    nu_mid = 0.5 * (lo + hi)
    height = wave.gap * math.sqrt(-nu_mid)
    lam_minus = complex(0.0, height)

    evaluator = EvansEvaluator(wave, tol)

    def along(t: float) -> float:
        return _g_rewrite(evaluator, complex(t, height))

    reach = 1.5 * spectral_bound(wave)
    for _ in range(5):
        if along(reach) > 0.0:
            break
        reach *= 2.0
    else:
        raise ZeroLocationFailure(
            "G stays non-positive along the horizontal search path",
            {"height": height, "reach": reach},
        )
    if not along(0.0) < 0.0:
        raise ZeroLocationFailure("G is not negative at the gap preimage", {"nu_mid": nu_mid})
    t0 = brentq(along, 0.0, reach, xtol=tol.root_xtol)
    lam0 = complex(t0, height)

    x = _hill_multiplier(evaluator.hill([lam0])[0])
    growth = np.exp(wave.q * lam0)
    candidates = [growth * x, growth / x]
    unimodular = min(candidates, key=lambda m: abs(abs(m) - 1.0))
    centre = float(np.angle(unimodular))
    polish = minimize_scalar(
        lambda th: float(abs(evaluator.evans([lam0], th)[0])),
        bounds=(centre - THETA_POLISH, centre + THETA_POLISH),
        method="bounded",
        options={"xatol": 1e-12},
    )
    certificate = InstabilityCertificate(
        lambda0=lam0,
        kind=CertificateKind.G_SIGN_CHANGE,
        residual=abs(g_function(wave, lam0, tol)),
        bracket=(lam_minus, complex(reach, height)),
        theta=float(polish.x),
        evans_residual=float(polish.fun),
    )
    if lam0.real <= 1e-6:
        logger.warning(f"Certificate at {lam0} has negligible real part")
    logger.info(f"unstable point lambda0={lam0} theta={certificate.theta:.10g}")
    return certificate


def infinite_speed_stability(
    potential: Potential,
    E: float,
    family: Optional[int] = None,
    nu_window: Optional[float] = None,
    tol: Optional[Tolerances] = None,
) -> InfiniteSpeedResult:
    """Stable iff the Hill spectrum of the c^2 = 2 wave has no gap on the negative axis"""
    tol = resolve(tol)
    wave = profile(potential, WaveParameters(E, math.sqrt(2.0)), family, tol)
    propagator = hill_propagator(wave, tol)
    nu_min = -abs(nu_window) if nu_window else default_hill_window(wave, propagator)[0]
    spectrum = hill_spectrum_for(propagator, nu_min, 0.0, tol)
    return infinite_speed_verdict(spectrum)


def infinite_speed_verdict(spectrum: HillSpectrum) -> InfiniteSpeedResult:
    gaps = spectrum.negative_gaps()
    verdict = InfiniteSpeedVerdict.UNSTABLE if gaps else InfiniteSpeedVerdict.STABLE
    return InfiniteSpeedResult(verdict=verdict, negative_gaps=gaps, spectrum=spectrum)
