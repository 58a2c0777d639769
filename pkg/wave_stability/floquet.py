"""
Fundamental matrices and monodromy of the linearized traveling-wave system.

Perturbations w(z) e^{lambda t} of a wave f solve the first-order system
    (w, w_z)' = A(z, lambda) (w, w_z),
    A = [[0, 1], [-(lambda^2 + V''(f)) / (c^2 - 1), 2 c lambda / (c^2 - 1)]].
The reference path integrates the wave and the fundamental matrix as one
coupled real system with multiple shooting.  Bulk evaluations go through
``HillPropagator``: w = e^{alpha z} y maps the system onto Hill's equation
y'' + P y = nu y with P = V''(f)/(c^2 - 1), nu = lambda^2/(c^2 - 1)^2 and
alpha = c lambda/(c^2 - 1).
"""

import logging
import math
import threading
import weakref
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import AbelViolation, IntegrationFailure, InvalidConfig
from .tolerances import Tolerances, resolve
from .wavetrain import WaveProfile

logger = logging.getLogger(__name__)

SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)
GAUSS_OFFSET = math.sqrt(3.0) / 6.0
MIN_MAGNUS_STEPS = 2048
MAGNUS_CHUNK = 32
SERIES_SWITCH = 1e-4
SLOPE_STEP = 1e-5
FAST_PATH_PROBES = (complex(0.3, 0.4), complex(-0.6, 0.2), complex(0.1, -0.9))


# ----------------------------------------------------------------------
# Records
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Monodromy:
    lam: complex
    matrix: np.ndarray
    q: float
    abel_residual: float

    @property
    def trace(self) -> complex:
        return complex(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def det(self) -> complex:
        return complex(np.exp(2.0 * self.q * self.lam))

    def as_dict(self) -> Dict[str, Any]:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "matrix": matrix_to_json(self.matrix),
            "q": self.q,
            "abel_residual": self.abel_residual,
        }


@dataclass(frozen=True)
class MonodromySeries:
    """Taylor coefficients of M(lambda) at lambda = 0"""

    M0: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    J: np.ndarray
    q: float
    gap: float

    @property
    def hill_M1(self) -> np.ndarray:
        """d M^H / d nu at nu = 0"""
        return self.M0 @ self.J

    @property
    def m12(self) -> float:
        return float(self.M0[0, 1].real)

    @property
    def kappa(self) -> float:
        return self.m12 * float(self.J[1, 0].real) / self.gap**2

    @property
    def hill_slope(self) -> float:
        return self.m12 * float(self.J[1, 0].real)

    def evaluate(self, lam: complex) -> np.ndarray:
        return self.M0 + lam * self.M1 + lam * lam * self.M2

    def as_dict(self) -> Dict[str, Any]:
        return {
            "M0": matrix_to_json(self.M0),
            "M1": matrix_to_json(self.M1),
            "M2": matrix_to_json(self.M2),
            "hill_M1": matrix_to_json(self.hill_M1),
            "q": self.q,
            "kappa": self.kappa,
        }


@dataclass(frozen=True)
class HillEvaluation:
    nu: complex
    matrix: np.ndarray
    discriminant: complex
    det_residual: float

    def as_dict(self) -> Dict[str, Any]:
        return {
            "nu": [self.nu.real, self.nu.imag],
            "matrix": matrix_to_json(self.matrix),
            "discriminant": self.discriminant.real,
            "det_residual": self.det_residual,
        }


@dataclass(frozen=True)
class HillSlope:
    value: float
    finite_difference: float

    @property
    def agreement(self) -> float:
        return abs(self.value - self.finite_difference) / max(abs(self.value), 1e-12)


@dataclass(frozen=True)
class FastPathCheck:
    """Magnus multipliers against the coupled monodromy at a few fixed lambda"""

    probes: Tuple[complex, ...]
    disagreement: float
    abel_residual: float

    def as_dict(self) -> Dict[str, Any]:
        return {
            "probes": [[lam.real, lam.imag] for lam in self.probes],
            "disagreement": self.disagreement,
            "abel_residual": self.abel_residual,
        }


def matrix_to_json(matrix: np.ndarray) -> List[List[float]]:
    """[[re, im]] for m11, m12, m21, m22"""
    flat = np.asarray(matrix, dtype=complex).ravel()
    return [[float(x.real), float(x.imag)] for x in flat]


def matrix_from_json(entries: Sequence[Sequence[float]]) -> np.ndarray:
    if len(entries) != 4:
        raise InvalidConfig("A 2x2 matrix needs four [re, im] entries")
    return np.array([complex(re, im) for re, im in entries]).reshape(2, 2)


# ----------------------------------------------------------------------
# Coupled integration
# ----------------------------------------------------------------------


def _linearized(wave: WaveProfile, lam: complex) -> Callable[[float], np.ndarray]:
    gap, c = wave.gap, wave.c
    lam = complex(lam)
    drift = 2.0 * c * lam / gap

    def coefficient(f: float) -> np.ndarray:
        return np.array(
            [[0.0, 1.0], [-(lam * lam + wave.potential.eval(f, 2)) / gap, drift]],
            dtype=complex,
        )

    return coefficient


def _hill(wave: WaveProfile, nu: complex) -> Callable[[float], np.ndarray]:
    gap, nu = wave.gap, complex(nu)

    def coefficient(f: float) -> np.ndarray:
        return np.array(
            [[0.0, 1.0], [nu - wave.potential.eval(f, 2) / gap, 0.0]], dtype=complex
        )

    return coefficient


def shooting_segments(wave: WaveProfile, growth: float) -> int:
    samples = wave.hill_potential(np.linspace(0.0, wave.T, 1025))
    rate = growth + math.sqrt(float(np.max(np.abs(samples)))) + 1.0
    return max(4, math.ceil(rate * wave.T / 2.0))


def _lambda_growth(wave: WaveProfile, lam: complex) -> float:
    c = wave.c
    return abs(lam) * max(1.0 / abs(c - 1.0), 1.0 / abs(c + 1.0))


def _propagate(
    wave: WaveProfile,
    coefficient: Callable[[float], np.ndarray],
    start: Tuple[float, float],
    z0: float,
    z1: float,
    segments: int,
    tol: Tolerances,
) -> Tuple[np.ndarray, complex]:
    """Matrix product over segments of [z0, z1] and the product of their determinants"""
    gap = wave.gap
    potential = wave.potential

    def rhs(z, y):
        F = (y[2:6] + 1j * y[6:10]).reshape(2, 2)
        dF = coefficient(y[0]) @ F
        return np.concatenate(
            ([y[1], -potential.eval(y[0], 1) / gap], dF.real.ravel(), dF.imag.ravel())
        )

    edges = np.linspace(z0, z1, segments + 1)
    state = np.array(start, dtype=float)
    product = IDENTITY.copy()
    det = 1.0 + 0.0j
    flat_identity = np.concatenate((IDENTITY.real.ravel(), IDENTITY.imag.ravel()))
    for lo, hi in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(
            rhs,
            (lo, hi),
            np.concatenate((state, flat_identity)),
            method=tol.ode_method,
            rtol=tol.ode_rtol,
            atol=tol.ode_atol,
        )
        if not sol.success:
            raise IntegrationFailure(
                f"Linearized integration failed on [{lo}, {hi}]: {sol.message}"
            )
        end = sol.y[:, -1]
        segment = (end[2:6] + 1j * end[6:10]).reshape(2, 2)
        product = segment @ product
        det *= segment[0, 0] * segment[1, 1] - segment[0, 1] * segment[1, 0]
        state = end[:2]
    return product, det


def fundamental_matrix(
    wave: WaveProfile, lam: complex, z: float, tol: Optional[Tolerances] = None
) -> np.ndarray:
    """F(z, lambda) with F(0, lambda) = I"""
    tol = resolve(tol)
    if not 0.0 <= z <= wave.T * (1.0 + 1e-12):
        raise InvalidConfig(f"z = {z} lies outside [0, T = {wave.T}]")
    if z == 0.0:
        return IDENTITY.copy()
    segments = max(1, math.ceil(shooting_segments(wave, _lambda_growth(wave, lam)) * z / wave.T))
    matrix, _ = _propagate(
        wave, _linearized(wave, lam), (wave.u0, wave.v0), 0.0, z, segments, tol
    )
    return matrix


def transfer_matrix(
    wave: WaveProfile,
    lam: complex,
    z0: float,
    z1: float,
    tol: Optional[Tolerances] = None,
) -> np.ndarray:
    """Propagator from z0 to z1, started from the profile state at z0"""
    tol = resolve(tol)
    start = tuple(float(x) for x in wave.state(z0))
    segments = max(1, math.ceil(shooting_segments(wave, _lambda_growth(wave, lam)) * (z1 - z0) / wave.T))
    matrix, _ = _propagate(wave, _linearized(wave, lam), start, z0, z1, segments, tol)
    return matrix


def _abel_check(residual: float, lam: complex, tol: Tolerances) -> None:
    if residual > tol.abel_alarm:
        raise AbelViolation(
            f"Abel residual {residual:.3e} at lambda = {lam}",
            {"lambda": [lam.real, lam.imag], "residual": residual},
        )
    if residual > tol.abel_tol:
        logger.warning(f"Abel residual {residual:.3e} at lambda = {lam} exceeds {tol.abel_tol}")


def monodromy(
    wave: WaveProfile,
    lam: complex,
    tol: Optional[Tolerances] = None,
    method: str = "coupled",
) -> Monodromy:
    tol = resolve(tol)
    lam = complex(lam)
    expected = np.exp(2.0 * wave.q * lam)
    if method == "coupled":
        segments = shooting_segments(wave, _lambda_growth(wave, lam))
        matrix, det = _propagate(
            wave, _linearized(wave, lam), (wave.u0, wave.v0), 0.0, wave.T, segments, tol
        )
        logger.debug(f"monodromy at {lam}: {segments} shooting segments")
    elif method == "magnus":
        matrix = FastMonodromy.for_profile(wave, tol).matrices([lam])[0]
        det = matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
    else:
        raise InvalidConfig(f"Unknown monodromy method {method!r}")
    residual = float(abs(det - expected) / abs(expected))
    _abel_check(residual, lam, tol)
    return Monodromy(lam=lam, matrix=matrix, q=wave.q, abel_residual=residual)


# ----------------------------------------------------------------------
# Series at lambda = 0
# ----------------------------------------------------------------------


def _zero_solution(wave: WaveProfile, tol: Tolerances):
    """Wave, F(z, 0) and the running integral of F^{-1} sigma_- F in one solve"""
    gap = wave.gap
    potential = wave.potential

    def rhs(z, y):
        f, g, F11, F12, F21, F22 = y[:6]
        curvature = -potential.eval(f, 2) / gap
        return [
            g,
            -potential.eval(f, 1) / gap,
            F21,
            F22,
            curvature * F11,
            curvature * F12,
            -F11 * F12,
            -F12 * F12,
            F11 * F11,
        ]

    sol = solve_ivp(
        rhs,
        (0.0, wave.T),
        [wave.u0, wave.v0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        method=tol.ode_method,
        rtol=tol.ode_rtol,
        atol=tol.ode_atol,
        dense_output=True,
    )
    if not sol.success:
        raise IntegrationFailure(f"lambda = 0 integration failed: {sol.message}")
    return sol


def monodromy_series(wave: WaveProfile, tol: Optional[Tolerances] = None) -> MonodromySeries:
    tol = resolve(tol)
    key = ("series", tol)
    with _CACHE_LOCK:
        cached = _CACHE.setdefault(wave, {}).get(key)
    if cached is not None:
        return cached

    end = _zero_solution(wave, tol).y[:, -1]
    M0 = np.array([[end[2], end[3]], [end[4], end[5]]], dtype=complex)
    J = np.array([[end[6], end[7]], [end[8], -end[6]]], dtype=complex)
    gap, q, c = wave.gap, wave.q, wave.c
    commutator = SIGMA_MINUS @ M0 - M0 @ SIGMA_MINUS
    M1 = q * M0 + c * commutator / gap
    M2 = (
        0.5 * q * q * M0
        + (c * q / gap) * commutator
        - (c * c / gap**2) * (SIGMA_MINUS @ M0 @ SIGMA_MINUS)
        + (M0 @ J) / gap**2
    )
    series = MonodromySeries(M0=M0, M1=M1, M2=M2, J=J, q=q, gap=gap)
    logger.debug(f"series at lambda=0: M12={series.m12!r} kappa={series.kappa!r}")
    with _CACHE_LOCK:
        _CACHE.setdefault(wave, {})[key] = series
    return series


def lambda_zero_column(wave: WaveProfile, z, tol: Optional[Tolerances] = None) -> np.ndarray:
    """First column of F(z, 0), proportional to (f_z, f_zz)"""
    sol = _zero_solution(wave, resolve(tol))
    return sol.sol(z)[2:6:2]


# ----------------------------------------------------------------------
# Hill's equation
# ----------------------------------------------------------------------


def hill_evaluation(
    wave: WaveProfile,
    nu: complex,
    tol: Optional[Tolerances] = None,
    method: str = "coupled",
) -> HillEvaluation:
    tol = resolve(tol)
    nu = complex(nu)
    if method == "coupled":
        segments = shooting_segments(wave, math.sqrt(abs(nu)))
        matrix, _ = _propagate(
            wave, _hill(wave, nu), (wave.u0, wave.v0), 0.0, wave.T, segments, tol
        )
    elif method == "magnus":
        matrix = hill_propagator(wave, tol).matrices([nu])[0]
    else:
        raise InvalidConfig(f"Unknown Hill method {method!r}")
    det = matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
    return HillEvaluation(
        nu=nu,
        matrix=matrix,
        discriminant=complex(matrix[0, 0] + matrix[1, 1]),
        det_residual=float(abs(det - 1.0)),
    )


def hill_discriminant_slope(wave: WaveProfile, tol: Optional[Tolerances] = None) -> HillSlope:
    """d Delta^H / d nu at 0 from M12(0) times the integral of F11(y, 0)^2"""
    tol = resolve(tol)
    value = monodromy_series(wave, tol).hill_slope
    plus, minus = hill_propagator(wave, tol).discriminant([SLOPE_STEP, -SLOPE_STEP])
    slope = HillSlope(value=value, finite_difference=float((plus - minus).real / (2.0 * SLOPE_STEP)))
    if abs(value) > tol.degenerate_tol and slope.agreement > 1e-3:
        logger.warning(
            f"Hill slope {value!r} disagrees with its finite difference {slope.finite_difference!r}"
        )
    return slope


class HillPropagator:
    """
    Fourth-order Magnus propagator for y'' + P(z) y = nu y over one period.

    P is sampled once at the two Gauss nodes of every step; each step
    exponential is unimodular, so det M^H = 1 up to rounding.
    """

    def __init__(self, period: float, p_left: np.ndarray, p_right: np.ndarray):
        self.period = float(period)
        self.steps = len(p_left)
        self.h = self.period / self.steps
        self._p_mean = 0.5 * (p_left + p_right)
        self._commutator = (math.sqrt(3.0) * self.h**2 / 12.0) * (p_right - p_left)
        self._max_potential = float(np.max(np.abs(np.concatenate((p_left, p_right)))))

    @classmethod
    def from_profile(cls, wave: WaveProfile, tol: Optional[Tolerances] = None) -> "HillPropagator":
        tol = resolve(tol)
        wanted = max(MIN_MAGNUS_STEPS, math.ceil(wave.T / tol.magnus_step))
        steps = 1 << max(0, (wanted - 1).bit_length())
        h = wave.T / steps
        base = h * np.arange(steps)
        p_left = wave.hill_potential(base + (0.5 - GAUSS_OFFSET) * h)
        p_right = wave.hill_potential(base + (0.5 + GAUSS_OFFSET) * h)
        logger.debug(f"Hill propagator with {steps} Magnus steps (h={h:.3e})")
        return cls(wave.T, np.asarray(p_left), np.asarray(p_right))

    @classmethod
    def constant(cls, value: float, period: float, steps: int = MIN_MAGNUS_STEPS) -> "HillPropagator":
        samples = np.full(steps, float(value))
        return cls(period, samples, samples)

    @property
    def max_potential(self) -> float:
        return self._max_potential

    def _chunk(self, nus: np.ndarray) -> np.ndarray:
        h = self.h
        shift = h * (nus[:, None] - self._p_mean[None, :])
        w = np.broadcast_to(self._commutator[None, :], shift.shape).astype(complex)
        s2 = w * w + h * shift
        s = np.sqrt(s2)
        small = np.abs(s) < SERIES_SWITCH
        safe = np.where(small, 1.0, s)
        ch = np.where(small, 1.0 + s2 / 2.0 + s2 * s2 / 24.0, np.cosh(safe))
        sh = np.where(small, 1.0 + s2 / 6.0 + s2 * s2 / 120.0, np.sinh(safe) / safe)
        steps = np.empty(shift.shape + (2, 2), dtype=complex)
        steps[..., 0, 0] = ch + sh * w
        steps[..., 0, 1] = sh * h
        steps[..., 1, 0] = sh * shift
        steps[..., 1, 1] = ch - sh * w
        while steps.shape[1] > 1:
            if steps.shape[1] % 2:
                tail = steps[:, -1:]
                steps = np.concatenate(
                    (steps[:, 1:-1:2] @ steps[:, 0:-1:2], tail), axis=1
                )
            else:
                steps = steps[:, 1::2] @ steps[:, 0::2]
        return steps[:, 0]

    def matrices(self, nus) -> np.ndarray:
        """M^H(nu) for every nu, shape (n, 2, 2)"""
        nus = np.atleast_1d(np.asarray(nus, dtype=complex))
        blocks = [
            self._chunk(nus[i : i + MAGNUS_CHUNK]) for i in range(0, len(nus), MAGNUS_CHUNK)
        ]
        if not blocks:
            return np.empty((0, 2, 2), dtype=complex)
        return np.concatenate(blocks, axis=0)

    def discriminant(self, nus) -> np.ndarray:
        m = self.matrices(nus)
        return m[:, 0, 0] + m[:, 1, 1]

    def evaluate(self, nu: complex) -> HillEvaluation:
        matrix = self.matrices([nu])[0]
        det = matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
        return HillEvaluation(
            nu=complex(nu),
            matrix=matrix,
            discriminant=complex(matrix[0, 0] + matrix[1, 1]),
            det_residual=float(abs(det - 1.0)),
        )


class FastMonodromy:
    """M(lambda) = e^{q lambda} L M^H(nu) L^{-1} evaluated through a HillPropagator"""

    def __init__(self, wave: WaveProfile, propagator: HillPropagator):
        self.wave = wave
        self.propagator = propagator
        self.gap = wave.gap
        self.c = wave.c
        self.q = wave.q

    @classmethod
    def for_profile(cls, wave: WaveProfile, tol: Optional[Tolerances] = None) -> "FastMonodromy":
        return cls(wave, hill_propagator(wave, tol))

    def nu(self, lams) -> np.ndarray:
        lams = np.asarray(lams, dtype=complex)
        return (lams / self.gap) ** 2

    def matrices(self, lams) -> np.ndarray:
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        hill = self.propagator.matrices(self.nu(lams))
        alpha = self.c * lams / self.gap
        scale = np.exp(self.q * lams)
        a, b = hill[:, 0, 0], hill[:, 0, 1]
        cc, d = hill[:, 1, 0], hill[:, 1, 1]
        # L M L^{-1} with L = [[1, 0], [alpha, 1]]
        out = np.empty_like(hill)
        out[:, 0, 0] = a - alpha * b
        out[:, 0, 1] = b
        out[:, 1, 0] = alpha * a + cc - alpha * (alpha * b + d)
        out[:, 1, 1] = alpha * b + d
        return scale[:, None, None] * out

    def traces(self, lams) -> np.ndarray:
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        return np.exp(self.q * lams) * self.propagator.discriminant(self.nu(lams))


# ----------------------------------------------------------------------
# Per-profile cache
# ----------------------------------------------------------------------

_CACHE: "weakref.WeakKeyDictionary[WaveProfile, Dict[Any, Any]]" = weakref.WeakKeyDictionary()
_CACHE_LOCK = threading.Lock()


def hill_propagator(wave: WaveProfile, tol: Optional[Tolerances] = None) -> HillPropagator:
    tol = resolve(tol)
    key = ("magnus", tol.magnus_step)
    with _CACHE_LOCK:
        cached = _CACHE.setdefault(wave, {}).get(key)
    if cached is not None:
        return cached
    propagator = HillPropagator.from_profile(wave, tol)
    with _CACHE_LOCK:
        _CACHE.setdefault(wave, {})[key] = propagator
    return propagator


def _multiplier_distance(reference: np.ndarray, other: np.ndarray) -> float:
    keep = max(abs(reference[0] - other[0]), abs(reference[1] - other[1]))
    swap = max(abs(reference[0] - other[1]), abs(reference[1] - other[0]))
    return float(min(keep, swap))


def fast_path_check(wave: WaveProfile, tol: Optional[Tolerances] = None) -> FastPathCheck:
    """
    Run the coupled integration at FAST_PATH_PROBES and compare its
    eigenvalues with the Magnus multipliers.

    The coupled runs carry the Abel check; a relative multiplier
    disagreement above ``fast_path_tol`` raises AbelViolation.
    """
    tol = resolve(tol)
    key = ("fast_path", tol.magnus_step, tol.ode_rtol, tol.fast_path_tol)
    with _CACHE_LOCK:
        cached = _CACHE.setdefault(wave, {}).get(key)
    if cached is not None:
        return cached
    fast = FastMonodromy.for_profile(wave, tol)
    worst = 0.0
    worst_lam = FAST_PATH_PROBES[0]
    abel = 0.0
    for lam in FAST_PATH_PROBES:
        coupled = monodromy(wave, lam, tol, method="coupled")
        abel = max(abel, coupled.abel_residual)
        reference = np.linalg.eigvals(coupled.matrix)
        magnus = np.linalg.eigvals(fast.matrices([lam])[0])
        scale = max(1.0, float(np.max(np.abs(reference))))
        distance = _multiplier_distance(reference, magnus) / scale
        if distance >= worst:
            worst, worst_lam = distance, lam
    if worst > tol.fast_path_tol:
        raise AbelViolation(
            f"Magnus multipliers differ from the coupled monodromy by {worst:.3e} at lambda = {worst_lam}",
            {"lambda": [worst_lam.real, worst_lam.imag], "disagreement": worst},
        )
    logger.debug(f"fast path disagreement {worst:.3e}, coupled Abel residual {abel:.3e}")
    check = FastPathCheck(probes=FAST_PATH_PROBES, disagreement=worst, abel_residual=abel)
    with _CACHE_LOCK:
        _CACHE.setdefault(wave, {})[key] = check
    return check
