"""
Whitham modulation system and the weakly nonlinear NLS reduction.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from .exceptions import EvanescentCarrier, NotEquilibrium, SingularSystem
from .floquet import monodromy_series
from .potential import Potential
from .tolerances import Tolerances, resolve
from .wavetrain import (
    WaveParameters,
    WaveProfile,
    averaged_W,
    averaged_W_phase,
    period_energy_derivative,
    profile,
)

logger = logging.getLogger(__name__)

AVERAGE_TOL = 1e-6
SINGULAR_TOL = 1e-10
EQUILIBRIUM_TOL = 1e-10
CURVATURE_TOL = 1e-8


class WhithamKind(str, Enum):
    HYPERBOLIC = "Hyperbolic"
    ELLIPTIC = "Elliptic"
    DEGENERATE = "Degenerate"
    SINGULAR = "Singular"


class NlsKind(str, Enum):
    FOCUSING = "Focusing"
    DEFOCUSING = "Defocusing"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class AveragedQuantities:
    D1: float
    D2: float
    F1: float
    F2: float
    direct: Dict[str, float]
    mismatch: float

    @property
    def consistent(self) -> bool:
        return self.mismatch <= AVERAGE_TOL

    def as_dict(self) -> Dict[str, Any]:
        return {
            "D1": self.D1,
            "D2": self.D2,
            "F1": self.F1,
            "F2": self.F2,
            "direct": dict(self.direct),
            "mismatch": self.mismatch,
            "consistent": self.consistent,
        }


@dataclass(frozen=True)
class WhithamClassification:
    W: float
    W_E: float
    W_EE: float
    U: np.ndarray
    velocities: Tuple[complex, complex]
    kind: WhithamKind
    averaged: AveragedQuantities
    W_profile: float

    @property
    def W_residual(self) -> float:
        """Relative gap between the phase-plane and profile values of W"""
        return abs(self.W - self.W_profile) / max(abs(self.W), 1e-300)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "W": self.W,
            "W_E": self.W_E,
            "W_EE": self.W_EE,
            "U": self.U.tolist(),
            "velocities": [[v.real, v.imag] for v in self.velocities],
            "kind": self.kind.value,
            "averaged": self.averaged.as_dict(),
            "W_residual": self.W_residual,
        }


@dataclass(frozen=True)
class NlsCoefficients:
    u0: float
    k: float
    omega: float
    group_velocity: float
    dispersion: float
    beta: float
    kind: NlsKind

    @property
    def beta_dispersion(self) -> float:
        return self.beta * self.dispersion

    def as_dict(self) -> Dict[str, Any]:
        return {
            "u0": self.u0,
            "k": self.k,
            "omega": self.omega,
            "group_velocity": self.group_velocity,
            "dispersion": self.dispersion,
            "beta": self.beta,
            "kind": self.kind.value.lower(),
        }


@dataclass(frozen=True)
class NlsRhoCheck:
    coefficients: NlsCoefficients
    E: float
    c: float
    rho: int
    te_sign: int

    @property
    def consistent(self) -> bool:
        return _sign(self.coefficients.beta_dispersion) == -self.rho

    def as_dict(self) -> Dict[str, Any]:
        return {
            "nls": self.coefficients.as_dict(),
            "E": self.E,
            "c": self.c,
            "rho": self.rho,
            "te_sign": self.te_sign,
            "consistent": self.consistent,
        }


def _sign(x: float) -> int:
    return 1 if x > 0 else (-1 if x < 0 else 0)


# ----------------------------------------------------------------------
# Whitham
# ----------------------------------------------------------------------


def averaged_quantities(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
    wave: Optional[WaveProfile] = None,
    W: Optional[float] = None,
) -> AveragedQuantities:
    """Period averages of the energy and momentum densities and fluxes"""
    tol = resolve(tol)
    wave = wave or profile(potential, params, family, tol)
    W = averaged_W_phase(potential, params, wave.family, tol) if W is None else W
    E, c, gap, T = params.E, params.c, params.gap, wave.T
    kinetic = W / (gap * T)

    D1 = kinetic + E
    D2 = F1 = c * kinetic
    F2 = c * c * kinetic - E

    half = 0.5 * (c * c + 1.0)

    def mean(func) -> float:
        value, _ = quad(func, 0.0, T, epsabs=1e-13, epsrel=1e-11, limit=200)
        return value / T

    def slope2(z):
        return wave.f_z(z) ** 2

    def energy(z):
        return potential.eval(wave.f(z), 0)

    s2, v = mean(slope2), mean(energy)
    direct = {
        "D1": half * s2 + v,
        "D2": c * s2,
        "F1": c * s2,
        "F2": half * s2 - v,
    }
    represented = {"D1": D1, "D2": D2, "F1": F1, "F2": F2}
    mismatch = max(
        abs(direct[key] - represented[key]) / max(1.0, abs(represented[key]))
        for key in represented
    )
    if mismatch > AVERAGE_TOL:
        logger.warning(
            f"Averaged densities disagree by {mismatch:.3e} at E={E}, c={c}"
        )
    return AveragedQuantities(D1=D1, D2=D2, F1=F1, F2=F2, direct=direct, mismatch=mismatch)


def whitham_matrix(c: float, W: float, T: float, T_E: float) -> np.ndarray:
    gap = c * c - 1.0
    denominator = c * c * T * T + W * T_E
    scale = c * c * T * T + abs(W * T_E)
    if abs(denominator) <= SINGULAR_TOL * scale:
        raise SingularSystem(
            "Whitham system is singular: c^2 W_E^2 + W W_EE vanishes, as does D_ll(0, 1)",
            {"denominator": denominator, "W": W, "T": T, "T_E": T_E},
        )
    diagonal = (T * T + W * T_E) * c
    return np.array(
        [[diagonal, -W * T], [gap * gap * T * T_E, diagonal]], dtype=float
    ) / denominator


def whitham_velocities(c: float, W: float, T: float, T_E: float) -> Tuple[complex, complex]:
    """Closed-form eigenvalues of U, ordered by real then imaginary part"""
    gap = c * c - 1.0
    denominator = c * c * T * T + W * T_E
    root = np.sqrt(complex(-(gap**2) * W * T * T * T_E))
    centre = (T * T + W * T_E) * c
    pair = ((centre + root) / denominator, (centre - root) / denominator)
    return tuple(sorted((complex(v) for v in pair), key=lambda v: (v.real, v.imag)))


def whitham_classify(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
    wave: Optional[WaveProfile] = None,
    T_E: Optional[float] = None,
) -> WhithamClassification:
    """Type of the averaged system for (E, c); W_E = T and W_EE = T_E exactly"""
    tol = resolve(tol)
    wave = wave or profile(potential, params, family, tol)
    T = wave.T
    if T_E is None:
        T_E = period_energy_derivative(potential, params, wave.family, tol)
    W = averaged_W_phase(potential, params, wave.family, tol)
    W_profile = averaged_W(potential, params, wave.family, tol, wave=wave)
    averaged = averaged_quantities(potential, params, wave.family, tol, wave=wave, W=W)
    c = params.c

    U = whitham_matrix(c, W, T, T_E)
    velocities = whitham_velocities(c, W, T, T_E)
    numeric = sorted((complex(v) for v in np.linalg.eigvals(U)), key=lambda v: (v.real, v.imag))
    drift = max(abs(a - b) for a, b in zip(velocities, numeric))
    if drift > 1e-8 * max(1.0, max(abs(v) for v in velocities)):
        logger.warning(f"Closed-form Whitham velocities drift {drift:.3e} from eigvals(U)")

    if abs(T_E) <= tol.degenerate_tol * max(1.0, T):
        kind = WhithamKind.DEGENERATE
    elif W * T_E < 0:
        kind = WhithamKind.HYPERBOLIC
    else:
        kind = WhithamKind.ELLIPTIC
    logger.info(f"Whitham E={params.E} c={c}: {kind.value}, velocities {velocities}")
    return WhithamClassification(
        W=W,
        W_E=T,
        W_EE=T_E,
        U=U,
        velocities=velocities,
        kind=kind,
        averaged=averaged,
        W_profile=W_profile,
    )


# ----------------------------------------------------------------------
# NLS reduction
# ----------------------------------------------------------------------


def _equilibrium_derivatives(potential: Potential, u0: float) -> Tuple[float, float, float]:
    slope = potential.eval(u0, 1)
    d2, d3, d4 = (potential.eval(u0, k) for k in (2, 3, 4))
    if abs(slope) > EQUILIBRIUM_TOL or abs(d2) <= CURVATURE_TOL:
        raise NotEquilibrium(
            f"u0 = {u0} is not a non-degenerate equilibrium (V'={slope:.3e}, V''={d2:.3e})",
            {"u0": u0, "first_derivative": slope, "second_derivative": d2},
        )
    return d2, d3, d4


def nls_coefficients(
    potential: Potential, u0: float, k: float, tol: Optional[Tolerances] = None
) -> NlsCoefficients:
    """Carrier dispersion and the cubic coefficient of the envelope equation"""
    d2, d3, d4 = _equilibrium_derivatives(potential, u0)
    omega2 = k * k + d2
    if omega2 <= 0.0:
        raise EvanescentCarrier(
            f"omega^2 = k^2 + V''(u0) = {omega2} is not positive", {"k": k, "u0": u0}
        )
    omega = math.sqrt(omega2)
    numerator = 5.0 * d3 * d3 - 3.0 * d2 * d4
    beta = numerator / (12.0 * omega * d2)
    dispersion = d2 / omega**3
    if abs(numerator) <= 1e-12 * (5.0 * d3 * d3 + 3.0 * abs(d2 * d4)):
        kind = NlsKind.DEGENERATE
    elif beta * dispersion > 0:
        kind = NlsKind.FOCUSING
    else:
        kind = NlsKind.DEFOCUSING
    return NlsCoefficients(
        u0=float(u0),
        k=float(k),
        omega=omega,
        group_velocity=k / omega,
        dispersion=dispersion,
        beta=beta,
        kind=kind,
    )


def near_equilibrium_te_sign(potential: Potential, u0: float) -> int:
    """Sign of (c^2 - 1) T_E for waves shrinking onto the equilibrium u0"""
    d2, d3, d4 = _equilibrium_derivatives(potential, u0)
    return _sign(5.0 * d3 * d3 - 3.0 * d2 * d4)


def near_equilibrium_params(
    potential: Potential, u0: float, k: float, tol: Optional[Tolerances] = None
) -> WaveParameters:
    """(E, c) of the small wave about u0 travelling at the carrier phase speed"""
    tol = resolve(tol)
    coefficients = nls_coefficients(potential, u0, k, tol)
    d2 = potential.eval(u0, 2)
    E = potential.eval(u0, 0) + math.copysign(tol.near_equilibrium_offset, d2)
    return WaveParameters(E, coefficients.omega / k)


def nls_rho_check(
    potential: Potential, u0: float, k: float, tol: Optional[Tolerances] = None
) -> NlsRhoCheck:
    """Compare sgn(beta omega'') with -rho of the near-equilibrium wave"""
    tol = resolve(tol)
    coefficients = nls_coefficients(potential, u0, k, tol)
    params = near_equilibrium_params(potential, u0, k, tol)
    wave = profile(potential, params, potential.family_index(u0), tol)
    m12 = monodromy_series(wave, tol).m12
    T_E = period_energy_derivative(potential, params, wave.family, tol)
    check = NlsRhoCheck(
        coefficients=coefficients,
        E=params.E,
        c=params.c,
        rho=_sign(m12),
        te_sign=_sign(params.gap * T_E),
    )
    if not check.consistent:
        logger.warning(f"NLS type {coefficients.kind.value} disagrees with rho={check.rho}")
    return check


def near_equilibrium_whitham_limit(c: float, T: float, T_E: float) -> np.ndarray:
    """Limit of U as W -> 0: [[1/c, 0], [(c^2 - 1)^2 T_E / (c^2 T), 1/c]]"""
    gap = c * c - 1.0
    return np.array([[1.0 / c, 0.0], [gap * gap * T_E / (c * c * T), 1.0 / c]])
