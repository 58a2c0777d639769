"""
Assembly of stability reports, scan rows and their JSON/CSV renderings.
"""

import json
import logging
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np
import pandas as pd

from . import __version__
from .exceptions import (
    UNEXPECTED_NUMERICS,
    InvalidConfig,
    NoGapFound,
    SingularSystem,
    UnexpectedNumerics,
    WaveStabilityError,
)
from .floquet import fast_path_check
from .modulation import whitham_classify
from .potential import Potential
from .spectrum import (
    classify_modulational,
    find_unstable_point,
    hill_spectrum,
    indices,
    parallel_map,
    real_eigenvalue_certificate,
    real_periodic_eigenvalues,
    trace_branches,
)
from .tolerances import Tolerances, resolve
from .wavetrain import (
    WaveClass,
    WaveParameters,
    averaged_W_phase,
    classify,
    period_data,
    profile,
)

logger = logging.getLogger(__name__)

SCHEMA = 1
SCAN_COLUMNS = [
    "E",
    "c",
    "region",
    "family",
    "rho",
    "gamma",
    "whitham_kind",
    "v1_re",
    "v1_im",
    "v2_re",
    "v2_im",
    "error",
]
CURVE_COLUMNS = ["theta", "re_lambda", "im_lambda", "branch", "abs_evans"]
PROFILE_COLUMNS = ["z", "f", "f_z", "energy_residual"]
SCAN_MARGIN = 1e-3


# ----------------------------------------------------------------------
# Single-wave report
# ----------------------------------------------------------------------


def verdict(klass: WaveClass, stability: Any, certificates: Sequence[Any]) -> str:
    if klass is WaveClass.SUBLUMINAL_ROTATIONAL:
        return "spectrally stable"
    if klass is not WaveClass.SUPERLUMINAL_LIBRATIONAL:
        return "spectrally unstable"
    # T_E > 0 is rho = -1 here; a certificate means a negative Hill gap was found
    if certificates or stability.T_E > 0:
        return "spectrally unstable"
    return "undetermined"


def _check(name: str, residual: float, tolerance: float) -> Dict[str, Any]:
    return {
        "name": name,
        "residual": residual,
        "tolerance": tolerance,
        "passed": bool(residual <= tolerance),
    }


def _w_energy_residual(potential: Potential, params: WaveParameters, family: int, T: float, tol: Tolerances) -> float:
    distance = min(abs(params.E - v) for v in potential.critical_values)
    h = tol.te_relative_step * distance
    upper = averaged_W_phase(potential, WaveParameters(params.E + h, params.c), family, tol)
    lower = averaged_W_phase(potential, WaveParameters(params.E - h, params.c), family, tol)
    return abs((upper - lower) / (2.0 * h) - T) / T


def build_report(
    potential: Potential,
    params: WaveParameters,
    family: Optional[int] = None,
    tol: Optional[Tolerances] = None,
    trace_steps: int = 0,
    threads: int = 1,
) -> Dict[str, Any]:
    """Every diagnostic for one (E, c), with the verdict for its wave class"""
    tol = resolve(tol)
    wave = profile(potential, params, family, tol)
    data = period_data(potential, params, wave.family, tol, wave=wave)
    stability = indices(wave, tol)
    modulational = classify_modulational(stability, tol)

    try:
        whitham = whitham_classify(potential, params, wave.family, tol, wave=wave, T_E=data.T_E)
        whitham_summary = whitham.as_dict()
    except SingularSystem as exc:
        whitham = None
        whitham_summary = {"kind": "Singular", "message": exc.message}

    certificates = []
    notes = []
    real_roots = real_periodic_eigenvalues(wave, tol=tol)
    antiperiodic_roots = real_periodic_eigenvalues(wave, antiperiodic=True, tol=tol)
    certificates.extend(real_eigenvalue_certificate(wave, lam, tol) for lam in real_roots)
    if wave.klass.superluminal:
        try:
            certificates.append(find_unstable_point(wave, tol))
        except NoGapFound as exc:
            notes.append(exc.message)

    hill = hill_spectrum(wave, tol=tol, threads=threads)
    fast_path = fast_path_check(wave, tol)
    checks = [
        _check("energy_residual", wave.energy_residual, tol.energy_residual_tol),
        _check("closure", wave.closure_residual, tol.closure_tol),
        _check("abel", fast_path.abel_residual, tol.abel_tol),
        _check("fast_path", fast_path.disagreement, tol.fast_path_tol),
        _check("delta_identity", data.identity_residual, 1e-4),
        _check("evans_curvature", stability.d2_residual, 1e-4),
        _check(
            "W_E_equals_T",
            _w_energy_residual(potential, params, wave.family, wave.T, tol),
            1e-4,
        ),
    ]
    if whitham is not None:
        checks.append(_check("W_phase_vs_profile", whitham.W_residual, 1e-6))
        checks.append(_check("averaged_densities", whitham.averaged.mismatch, 1e-6))

    report: Dict[str, Any] = {
        "schema": SCHEMA,
        "version": __version__,
        "config": {
            "potential": potential.to_config(),
            "E": params.E,
            "c": params.c,
            "family": wave.family,
            "tolerances": tol.as_dict(),
        },
        "wave": {
            "class": wave.klass.value,
            "T": wave.T,
            "T_E": data.T_E,
            "delta": data.delta,
            "u0": wave.u0,
            "v0": wave.v0,
            "q": wave.q,
            "kappa": stability.kappa,
        },
        "indices": stability.as_dict(),
        "modulational": modulational.value,
        "whitham": whitham_summary,
        "real_eigenvalues": {"periodic": real_roots, "antiperiodic": antiperiodic_roots},
        "certificates": [cert.as_dict() for cert in certificates],
        "hill": {
            "bands": len(hill.bands),
            "gaps": [list(g) for g in hill.gaps],
            "negative_gaps": [list(g) for g in hill.negative_gaps()],
            "periodic": hill.periodic_eigenvalues,
        },
        "checks": checks,
        "notes": notes,
    }
    if trace_steps > 0:
        curves = {}
        signs = (1.0, -1.0)
        traced = parallel_map(lambda sign: trace_branches(wave, sign * math.pi, trace_steps, tol), signs, threads)
        for sign, pair in zip(signs, traced):
            for curve in pair:
                key = f"{curve.branch.value}{'+' if sign > 0 else '-'}"
                curves[key] = {
                    "points": len(curve.points),
                    "max_abs_real": curve.max_real_part,
                    "complete": curve.complete,
                    "diagnostic": curve.diagnostic,
                }
        report["curves"] = curves
    report["verdict"] = verdict(wave.klass, stability, certificates)
    logger.info(f"report E={params.E} c={params.c}: {report['verdict']}")
    return report


# ----------------------------------------------------------------------
# Grid scans
# ----------------------------------------------------------------------


def scan_row(
    potential: Potential,
    E: float,
    c: float,
    tol: Optional[Tolerances] = None,
) -> Dict[str, Any]:
    """One CSV row; errors are recorded in the row instead of raised"""
    tol = resolve(tol)
    row: Dict[str, Any] = {column: None for column in SCAN_COLUMNS}
    row.update({"E": float(E), "c": float(c), "error": ""})
    params = WaveParameters(float(E), float(c))
    try:
        cls = classify(potential, params, tol=tol)
        row.update({"region": cls.klass.value, "family": cls.family})
        wave = profile(potential, params, cls.family, tol)
        stability = indices(wave, tol)
        row.update({"rho": stability.rho, "gamma": stability.gamma})
        try:
            whitham = whitham_classify(potential, params, cls.family, tol, wave=wave, T_E=stability.T_E)
        except SingularSystem:
            row["whitham_kind"] = "Singular"
        else:
            (v1, v2) = whitham.velocities
            row.update(
                {
                    "whitham_kind": whitham.kind.value,
                    "v1_re": v1.real,
                    "v1_im": v1.imag,
                    "v2_re": v2.real,
                    "v2_im": v2.imag,
                }
            )
    except WaveStabilityError as exc:
        logger.debug(f"scan row E={E} c={c}: {exc.code}")
        row["error"] = exc.code
    except UNEXPECTED_NUMERICS as exc:
        failure = UnexpectedNumerics.wrap(exc)
        logger.warning(f"scan row E={E} c={c}: {failure.message}")
        row["error"] = failure.code
    return row


def parse_grid(grid: Optional[str]) -> List[float]:
    """'start:stop:num' or a comma separated list; empty means no points"""
    if grid is None or not str(grid).strip():
        return []
    text = str(grid).strip()
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return [float(x) for x in np.linspace(float(start), float(stop), int(num))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidConfig(f"Cannot parse grid {grid!r}") from exc


def admissible(potential: Potential, E: float, c: float, margin: float = SCAN_MARGIN) -> bool:
    if abs(c * c - 1.0) < margin:
        return False
    return all(abs(E - value) >= margin for value in potential.critical_values)


def scan_points(potential: Potential, energies: Iterable[float], speeds: Iterable[float]) -> List[tuple]:
    """(E, c) pairs in E-major order, separatrix and sonic neighbourhoods removed"""
    speeds = list(speeds)
    points = []
    for E in energies:
        for c in speeds:
            if admissible(potential, E, c):
                points.append((float(E), float(c)))
            else:
                logger.debug(f"skipping (E={E}, c={c}) near a separatrix or c^2 = 1")
    return points


def scan_grid(
    potential: Potential,
    energies: Iterable[float],
    speeds: Iterable[float],
    tol: Optional[Tolerances] = None,
    executor: str = "threads",
    threads: int = 4,
) -> List[Dict[str, Any]]:
    tol = resolve(tol)
    points = scan_points(potential, energies, speeds)
    if not points:
        return []
    if executor == "celery":
        from celery import group

        from .tasks import analyze_grid_point

        config = potential.to_config()
        job = group(analyze_grid_point.s(config, E, c, tol.as_dict()) for E, c in points)
        result = job.apply_async()
        return [item.get(disable_sync_subtasks=False) for item in result.results]
    if executor != "threads":
        raise InvalidConfig(f"Unknown scan executor {executor!r}")
    return parallel_map(lambda point: scan_row(potential, point[0], point[1], tol), points, threads)


# ----------------------------------------------------------------------
# Rendering
# ----------------------------------------------------------------------


def render_json(data: Dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def render_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    frame = pd.DataFrame(list(rows), columns=list(columns))
    return frame.to_csv(index=False, float_format="%.17g")


def write_text(text: str, out: Optional[str], stream: TextIO) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        stream.write(text)


def profile_rows(wave, samples: int = 256) -> List[Dict[str, float]]:
    data = wave.samples(samples)
    return [
        {
            "z": float(z),
            "f": float(f),
            "f_z": float(g),
            "energy_residual": float(r),
        }
        for z, f, g, r in zip(data["z"], data["f"], data["f_z"], data["energy_residual"])
    ]
