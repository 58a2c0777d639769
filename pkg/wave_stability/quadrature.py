"""
Double-exponential (tanh-sinh) quadrature for endpoint-singular integrands.

The integrand receives the node positions together with their exact
distances to both endpoints, so that singular factors such as
1/sqrt(E - V(x)) can be evaluated without cancellation near the ends.
"""

import logging
from typing import Callable

import numpy as np

from .exceptions import QuadratureFailure

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * np.pi

Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _nodes(t: np.ndarray, half: float, mid: float):
    u = HALF_PI * np.sinh(t)
    ch = np.cosh(u)
    x = mid + half * np.tanh(u)
    left = half * np.exp(u) / ch
    right = half * np.exp(-u) / ch
    weight = half * HALF_PI * np.cosh(t) / ch**2
    return x, left, right, weight


def tanh_sinh(
    func: Integrand,
    a: float,
    b: float,
    tol: float = 1e-11,
    max_level: int = 12,
    t_max: float = 4.5,
) -> float:
    """Integrate func over (a, b), halving the step until two levels agree"""
    if not b > a:
        raise QuadratureFailure(f"Invalid integration interval ({a}, {b})")
    half, mid = 0.5 * (b - a), 0.5 * (a + b)

    def partial_sum(t: np.ndarray) -> float:
        x, left, right, weight = _nodes(t, half, mid)
        values = np.asarray(func(x, left, right), dtype=float)
        terms = weight * values
        if not np.all(np.isfinite(terms)):
            raise QuadratureFailure(
                "Non-finite integrand values", {"interval": [a, b]}
            )
        return float(np.sum(terms))

    h = 0.5
    k = np.arange(-int(t_max / h), int(t_max / h) + 1)
    total = partial_sum(k * h)
    estimate = h * total
    for level in range(1, max_level + 1):
        h *= 0.5
        bound = int(t_max / h)
        k = np.arange(-bound, bound + 1)
        total += partial_sum(k[k % 2 != 0] * h)
        refined = h * total
        if abs(refined - estimate) <= tol * max(1.0, abs(refined)):
            logger.debug(f"tanh-sinh converged at level {level}: {refined!r}")
            return refined
        estimate = refined
    raise QuadratureFailure(
        f"tanh-sinh did not reach tolerance {tol} after {max_level} levels",
        {"interval": [a, b], "last_estimate": estimate},
    )
