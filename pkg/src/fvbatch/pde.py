"""User-injectable PDE definition with compressible Euler as the shipped system.

All callbacks are pure and broadcast over leading axes: a state argument of
shape (s,) yields scalar/vector results, shape (..., s) yields batched ones.
The kernel binds the callbacks once at pipeline setup (static dispatch); it
never goes through per-call attribute lookup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NonPhysicalStateError


@dataclass(frozen=True)
class EulerParameters:
    """Ideal-gas closure parameter; gamma = 1.4 models a diatomic gas."""

    gamma: float = 1.4

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")


DEFAULT_EULER = EulerParameters()


def euler_pressure(q: np.ndarray, params: EulerParameters = DEFAULT_EULER) -> np.ndarray | float:
    """p = (gamma - 1) (E_t - |j|^2 / (2 rho))."""
    q = np.asarray(q)
    rho = q[..., 0]
    if np.any(rho <= 0.0):
        raise NonPhysicalStateError("non-positive density in pressure closure")
    mom2 = q[..., 1] * q[..., 1]
    for axis in range(2, q.shape[-1] - 1):
        mom2 = mom2 + q[..., axis] * q[..., axis]
    return (params.gamma - 1.0) * (q[..., -1] - 0.5 * mom2 / rho)


def euler_flux(q: np.ndarray, direction: int, params: EulerParameters = DEFAULT_EULER) -> np.ndarray:
    """Directional flux column (j_n, j_n j / rho + p e_n, (E_t + p) j_n / rho)."""
    q = np.asarray(q)
    s = q.shape[-1]
    d = s - 2
    rho = q[..., 0]
    p = euler_pressure(q, params)
    jn = q[..., 1 + direction]
    out = np.empty_like(q)
    out[..., 0] = jn
    for axis in range(d):
        out[..., 1 + axis] = jn * q[..., 1 + axis] / rho
    out[..., 1 + direction] += p
    out[..., -1] = (q[..., -1] + p) * jn / rho
    return out


def euler_max_eigenvalue(q: np.ndarray, direction: int, params: EulerParameters = DEFAULT_EULER) -> np.ndarray | float:
    """|u_n| + c with sound speed c = sqrt(gamma p / rho)."""
    q = np.asarray(q)
    rho = q[..., 0]
    p = euler_pressure(q, params)
    if np.any(p < 0.0):
        raise NonPhysicalStateError("negative pressure in eigenvalue evaluation")
    c = np.sqrt(params.gamma * p / rho)
    return np.abs(q[..., 1 + direction] / rho) + c


def is_admissible(q: np.ndarray, params: EulerParameters = DEFAULT_EULER) -> bool:
    """Positive density and positive internal energy everywhere."""
    q = np.asarray(q)
    rho = q[..., 0]
    if np.any(rho <= 0.0):
        return False
    mom2 = np.sum(q[..., 1:-1] ** 2, axis=-1)
    return bool(np.all(q[..., -1] - 0.5 * mom2 / rho > 0.0))


def zero_ncp(q: np.ndarray, grad_q: np.ndarray, x, t, direction: int) -> np.ndarray:
    """Non-conservative-product hook for PDEs that have none: the zero state."""
    return np.zeros_like(np.asarray(q))


@dataclass(frozen=True)
class PdeDefinition:
    """Flux, directional max |eigenvalue|, and optional non-conservative product.

    flux(q, x, t, direction) -> state-shaped array
    max_abs_eigenvalue(q, x, t, direction) -> nonnegative, broadcast over rows
    nonconservative_product(q, grad_q, x, t, direction) -> state-shaped array,
       or None when the PDE has no such term (the kernel then skips the step,
       which is bitwise identical to adding zero).
    """

    unknowns: int
    flux: Callable
    max_abs_eigenvalue: Callable
    nonconservative_product: Callable | None = None
    name: str = "pde"

    @property
    def has_ncp(self) -> bool:
        return self.nonconservative_product is not None and self.nonconservative_product is not zero_ncp


def make_euler_pde(dimensions: int, params: EulerParameters = DEFAULT_EULER) -> PdeDefinition:
    """Compressible Euler in 2 or 3 dimensions (s = d + 2 unknowns)."""
    if dimensions not in (2, 3):
        raise ValueError(f"Euler ships in 2 or 3 dimensions, got {dimensions}")

    def flux(q, x, t, direction):
        return euler_flux(q, direction, params)

    def max_abs_eigenvalue(q, x, t, direction):
        return euler_max_eigenvalue(q, direction, params)

    return PdeDefinition(
        unknowns=dimensions + 2,
        flux=flux,
        max_abs_eigenvalue=max_abs_eigenvalue,
        nonconservative_product=None,
        name=f"euler{dimensions}d",
    )


def euler_state(rho: float, velocity: Sequence[float], pressure: float,
                params: EulerParameters = DEFAULT_EULER) -> np.ndarray:
    """Conservative state from primitive (rho, u, p)."""
    velocity = np.asarray(velocity, dtype=np.float64)
    q = np.empty(velocity.size + 2)
    q[0] = rho
    q[1:-1] = rho * velocity
    q[-1] = pressure / (params.gamma - 1.0) + 0.5 * rho * float(velocity @ velocity)
    return q
