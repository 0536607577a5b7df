"""Rigid body with jet control torques in Euler-Poisson form.

State layout ``(omega1, omega2, omega3, nu1, nu2, nu3)``: body angular
velocity and the body-frame projections of a fixed unit vector.  The noise
enters the first two rows multiplicatively as ``omega_i sigma dW``.  The
stabilized block is ``y = (omega1, omega2, nu1, nu2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .generator import ScalarField, diagonal_quadratic
from .sde import InvalidArgumentError, SdeModel

STATE_NAMES = ("omega1", "omega2", "omega3", "nu1", "nu2", "nu3")
Y_INDICES = (0, 1, 3, 4)
#: coordinates whose vanishing defines the zero set of L V
MV_INDICES = (0, 1)
EQUILIBRIUM = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
DEFAULT_X0 = np.array([0.5, -0.5, 0.3, 0.1, 0.1, np.sqrt(1 - 0.02)])


@dataclass(frozen=True)
class JetParams:
    A1: float = 1.0
    A2: float = 3.0
    A3: float = 2.0
    sigma: tuple = (0.2,)
    eps: float = 0.01

    def __post_init__(self):
        sigma = tuple(float(s) for s in np.atleast_1d(self.sigma))
        object.__setattr__(self, "sigma", sigma)
        if min(self.A1, self.A2, self.A3) <= 0:
            raise InvalidArgumentError("moments of inertia must be positive")
        if self.eps <= 0:
            raise InvalidArgumentError("eps must be positive")
        if not sigma:
            raise InvalidArgumentError("sigma needs at least one component")

    @property
    def k(self) -> int:
        return len(self.sigma)

    @property
    def sigma_sq(self) -> float:
        """The scalar ``sigma sigma^T``."""
        return float(sum(s * s for s in self.sigma))


def jet_drift_open(p: JetParams, x, u) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w1, w2, w3, n1, n2, n3 = (x[..., i] for i in range(6))
    A1, A2, A3 = p.A1, p.A2, p.A3
    return np.stack([
        (A2 - A3) / A1 * w2 * w3 + u[..., 0],
        (A3 - A1) / A2 * w1 * w3 + u[..., 1],
        (A1 - A2) / A3 * w1 * w2,
        w3 * n2 - w2 * n3,
        w1 * n3 - w3 * n1,
        w2 * n1 - w1 * n2,
    ], axis=-1)


def jet_h(p: JetParams, x) -> np.ndarray:
    """Gain ``|(A1 - A2) / (2 A1 A2) omega3| + eps``."""
    x = np.asarray(x, dtype=float)
    return np.abs((p.A1 - p.A2) / (2 * p.A1 * p.A2) * x[..., 2]) + p.eps


def jet_feedback(p: JetParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w1, w2, w3, n1, n2, n3 = (x[..., i] for i in range(6))
    A1, A2 = p.A1, p.A2
    h = jet_h(p, x)
    half_ss = 0.5 * p.sigma_sq
    gyro = abs(A1 - A2) * np.abs(w3)
    u1 = w2 * w3 - n2 * n3 / A1 - (gyro / (2 * A1) + A1 * h + half_ss) * w1
    u2 = -w1 * w3 + n1 * n3 / A2 - (gyro / (2 * A2) + A2 * h + half_ss) * w2
    return np.stack([u1, u2], axis=-1)


def open_loop(p: JetParams, x) -> np.ndarray:
    return np.zeros(np.shape(x)[:-1] + (2,))


def jet_diffusion(p: JetParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    s = np.asarray(p.sigma)
    g = np.zeros(x.shape + (p.k,))
    g[..., 0, :] = x[..., 0, None] * s
    g[..., 1, :] = x[..., 1, None] * s
    return g


def _diffusion_jacobian(p: JetParams, x) -> np.ndarray:
    jac = np.zeros(np.shape(x) + (6,))
    jac[..., 0, 0] = p.sigma[0]
    jac[..., 1, 1] = p.sigma[0]
    return jac


def jet_closed_model(p: JetParams = JetParams(),
                     feedback: Callable = jet_feedback) -> SdeModel:
    """The closed loop; pass ``feedback=open_loop`` for the uncontrolled body."""
    return SdeModel(
        dim_state=6, dim_noise=p.k,
        drift=lambda x: jet_drift_open(p, x, feedback(p, x)),
        diffusion=lambda x: jet_diffusion(p, x),
        y_indices=Y_INDICES,
        diffusion_jacobian=(lambda x: _diffusion_jacobian(p, x)) if p.k == 1 else None,
        state_names=STATE_NAMES,
    )


def jet_lyapunov(p: JetParams = JetParams()) -> ScalarField:
    """``V = 1/2 (A1 w1^2 + A2 w2^2) + 1/2 (nu1^2 + nu2^2)``."""
    return diagonal_quadratic([p.A1, p.A2, 0.0, 1.0, 1.0, 0.0])


def jet_aux_W(p: JetParams = JetParams()) -> ScalarField:
    """``W = V + 1/2 A3 w3^2``, radially unbounded in omega."""
    return diagonal_quadratic([p.A1, p.A2, p.A3, 1.0, 1.0, 0.0])


def jet_lv_analytic(p: JetParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w1, w2, w3 = x[..., 0], x[..., 1], x[..., 2]
    h = jet_h(p, x)
    return (-0.5 * abs(p.A1 - p.A2) * np.abs(w3) * (w1 ** 2 + w2 ** 2)
            - h * (p.A1 ** 2 * w1 ** 2 + p.A2 ** 2 * w2 ** 2))


def jet_lw_analytic(p: JetParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w1, w2, w3 = x[..., 0], x[..., 1], x[..., 2]
    return (p.A1 - p.A2) * w1 * w2 * w3 + jet_lv_analytic(p, x)


def geometric_integral(x) -> np.ndarray:
    """``nu1^2 + nu2^2 + nu3^2``."""
    x = np.asarray(x, dtype=float)
    return x[..., 3] ** 2 + x[..., 4] ** 2 + x[..., 5] ** 2
