"""Rigid body carrying two symmetric rotors (flywheels).

State layout ``(omega1, omega2, omega3, Omega1, Omega2, nu1, nu2, nu3)``:
carrier angular velocity, relative rotor rates, and the body-frame
projections of a fixed unit vector.  The controls are torques applied to the
rotors.  ``y = (omega1, omega2, nu1, nu2)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .generator import ScalarField, diagonal_quadratic
from .sde import InvalidArgumentError, SdeModel

STATE_NAMES = ("omega1", "omega2", "omega3", "Omega1", "Omega2", "nu1", "nu2", "nu3")
Y_INDICES = (0, 1, 5, 6)
MV_INDICES = (0, 1)
DEFAULT_X0 = np.array([0.3, -0.2, 0.25, 1.0, -0.5, 0.1, 0.1, np.sqrt(1 - 0.02)])


class HMode(str, enum.Enum):
    CONSTANT_EPS = "constant_eps"
    JET_STYLE = "jet_style"


class MomentumFix(str, enum.Enum):
    AS_PRINTED = "as_printed"
    CORRECTED = "corrected"


def _parse_enum(cls, value):
    if isinstance(value, cls):
        return value
    try:
        return cls(str(value).strip().lower().replace("-", "_"))
    except ValueError:
        raise InvalidArgumentError(f"unknown {cls.__name__} {value!r}") from None


@dataclass(frozen=True)
class RotorParams:
    A1: float = 10.0
    A2: float = 31.0
    A3: float = 22.0
    I1: float = 8.0
    I2: float = 27.0
    sigma: tuple = (0.2,)
    eps: float = 0.001
    h_mode: HMode = HMode.CONSTANT_EPS
    momentum_fix: MomentumFix = MomentumFix.CORRECTED

    def __post_init__(self):
        sigma = tuple(float(s) for s in np.atleast_1d(self.sigma))
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "h_mode", _parse_enum(HMode, self.h_mode))
        object.__setattr__(self, "momentum_fix", _parse_enum(MomentumFix, self.momentum_fix))
        if min(self.A1, self.A2, self.A3, self.I1, self.I2) <= 0:
            raise InvalidArgumentError("moments of inertia must be positive")
        if not (self.A1 > self.I1 and self.A2 > self.I2):
            raise InvalidArgumentError("need A1 > I1 and A2 > I2")
        if self.eps <= 0:
            raise InvalidArgumentError("eps must be positive")
        if not sigma:
            raise InvalidArgumentError("sigma needs at least one component")

    @property
    def k(self) -> int:
        return len(self.sigma)

    @property
    def sigma_sq(self) -> float:
        return float(sum(s * s for s in self.sigma))


def rotor_h(p: RotorParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if p.h_mode is HMode.JET_STYLE:
        return 0.5 * abs(p.A1 - p.A2) * np.abs(x[..., 2]) + p.eps
    return np.full(x.shape[:-1], p.eps)


def rotor_drift_open(p: RotorParams, x, u) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w1, w2, w3, W1, W2, n1, n2, n3 = (x[..., i] for i in range(8))
    u1, u2 = u[..., 0], u[..., 1]
    A1, A2, A3, I1, I2 = p.A1, p.A2, p.A3, p.I1, p.I2
    d1 = A1 - I1
    d2 = A2 - I2
    body1 = (A2 - A3) / d1 * w2 * w3 + I2 * W2 / d1 * w3
    body2 = (A3 - A1) / d2 * w1 * w3 - I1 * W1 / d2 * w3
    if p.momentum_fix is MomentumFix.CORRECTED:
        lead1, lead2 = u1 / I1, u2 / I2
    else:
        lead1, lead2 = u1 / I2, u2 / I1
    return np.stack([
        body1 - u1 / d1,
        body2 - u2 / d2,
        (A1 - A2) / A3 * w1 * w2 + I1 * W1 / A3 * w2 - I2 * W2 / A3 * w1,
        lead1 - body1 + u1 / d1,
        lead2 - body2 + u2 / d2,
        w3 * n2 - w2 * n3,
        w1 * n3 - w3 * n1,
        w2 * n1 - w1 * n2,
    ], axis=-1)


def rotor_feedback(p: RotorParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w1, w2, w3, W1, W2, n1, n2, n3 = (x[..., i] for i in range(8))
    A1, A2, I1, I2 = p.A1, p.A2, p.I1, p.I2
    h = rotor_h(p, x)
    half_ss = 0.5 * p.sigma_sq
    gyro = 0.5 * abs(A1 - A2) * np.abs(w3)
    u1 = n2 * n3 + (A2 * w2 + I2 * W2) * w3 + w1 * (h + half_ss * (A1 - I1) + gyro)
    u2 = -n1 * n3 - (A1 * w1 + I1 * W1) * w3 + w2 * (h + half_ss * (A2 - I2) + gyro)
    return np.stack([u1, u2], axis=-1)


def open_loop(p: RotorParams, x) -> np.ndarray:
    return np.zeros(np.shape(x)[:-1] + (2,))


def rotor_diffusion(p: RotorParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    s = np.asarray(p.sigma)
    g = np.zeros(x.shape + (p.k,))
    g[..., 0, :] = x[..., 0, None] * s
    g[..., 1, :] = x[..., 1, None] * s
    g[..., 3, :] = -x[..., 0, None] * s
    g[..., 4, :] = -x[..., 1, None] * s
    return g


def _diffusion_jacobian(p: RotorParams, x) -> np.ndarray:
    s = p.sigma[0]
    jac = np.zeros(np.shape(x) + (8,))
    jac[..., 0, 0] = s
    jac[..., 1, 1] = s
    jac[..., 3, 0] = -s
    jac[..., 4, 1] = -s
    return jac


def rotor_closed_model(p: RotorParams = RotorParams(),
                       feedback: Callable = rotor_feedback) -> SdeModel:
    return SdeModel(
        dim_state=8, dim_noise=p.k,
        drift=lambda x: rotor_drift_open(p, x, feedback(p, x)),
        diffusion=lambda x: rotor_diffusion(p, x),
        y_indices=Y_INDICES,
        diffusion_jacobian=(lambda x: _diffusion_jacobian(p, x)) if p.k == 1 else None,
        state_names=STATE_NAMES,
    )


def rotor_lyapunov(p: RotorParams = RotorParams()) -> ScalarField:
    """``2V = (A1 - I1) w1^2 + (A2 - I2) w2^2 + nu1^2 + nu2^2``."""
    return diagonal_quadratic([p.A1 - p.I1, p.A2 - p.I2, 0, 0, 0, 1.0, 1.0, 0])


def rotor_lv_analytic(p: RotorParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w1, w2, w3 = x[..., 0], x[..., 1], x[..., 2]
    damp = rotor_h(p, x) + 0.5 * abs(p.A1 - p.A2) * np.abs(w3)
    return -w1 ** 2 * damp - w2 ** 2 * damp


def angular_momentum(p: RotorParams, x) -> np.ndarray:
    """Total angular momentum of body plus rotors in body axes."""
    x = np.asarray(x, dtype=float)
    return np.stack([p.A1 * x[..., 0] + p.I1 * x[..., 3],
                     p.A2 * x[..., 1] + p.I2 * x[..., 4],
                     p.A3 * x[..., 2]], axis=-1)


def rotor_integrals(p: RotorParams, x) -> tuple:
    """``(W1, W2, W3)``: squared momentum, momentum along nu, and ``|nu|^2``."""
    x = np.asarray(x, dtype=float)
    K = angular_momentum(p, x)
    nu = x[..., 5:8]
    W1 = K[..., 0] ** 2 + K[..., 1] ** 2 + K[..., 2] ** 2
    W2 = K[..., 0] * nu[..., 0] + K[..., 1] * nu[..., 1] + K[..., 2] * nu[..., 2]
    W3 = nu[..., 0] ** 2 + nu[..., 1] ** 2 + nu[..., 2] ** 2
    return W1, W2, W3


def rotor_Q_matrix(p: RotorParams) -> np.ndarray:
    """Hessian of W1 in ``(omega1, omega2, omega3, Omega1, Omega2)``."""
    A1, A2, A3, I1, I2 = p.A1, p.A2, p.A3, p.I1, p.I2
    if min(A1, A2, A3) == 0:
        raise InvalidArgumentError("singular configuration: zero moment of inertia")
    Q = np.zeros((5, 5))
    Q[0, 0], Q[1, 1], Q[2, 2] = 2 * A1 ** 2, 2 * A2 ** 2, 2 * A3 ** 2
    Q[3, 3], Q[4, 4] = 2 * I1 ** 2, 2 * I2 ** 2
    Q[0, 3] = Q[3, 0] = 2 * A1 * I1
    Q[1, 4] = Q[4, 1] = 2 * A2 * I2
    return Q


def rotor_N_nullspace(p: RotorParams, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the zero-eigenvalue subspace of Q."""
    Q = rotor_Q_matrix(p)
    vals, vecs = np.linalg.eigh(Q)
    keep = np.abs(vals) <= rtol * np.max(np.abs(vals))
    return vecs[:, keep]


def analytic_N_basis(p: RotorParams) -> np.ndarray:
    """The spanning vectors parametrized by the rotor rates, as columns."""
    return np.array([[-p.I1 / p.A1, 0.0, 0.0, 1.0, 0.0],
                     [0.0, -p.I2 / p.A2, 0.0, 0.0, 1.0]]).T


def subspace_distance(U, V) -> float:
    """Spectral norm of the difference of orthogonal projectors onto span(U), span(V)."""
    qu, _ = np.linalg.qr(np.asarray(U, dtype=float))
    qv, _ = np.linalg.qr(np.asarray(V, dtype=float))
    return float(np.linalg.norm(qu @ qu.T - qv @ qv.T, 2))


def in_N(p: RotorParams, v, tol: float = 1e-10) -> bool:
    """Whether the 5-vector ``v`` lies in the null space of Q."""
    v = np.asarray(v, dtype=float)
    N = rotor_N_nullspace(p)
    resid = v - N @ (N.T @ v)
    return bool(np.linalg.norm(resid) <= tol * max(1.0, np.linalg.norm(v)))
