"""The Ito generator ``L = f . grad + 1/2 tr(G G^T Hess)`` and checks on
Lyapunov candidates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .sde import InvalidArgumentError, SdeModel


@dataclass(frozen=True)
class ScalarField:
    """A C^2 scalar function with analytic derivatives.

    All three callables are batched over leading axes: ``value`` maps
    ``(..., n) -> (...)``, ``gradient`` ``(..., n) -> (..., n)`` and
    ``hessian`` ``(..., n) -> (..., n, n)``.
    """

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    dim: int | None = None

    def __call__(self, x):
        return self.value(x)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(lambda x: self.value(x) + other.value(x),
                           lambda x: self.gradient(x) + other.gradient(x),
                           lambda x: self.hessian(x) + other.hessian(x),
                           self.dim)

    def scale(self, a: float) -> "ScalarField":
        return ScalarField(lambda x: a * self.value(x),
                           lambda x: a * self.gradient(x),
                           lambda x: a * self.hessian(x),
                           self.dim)


def diagonal_quadratic(weights: Sequence[float]) -> ScalarField:
    """``V(x) = 1/2 sum_i w_i x_i^2``.

    The value is summed term by term in index order so it also works on
    extended-precision inputs.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    idx = np.flatnonzero(w)
    hess = np.diag(w)

    def value(x):
        acc = 0.0 * x[..., 0]
        for i in idx:
            acc = acc + w[i] * x[..., i] * x[..., i]
        return 0.5 * acc

    def gradient(x):
        return x * w

    def hessian(x):
        return np.broadcast_to(hess, np.shape(x)[:-1] + (n, n))

    return ScalarField(value, gradient, hessian, n)


def linear_field(c: Sequence[float]) -> ScalarField:
    c = np.asarray(c, dtype=float)
    n = c.size
    return ScalarField(lambda x: x @ c,
                       lambda x: np.broadcast_to(c, np.shape(x)),
                       lambda x: np.zeros(np.shape(x)[:-1] + (n, n)),
                       n)


def constant_field(value: float, n: int) -> ScalarField:
    return ScalarField(lambda x: np.full(np.shape(x)[:-1], float(value)),
                       lambda x: np.zeros(np.shape(x)),
                       lambda x: np.zeros(np.shape(x)[:-1] + (n, n)),
                       n)


def apply_generator(model: SdeModel, field: ScalarField, x) -> np.ndarray:
    """Evaluate ``L V(x)`` on a state or a batch of states."""
    x = model.check_state(x)
    if field.dim is not None and field.dim != model.dim_state:
        raise InvalidArgumentError(
            f"field dimension {field.dim} does not match model dimension {model.dim_state}")
    f = model.drift(x)
    g = model.diffusion(x)
    grad = field.gradient(x)
    hess = field.hessian(x)
    if g.shape[-2:] != (model.dim_state, model.dim_noise):
        raise InvalidArgumentError(f"diffusion returned shape {g.shape}")
    a = np.einsum("...ik,...jk->...ij", g, g)
    return np.sum(grad * f, axis=-1) + 0.5 * np.einsum("...ij,...ij->...", a, hess)


def _fd_dtype():
    # extended precision keeps second differences of O(1) values well below 1e-6
    return np.longdouble if np.finfo(np.longdouble).eps < np.finfo(float).eps else float


def fd_gradient(value: Callable, x, h: float) -> np.ndarray:
    dtype = _fd_dtype()
    x = np.asarray(x, dtype=dtype)
    n = x.shape[-1]
    out = np.empty(x.shape, dtype=dtype)
    for i in range(n):
        e = np.zeros(n, dtype=dtype)
        e[i] = h
        out[..., i] = (value(x + e) - value(x - e)) / (2 * dtype(h))
    return out.astype(float)


def fd_hessian(value: Callable, x, h: float) -> np.ndarray:
    dtype = _fd_dtype()
    x = np.asarray(x, dtype=dtype)
    n = x.shape[-1]
    out = np.empty(x.shape + (n,), dtype=dtype)
    eye = np.eye(n, dtype=dtype) * dtype(h)
    h2 = 4 * dtype(h) * dtype(h)
    for i in range(n):
        for j in range(i, n):
            ei, ej = eye[i], eye[j]
            d = (value(x + ei + ej) - value(x + ei - ej)
                 - value(x - ei + ej) + value(x - ei - ej)) / h2
            out[..., i, j] = d
            out[..., j, i] = d
    return out.astype(float)


def fd_consistency_check(field: ScalarField, x, h: float = 1e-5) -> tuple[float, float]:
    """Max-norm gaps between the analytic derivatives and central differences."""
    if h <= 0:
        raise InvalidArgumentError("h must be positive")
    x = np.asarray(x, dtype=float)
    g_res = np.max(np.abs(field.gradient(x) - fd_gradient(field.value, x, h)))
    h_res = np.max(np.abs(field.hessian(x) - fd_hessian(field.value, x, h)))
    return float(g_res), float(h_res)


def fd_generator(model: SdeModel, value: Callable, x, h: float = 1e-5) -> np.ndarray:
    """``L V`` with gradient and Hessian replaced by central differences of ``value``."""
    x = model.check_state(x)
    f = model.drift(x)
    g = model.diffusion(x)
    a = np.einsum("...ik,...jk->...ij", g, g)
    grad = fd_gradient(value, x, h)
    hess = fd_hessian(value, x, h)
    return np.sum(grad * f, axis=-1) + 0.5 * np.einsum("...ij,...ij->...", a, hess)


@dataclass(frozen=True)
class SandwichBounds:
    """Quadratic comparison functions ``alpha_i(r) = c_i r**exponent``."""

    c1: float
    c2: float
    exponent: float = 2.0

    def __post_init__(self):
        if not (0 < self.c1 <= self.c2) or self.exponent <= 0:
            raise InvalidArgumentError("need 0 < c1 <= c2 and a positive exponent")


def sandwich_check(field: ScalarField, y_indices, bounds: SandwichBounds, sampler,
                   n: int | None = None, rtol: float = 1e-12) -> list[np.ndarray]:
    """States where ``c1 |y|^p <= V(x) <= c2 |y|^p`` fails.

    ``sampler`` is a :class:`~stochlab.lab.RegionSampler` or a callable
    ``n -> (n, dim)`` array.  An empty list means the bounds hold on the sample.
    """
    xs = sampler.draw(n) if hasattr(sampler, "draw") else np.asarray(sampler(n))
    if len(xs) < 1:
        raise InvalidArgumentError("need at least one sample")
    v = field.value(xs)
    r = np.linalg.norm(xs[:, list(y_indices)], axis=1) ** bounds.exponent
    slack = rtol * (1.0 + np.abs(v))
    bad = (v < bounds.c1 * r - slack) | (v > bounds.c2 * r + slack)
    return [xs[i].copy() for i in np.flatnonzero(bad)]
