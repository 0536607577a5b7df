"""Fixed-step strong integration of Ito SDEs ``dx = f(x) dt + G(x) dW``.

All model callables are batched: they take states of shape ``(..., n)`` and
return drift ``(..., n)`` and diffusion ``(..., n, k)``.  The stepping kernel
only uses elementwise arithmetic and fixed-order accumulation, so a path
produces bit-identical values whether it is integrated alone or as one row of
a larger batch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

SEED_MASK = (1 << 64) - 1


class SdeError(Exception):
    """Base class for integration errors."""


class InvalidArgumentError(SdeError, ValueError):
    pass


class UnsupportedSchemeError(SdeError):
    pass


class BlowUpError(SdeError, FloatingPointError):
    """A non-finite state was produced.

    ``step`` is the index of the first bad state (``states[step]`` would be
    non-finite); ``path`` holds the finite prefix when available.
    """

    def __init__(self, step: int, path: Optional["SamplePath"] = None):
        super().__init__(f"non-finite state at step {step}")
        self.step = step
        self.path = path


class Scheme(str, enum.Enum):
    EULER_MARUYAMA = "euler_maruyama"
    MILSTEIN = "milstein"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"em": "euler_maruyama", "euler": "euler_maruyama"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InvalidArgumentError(f"unknown scheme {value!r}") from None


@dataclass(frozen=True)
class SdeModel:
    """Drift/diffusion descriptor of an n-dimensional Ito system with k noises.

    ``diffusion_jacobian`` is optional and only meaningful for ``k == 1``: it
    returns ``J[..., i, j] = d g_i / d x_j`` for the single noise column ``g``
    and enables the Milstein scheme.
    """

    dim_state: int
    dim_noise: int
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    y_indices: tuple = ()
    diffusion_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    state_names: Optional[tuple] = None

    def __post_init__(self):
        if self.dim_state < 1 or self.dim_noise < 1:
            raise InvalidArgumentError("dim_state and dim_noise must be positive")
        y = tuple(int(i) for i in self.y_indices)
        if len(set(y)) != len(y) or any(i < 0 or i >= self.dim_state for i in y):
            raise InvalidArgumentError(f"bad y_indices {self.y_indices!r}")
        object.__setattr__(self, "y_indices", y)
        if self.state_names is None:
            names = tuple(f"x{i + 1}" for i in range(self.dim_state))
            object.__setattr__(self, "state_names", names)
        elif len(self.state_names) != self.dim_state:
            raise InvalidArgumentError("state_names length must equal dim_state")

    def check_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim_state,):
            raise InvalidArgumentError(
                f"state has trailing dimension {x.shape[-1:]}, expected {self.dim_state}")
        return x


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    horizon: float = 50.0
    scheme: Scheme = Scheme.EULER_MARUYAMA
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidArgumentError("dt must be positive")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise InvalidArgumentError("horizon must be positive")
        if self.dt > self.horizon:
            raise InvalidArgumentError("dt must not exceed horizon")
        if int(self.seed) < 0:
            raise InvalidArgumentError("seed must be non-negative")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.horizon / self.dt)))


@dataclass(frozen=True)
class SamplePath:
    """One discretized trajectory; arrays are read-only."""

    t0: float
    dt: float
    times: np.ndarray
    states: np.ndarray
    dW: np.ndarray
    seed: int
    scheme: Scheme
    state_names: tuple = field(default=())

    def __post_init__(self):
        for name in ("times", "states", "dW"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.state_names.index(name)]


def path_seed(seed: int, index: int) -> tuple:
    """Entropy for the noise stream of path ``index`` of an ensemble.

    The pair is hashed by :class:`numpy.random.SeedSequence`, so streams do
    not depend on path order and ensembles with different base seeds share
    no streams (a plain ``seed ^ index`` would reuse them).
    """
    if int(seed) < 0 or int(index) < 0:
        raise InvalidArgumentError("seed and index must be non-negative")
    return (int(seed) & SEED_MASK, int(index))


def _rng(seed):
    if isinstance(seed, tuple):
        return np.random.default_rng(list(seed))
    if int(seed) < 0:
        raise InvalidArgumentError("seed must be non-negative")
    return np.random.default_rng(int(seed))


def time_grid(t0: float, dt: float, steps: int) -> np.ndarray:
    return t0 + np.arange(steps + 1) * dt


def wiener_increments(k: int, steps: int, dt: float, seed: int) -> np.ndarray:
    """Independent ``N(0, dt)`` increments, shape ``(steps, k)``.

    Column ``j`` is the increment stream of ``w_j``.  Deterministic in
    ``seed`` (an integer, or a :func:`path_seed` pair); drawing the same stream in consecutive chunks (see
    :class:`WienerStream`) yields the same numbers.
    """
    if k < 1 or steps < 1:
        raise InvalidArgumentError("k and steps must be >= 1")
    if not (np.isfinite(dt) and dt > 0):
        raise InvalidArgumentError("dt must be positive")
    rng = _rng(seed)
    return rng.standard_normal((steps, k)) * np.sqrt(dt)


class WienerStream:
    """Chunked version of :func:`wiener_increments` for long paths."""

    def __init__(self, k: int, dt: float, seed):
        self.k = k
        self._scale = np.sqrt(dt)
        self._rng = _rng(seed)

    def take(self, steps: int) -> np.ndarray:
        return self._rng.standard_normal((steps, self.k)) * self._scale


def _check_milstein(model: SdeModel):
    if model.dim_noise != 1:
        raise UnsupportedSchemeError("Milstein is only supported for a single noise (k = 1)")
    if model.diffusion_jacobian is None:
        raise UnsupportedSchemeError(
            "Milstein needs the diffusion Jacobian, which this model does not provide")


def step(model: SdeModel, x: np.ndarray, dw: np.ndarray, dt: float,
         milstein: bool = False) -> np.ndarray:
    """Advance a batch ``x`` of shape ``(B, n)`` with increments ``dw`` ``(B, k)``."""
    f = model.drift(x)
    g = model.diffusion(x)
    noise = g[..., 0] * dw[:, None, 0]
    for j in range(1, model.dim_noise):
        noise = noise + g[..., j] * dw[:, None, j]
    x_new = x + f * dt + noise
    if milstein:
        jac = model.diffusion_jacobian(x)
        col = g[..., 0]
        # (J g)_i accumulated in a fixed order
        lg = jac[..., 0] * col[..., None, 0]
        for j in range(1, model.dim_state):
            lg = lg + jac[..., j] * col[..., None, j]
        x_new = x_new + 0.5 * lg * (dw[:, 0:1] ** 2 - dt)
    return x_new


def integrate(model: SdeModel, x0, dW, dt: float,
              scheme: Scheme = Scheme.EULER_MARUYAMA) -> np.ndarray:
    """Integrate a batch with given increments.

    Parameters
    ----------
    x0 : array, shape (B, n)
    dW : array, shape (B, N, k)

    Returns
    -------
    states : array, shape (B, N + 1, n); rows that blow up are NaN from the
        first non-finite step onwards.
    """
    scheme = Scheme.parse(scheme)
    milstein = scheme is Scheme.MILSTEIN
    if milstein:
        _check_milstein(model)
    x = model.check_state(np.atleast_2d(x0)).copy()
    dW = np.asarray(dW, dtype=float)
    if dW.ndim != 3 or dW.shape[0] != x.shape[0] or dW.shape[2] != model.dim_noise:
        raise InvalidArgumentError(f"dW has shape {dW.shape}, expected (B, N, {model.dim_noise})")
    B, N = dW.shape[:2]
    out = np.empty((B, N + 1, model.dim_state))
    out[:, 0] = x
    with np.errstate(all="ignore"):
        for j in range(N):
            x = step(model, x, dW[:, j], dt, milstein)
            out[:, j + 1] = x
    bad = ~np.isfinite(out).all(axis=2)
    if bad.any():
        for b in np.flatnonzero(bad.any(axis=1)):
            out[b, np.argmax(bad[b]):] = np.nan
    return out


def simulate_path(model: SdeModel, x0, t0: float = 0.0,
                  config: IntegratorConfig = IntegratorConfig(),
                  dW: Optional[np.ndarray] = None) -> SamplePath:
    """Simulate one path.

    Noise is drawn from ``config.seed`` unless ``dW`` (shape ``(N, k)``) is
    given, in which case the stored increments are replayed.  Raises
    :class:`BlowUpError` (carrying the finite prefix) on the first non-finite
    state.
    """
    x0 = model.check_state(x0)
    if x0.ndim != 1:
        raise InvalidArgumentError("x0 must be a single state vector")
    if not np.isfinite(x0).all():
        raise InvalidArgumentError("x0 must be finite")
    scheme = config.scheme
    milstein = scheme is Scheme.MILSTEIN
    if milstein:
        _check_milstein(model)
    if dW is None:
        dW = wiener_increments(model.dim_noise, config.n_steps, config.dt, config.seed)
    else:
        dW = np.asarray(dW, dtype=float)
        if dW.ndim != 2 or dW.shape[1] != model.dim_noise:
            raise InvalidArgumentError(f"dW must have shape (N, {model.dim_noise})")
    N = dW.shape[0]
    dt = config.dt
    states = np.empty((N + 1, model.dim_state))
    states[0] = x0
    x = x0[None, :].copy()
    with np.errstate(all="ignore"):
        for j in range(N):
            x = step(model, x, dW[j:j + 1], dt, milstein)
            if not np.isfinite(x).all():
                partial = SamplePath(t0, dt, time_grid(t0, dt, j), states[:j + 1],
                                     dW[:j], config.seed, scheme, model.state_names)
                raise BlowUpError(j + 1, partial)
            states[j + 1] = x[0]
    return SamplePath(t0, dt, time_grid(t0, dt, N), states, dW, config.seed, scheme,
                      model.state_names)


def strong_errors(model: SdeModel, exact: Callable, x0, dts: Sequence[float],
                  n_paths: int, seed: int, horizon: float = 1.0,
                  scheme: Scheme = Scheme.EULER_MARUYAMA) -> np.ndarray:
    """Mean terminal error ``E|X_N - x(T)|`` for each step size.

    All step sizes share one Brownian path per sample: increments are drawn at
    the finest step and summed in blocks for the coarser ones, so every ``dt``
    must be an integer multiple of ``min(dts)`` and divide ``horizon``.
    ``exact(t, w_t, x0)`` returns the exact state at time ``t`` given the
    Wiener value ``w_t`` (shape ``(B, k)``).
    """
    dts = [float(d) for d in dts]
    if len(dts) < 4:
        raise InvalidArgumentError("need at least 4 step sizes")
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise InvalidArgumentError("dts must be strictly decreasing")
    fine = dts[-1]
    n_fine = int(round(horizon / fine))
    if not np.isclose(n_fine * fine, horizon, rtol=1e-12):
        raise InvalidArgumentError("finest dt must divide the horizon")
    x0 = model.check_state(x0)
    k = model.dim_noise
    dW = np.stack([wiener_increments(k, n_fine, fine, path_seed(seed, i))
                   for i in range(n_paths)])
    w_T = dW.sum(axis=1)
    X0 = np.broadcast_to(x0, (n_paths, model.dim_state))
    x_exact = exact(horizon, w_T, X0)
    errs = []
    for dt in dts:
        r = int(round(dt / fine))
        if not np.isclose(r * fine, dt, rtol=1e-12):
            raise InvalidArgumentError(f"dt={dt} is not a multiple of the finest step")
        coarse = dW.reshape(n_paths, n_fine // r, r, k).sum(axis=2)
        xT = integrate(model, X0, coarse, dt, scheme)[:, -1]
        errs.append(np.mean(np.linalg.norm(xT - x_exact, axis=-1)))
    return np.array(errs)


def estimate_strong_order(model: SdeModel, exact: Callable, x0, dts: Sequence[float],
                          n_paths: int = 200, seed: int = 0, horizon: float = 1.0,
                          scheme: Scheme = Scheme.EULER_MARUYAMA) -> float:
    """Least-squares slope of ``log(mean terminal error)`` against ``log(dt)``."""
    errs = strong_errors(model, exact, x0, dts, n_paths, seed, horizon, scheme)
    slope, _ = np.polyfit(np.log(np.asarray(dts, dtype=float)), np.log(errs), 1)
    return float(slope)


def gbm_model(mu: float = 0.05, s: float = 0.2) -> SdeModel:
    """Scalar geometric Brownian motion ``dx = mu x dt + s x dW``."""
    return SdeModel(
        dim_state=1, dim_noise=1,
        drift=lambda x: mu * x,
        diffusion=lambda x: (s * x)[..., None],
        diffusion_jacobian=lambda x: np.full(x.shape + (1,), s),
    )


def gbm_exact(mu: float = 0.05, s: float = 0.2) -> Callable:
    """Strong solution ``x0 exp((mu - s^2/2) t + s W_t)`` of :func:`gbm_model`."""
    def exact(t, w_t, x0):
        return x0 * np.exp((mu - 0.5 * s * s) * t + s * w_t)
    return exact
