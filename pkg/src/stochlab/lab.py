"""Sampled checks of the invariance-principle hypotheses, plus path diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .generator import ScalarField, apply_generator
from .sde import InvalidArgumentError, SamplePath, SdeModel


@dataclass
class RegionSampler:
    """Uniform samples from a box, optionally mapped onto a set and filtered.

    ``project`` maps raw samples onto the target set (e.g. zeroing the
    stabilized block, or normalising nu); ``accept`` is a rejection predicate
    applied to single states after projection.
    """

    box: Sequence[tuple]
    n_samples: int = 10_000
    seed: int = 0
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None
    accept: Optional[Callable[[np.ndarray], bool]] = None
    max_rounds: int = 100

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float)
        if box.ndim != 2 or box.shape[1] != 2 or np.any(box[:, 0] > box[:, 1]):
            raise InvalidArgumentError("box must be a list of (lo, hi) with lo <= hi")
        if self.n_samples < 1:
            raise InvalidArgumentError("n_samples must be >= 1")
        self.box = box

    @classmethod
    def cube(cls, dim: int, half_width: float, **kw) -> "RegionSampler":
        return cls([(-half_width, half_width)] * dim, **kw)

    @property
    def dim(self) -> int:
        return len(self.box)

    def _raw(self, rng, n):
        lo, hi = self.box[:, 0], self.box[:, 1]
        xs = lo + (hi - lo) * rng.random((n, self.dim))
        return self.project(xs) if self.project is not None else xs

    def draw(self, n: Optional[int] = None) -> np.ndarray:
        n = self.n_samples if n is None else int(n)
        rng = np.random.default_rng(self.seed)
        if self.accept is None:
            return self._raw(rng, n)
        kept = []
        for _ in range(self.max_rounds):
            xs = self._raw(rng, n)
            kept.extend(x for x in xs if self.accept(x))
            if len(kept) >= n:
                return np.array(kept[:n])
        raise RuntimeError(f"acceptance predicate kept only {len(kept)} of {n} samples")

    def rejects(self, x) -> bool:
        return self.accept is not None and not self.accept(np.asarray(x, dtype=float))


def zero_block(indices) -> Callable[[np.ndarray], np.ndarray]:
    """Projection that sets the given coordinates to zero."""
    idx = list(indices)

    def project(xs):
        xs = np.array(xs, dtype=float)
        xs[..., idx] = 0.0
        return xs
    return project


def normalize_block(indices) -> Callable[[np.ndarray], np.ndarray]:
    """Projection that rescales the given block to unit Euclidean norm."""
    idx = list(indices)

    def project(xs):
        xs = np.array(xs, dtype=float)
        block = xs[..., idx]
        xs[..., idx] = block / np.linalg.norm(block, axis=-1, keepdims=True)
        return xs
    return project


def chain(*projections):
    def project(xs):
        for p in projections:
            xs = p(xs)
        return xs
    return project


@dataclass
class ViolationReport:
    name: str
    worst_value: float
    worst_state: Optional[np.ndarray]
    count: int
    tolerance: float
    n_checked: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.count == 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "count": int(self.count),
            "n_checked": int(self.n_checked),
            "tolerance": float(self.tolerance),
            "worst_value": float(self.worst_value),
            "worst_state": None if self.worst_state is None else [float(v) for v in self.worst_state],
            **self.extra,
        }


def report_exceedances(name: str, values, states, tol: float) -> ViolationReport:
    """Flag ``values > tol``; the worst is the maximum, ties to the lowest index."""
    values = np.asarray(values, dtype=float)
    states = np.asarray(states, dtype=float)
    bad = ~(values <= tol)
    if values.size == 0:
        return ViolationReport(name, -np.inf, None, 0, tol, 0)
    i = int(np.argmax(np.where(np.isnan(values), np.inf, values)))
    return ViolationReport(name, float(values[i]), states[i].copy(), int(bad.sum()), tol,
                           values.size)


def scan_generator_sign(model: SdeModel, field: ScalarField, sampler: RegionSampler,
                        tol: float = 1e-10, name: str = "generator_sign") -> ViolationReport:
    """Sampled states where ``L V > tol``."""
    if tol < 0:
        raise InvalidArgumentError("tol must be non-negative")
    xs = sampler.draw()
    return report_exceedances(name, apply_generator(model, field, xs), xs, tol)


def scan_sign(fn: Callable, sampler: RegionSampler, tol: float = 0.0,
              name: str = "sign") -> ViolationReport:
    """Same as :func:`scan_generator_sign` for a closed-form function of the state."""
    xs = sampler.draw()
    return report_exceedances(name, fn(xs), xs, tol)


def tangency_check(model: SdeModel, sampler: RegionSampler, tol: float = 0.0,
                   name: str = "tangency") -> ViolationReport:
    """Largest y-component of drift or diffusion over sampled points of M.

    Every sample must lie exactly on ``M = {y = 0}``.
    """
    xs = sampler.draw()
    y = list(model.y_indices)
    if np.any(xs[:, y] != 0):
        raise InvalidArgumentError("tangency samples must satisfy y = 0 exactly")
    f = model.drift(xs)[:, y]
    g = model.diffusion(xs)[:, y, :]
    worst = np.maximum(np.max(np.abs(f), axis=1), np.max(np.abs(g), axis=(1, 2)))
    return report_exceedances(name, worst, xs, tol)


def stationarity_defect(model: SdeModel, field: ScalarField, x, mv_indices) -> np.ndarray:
    """How strongly the dynamics push ``x`` off the zero set of ``L V``.

    The zero set is ``{x_i = 0, i in mv_indices}``; its defining functions are
    taken as the matching components of ``grad V`` (linear for the quadratic
    candidates used here), and the defect is the norm of their time
    derivative ``Hess(V)[mv, :] f(x)`` plus the norm of the same rows applied
    to the diffusion.  A positive defect at a point of the zero set outside M
    means no solution can stay there.
    """
    x = model.check_state(x)
    idx = list(mv_indices)
    rows = field.hessian(x)[..., idx, :]
    drift_part = np.einsum("...ij,...j->...i", rows, model.drift(x))
    diff_part = np.einsum("...ij,...jk->...ik", rows, model.diffusion(x))
    return (np.linalg.norm(drift_part, axis=-1)
            + np.sqrt(np.sum(diff_part ** 2, axis=(-2, -1))))


def defect_scan(model: SdeModel, field: ScalarField, sampler: RegionSampler, mv_indices,
                threshold: float = 0.0, name: str = "not_forward_invariant") -> ViolationReport:
    """Flag sampled points of ``{L V = 0} \\ M`` where the defect is ``<= threshold``."""
    xs = sampler.draw()
    y = list(model.y_indices)
    if np.any(xs[:, list(mv_indices)] != 0) or np.any(np.all(xs[:, y] == 0, axis=1)):
        raise InvalidArgumentError("defect samples must lie on the zero set and off M")
    d = stationarity_defect(model, field, xs, mv_indices)
    rep = report_exceedances(name, -d, xs, -threshold)
    rep.worst_value = -rep.worst_value
    return rep


def conserved_drift(path: SamplePath, quantity: Callable) -> tuple[float, float]:
    """``(max |q(x_t) - q(x_0)|, q(x_T) - q(x_0)``)."""
    q = np.asarray(quantity(path.states), dtype=float)
    dev = q - q[0]
    return float(np.max(np.abs(dev))), float(dev[-1])


def tail_start(n_points: int, tail_fraction: float) -> int:
    """First index of the trailing window covering ``tail_fraction`` of the points."""
    if not 0 < tail_fraction <= 1:
        raise InvalidArgumentError("tail_fraction must be in (0, 1]")
    m = max(1, int(np.ceil(tail_fraction * n_points)))
    return n_points - m


def limit_probe(path: SamplePath, tail_fraction: float = 0.2,
                absolute: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate mean and standard deviation over the trailing window.

    With ``absolute=True`` the mean is taken of ``|x_i|``, which is what one
    wants for coordinates expected to settle at zero.
    """
    tail = path.states[tail_start(len(path.states), tail_fraction):]
    mean = np.abs(tail).mean(axis=0) if absolute else tail.mean(axis=0)
    return mean, tail.std(axis=0)


def max_abs_block(path: SamplePath, indices) -> float:
    return float(np.max(np.abs(path.states[:, list(indices)])))
