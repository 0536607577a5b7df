"""Monte Carlo estimators for stability in probability.

Each path ``i`` draws its noise from the stream keyed by ``(seed, i)``, and
paths are integrated with arithmetic that does not mix rows, so summaries are
identical for any batching or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

import numpy as np

from .generator import ScalarField
from .lab import RegionSampler, ViolationReport, report_exceedances, tail_start
from .sde import (IntegratorConfig, InvalidArgumentError, SamplePath, Scheme, SdeError,
                  SdeModel, WienerStream, _check_milstein, path_seed, step, time_grid)


class AllPathsBlewUpError(SdeError):
    pass


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo, hi = centre - half, centre + half
    # exact endpoints for the degenerate proportions
    if successes == 0:
        lo = 0.0
    if successes == n:
        hi = 1.0
    return max(0.0, lo), min(1.0, hi)


def _row_norm(x: np.ndarray, idx) -> np.ndarray:
    acc = x[:, idx[0]] * x[:, idx[0]]
    for i in idx[1:]:
        acc = acc + x[:, i] * x[:, i]
    return np.sqrt(acc)


@dataclass
class EnsembleSummary:
    """Per-time statistics over the surviving paths plus per-path diagnostics.

    Time statistics are taken at ``times`` (a subsample of the integration
    grid).  ``sup_y_norm`` is the running maximum of ``|y|`` over every grid
    point, an under-estimate of the continuous-time supremum.  The tail
    statistics use the trailing ``tail_fraction`` of the grid points and are
    the finite-horizon surrogate for the limit as t -> infinity.
    """

    n_paths: int
    seed: int
    times: np.ndarray
    mean_y_norm: np.ndarray
    q05_y_norm: np.ndarray
    q95_y_norm: np.ndarray
    mean_V: np.ndarray
    se_V: np.ndarray
    y_norm_paths: np.ndarray
    V_paths: np.ndarray
    sup_y_norm: np.ndarray
    tail_mean_y_norm: np.ndarray
    tail_mean: np.ndarray
    tail_mean_abs: np.ndarray
    tail_std: np.ndarray
    max_state_norm: np.ndarray
    blowup_step: np.ndarray
    final_states: np.ndarray
    tail_fraction: float

    @property
    def blown(self) -> np.ndarray:
        return self.blowup_step >= 0

    @property
    def blowup_count(self) -> int:
        return int(self.blown.sum())

    def exceedance_count(self, eps1: float) -> int:
        return int(np.sum(self.sup_y_norm > eps1))

    def convergence_count(self, threshold: float) -> int:
        return int(np.sum(self.tail_mean_y_norm < threshold))

    def ceiling_count(self, ceiling: float = 1e3) -> int:
        return int(np.sum(~(self.max_state_norm < ceiling)))


def _initial_states(x0, n_paths: int, dim: int) -> np.ndarray:
    if isinstance(x0, RegionSampler):
        X0 = x0.draw(n_paths)
    elif callable(x0):
        X0 = np.array([x0(i) for i in range(n_paths)], dtype=float)
    else:
        X0 = np.asarray(x0, dtype=float)
        if X0.ndim == 1:
            X0 = np.broadcast_to(X0, (n_paths, X0.size))
    if X0.shape != (n_paths, dim):
        raise InvalidArgumentError(f"initial states have shape {X0.shape}, expected {(n_paths, dim)}")
    return np.array(X0)


def _run_batch(model, field, X0, seeds, config, rec_idx, tail_from, chunk):
    dt = config.dt
    N = config.n_steps
    milstein = config.scheme is Scheme.MILSTEIN
    y = list(model.y_indices)
    B, n = X0.shape
    streams = [WienerStream(model.dim_noise, dt, s) for s in seeds]
    x = X0.copy()
    R = len(rec_idx)
    ynorm_rec = np.empty((B, R))
    V_rec = np.empty((B, R))
    blowup = np.full(B, -1)
    yn = _row_norm(x, y)
    sup_y = yn.copy()
    max_norm = np.max(np.abs(x), axis=1)
    count = 0
    t_mean = np.zeros((B, n))
    t_m2 = np.zeros((B, n))
    t_abs = np.zeros((B, n))
    t_ysum = np.zeros(B)
    r = 0

    def record(j):
        nonlocal r, count, t_mean, t_m2, t_abs, t_ysum
        while r < R and rec_idx[r] == j:
            ynorm_rec[:, r] = yn
            V_rec[:, r] = field.value(x)
            r += 1
        if j >= tail_from:
            count += 1
            delta = x - t_mean
            t_mean = t_mean + delta / count
            t_m2 = t_m2 + delta * (x - t_mean)
            t_abs = t_abs + np.abs(x)
            t_ysum = t_ysum + yn

    record(0)
    j = 0
    with np.errstate(all="ignore"):
        while j < N:
            c = min(chunk, N - j)
            dW = np.stack([s.take(c) for s in streams])
            for i in range(c):
                x = step(model, x, dW[:, i], dt, milstein)
                j += 1
                bad = ~np.isfinite(x).all(axis=1)
                if bad.any():
                    newly = bad & (blowup < 0)
                    blowup[newly] = j
                    x[bad] = np.nan
                yn = _row_norm(x, y)
                sup_y = np.fmax(sup_y, yn)
                max_norm = np.fmax(max_norm, np.max(np.abs(x), axis=1))
                record(j)
    blown = blowup >= 0
    sup_y[blown] = np.inf
    max_norm[blown] = np.inf
    return dict(ynorm_rec=ynorm_rec, V_rec=V_rec, sup_y=sup_y, max_norm=max_norm,
                blowup=blowup, tail_mean=t_mean, tail_mean_abs=t_abs / count, tail_std=np.sqrt(t_m2 / count),
                tail_y=t_ysum / count, final=x)


def run_ensemble(model: SdeModel, x0, n_paths: int, config: IntegratorConfig,
                 field: ScalarField, *, tail_fraction: float = 0.2, n_record: int = 500,
                 workers: int = 1, batch_size: Optional[int] = None,
                 chunk: int = 2048) -> EnsembleSummary:
    """Simulate ``n_paths`` independent paths and summarize them.

    ``x0`` is a single state, an ``(n_paths, n)`` array, a
    :class:`~stochlab.lab.RegionSampler` or a callable ``index -> state``.
    Paths that produce non-finite values are counted in ``blowup_step`` and
    excluded from the time statistics; if every path blows up,
    :class:`AllPathsBlewUpError` is raised.
    """
    if n_paths < 1:
        raise InvalidArgumentError("n_paths must be >= 1")
    if config.scheme is Scheme.MILSTEIN:
        _check_milstein(model)
    if not model.y_indices:
        raise InvalidArgumentError("model has no y_indices")
    X0 = _initial_states(x0, n_paths, model.dim_state)
    N = config.n_steps
    rec_idx = np.unique(np.round(np.linspace(0, N, min(n_record, N) + 1)).astype(int))
    tail_from = tail_start(N + 1, tail_fraction)
    seeds = [path_seed(config.seed, i) for i in range(n_paths)]
    if batch_size is None:
        batch_size = max(1, math.ceil(n_paths / max(1, workers)))
    bounds = [(a, min(a + batch_size, n_paths)) for a in range(0, n_paths, batch_size)]

    def work(ab):
        a, b = ab
        return _run_batch(model, field, X0[a:b], seeds[a:b], config, rec_idx, tail_from, chunk)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(ab) for ab in bounds]
    cat = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}

    blown = cat["blowup"] >= 0
    if blown.all():
        raise AllPathsBlewUpError(f"all {n_paths} paths blew up")
    ok = ~blown
    yr = cat["ynorm_rec"][ok]
    vr = cat["V_rec"][ok]
    m = yr.shape[0]
    se = vr.std(axis=0, ddof=1) / np.sqrt(m) if m > 1 else np.zeros(vr.shape[1])
    tail_y = cat["tail_y"]
    tail_y[blown] = np.inf
    return EnsembleSummary(
        n_paths=n_paths, seed=config.seed,
        times=time_grid(0.0, config.dt, N)[rec_idx],
        mean_y_norm=yr.mean(axis=0),
        q05_y_norm=np.quantile(yr, 0.05, axis=0),
        q95_y_norm=np.quantile(yr, 0.95, axis=0),
        mean_V=vr.mean(axis=0), se_V=se,
        y_norm_paths=cat["ynorm_rec"], V_paths=cat["V_rec"],
        sup_y_norm=cat["sup_y"], tail_mean_y_norm=tail_y,
        tail_mean=cat["tail_mean"], tail_mean_abs=cat["tail_mean_abs"], tail_std=cat["tail_std"],
        max_state_norm=cat["max_norm"], blowup_step=cat["blowup"],
        final_states=cat["final"], tail_fraction=tail_fraction,
    )


def _path_y_norm(path: SamplePath, y_indices) -> np.ndarray:
    return np.linalg.norm(path.states[:, list(y_indices)], axis=1)


def estimate_exceedance(source, eps1: float, y_indices=None,
                        z: float = 1.959963984540054) -> tuple[float, tuple[float, float]]:
    """Fraction of paths with ``max_t |y(t)| > eps1`` and its Wilson interval.

    ``source`` is an :class:`EnsembleSummary` or a sequence of
    :class:`SamplePath` (then ``y_indices`` is required).  Blown-up paths
    count as exceedances.
    """
    if eps1 < 0:
        raise InvalidArgumentError("eps1 must be non-negative")
    if isinstance(source, EnsembleSummary):
        k, n = source.exceedance_count(eps1), source.n_paths
    else:
        if y_indices is None:
            raise InvalidArgumentError("y_indices needed for raw paths")
        sups = [np.max(_path_y_norm(p, y_indices)) for p in source]
        k, n = int(sum(s > eps1 for s in sups)), len(sups)
    return k / n, wilson_interval(k, n, z)


def estimate_convergence(source, threshold: float, tail_fraction: Optional[float] = None,
                         y_indices=None, z: float = 1.959963984540054
                         ) -> tuple[float, tuple[float, float]]:
    """Fraction of paths whose tail-window mean of ``|y|`` is below ``threshold``.

    A finite-horizon surrogate for the event ``lim |y(t)| = 0``.
    """
    if threshold <= 0:
        raise InvalidArgumentError("threshold must be positive")
    if isinstance(source, EnsembleSummary):
        if tail_fraction is not None and tail_fraction != source.tail_fraction:
            raise InvalidArgumentError("summary was built with a different tail_fraction")
        k, n = source.convergence_count(threshold), source.n_paths
    else:
        if y_indices is None:
            raise InvalidArgumentError("y_indices needed for raw paths")
        frac = 0.2 if tail_fraction is None else tail_fraction
        means = []
        for p in source:
            yn = _path_y_norm(p, y_indices)
            means.append(yn[tail_start(len(yn), frac):].mean())
        k, n = int(sum(m < threshold for m in means)), len(means)
    return k / n, wilson_interval(k, n, z)


def _checkpoints(n_times: int, n_checkpoints: int) -> np.ndarray:
    return np.unique(np.round(np.linspace(0, n_times - 1, min(n_checkpoints, n_times))).astype(int))


def supermartingale_check(source, field: Optional[ScalarField] = None, alpha: float = 0.05,
                          n_checkpoints: int = 50, atol: float = 0.0) -> ViolationReport:
    """Test that the sample mean of ``V(x_t)`` does not increase.

    Two families of one-sided tests at level ``z = Phi^{-1}(1 - alpha)``:
    ``mean V(t_c) <= mean V(t_0) + z se`` and, between successive
    checkpoints, ``mean V(t_{c+1}) <= mean V(t_c) + z se``, where ``se`` is
    the standard error of the paired per-path difference.  ``atol`` adds an
    absolute allowance (useful for noise-free ensembles, where ``se = 0``).
    The reported value of each test is ``increase - slack``.
    """
    if not 0 < alpha < 1:
        raise InvalidArgumentError("alpha must be in (0, 1)")
    z = NormalDist().inv_cdf(1 - alpha)
    if isinstance(source, EnsembleSummary):
        V = source.V_paths[~source.blown]
        times = source.times
    else:
        if field is None:
            raise InvalidArgumentError("field needed for raw paths")
        paths = list(source)
        V = np.stack([field.value(p.states) for p in paths])
        times = paths[0].times
    idx = _checkpoints(V.shape[1], n_checkpoints)
    Vc = V[:, idx]
    m = Vc.shape[0]

    def se_of(d):
        return d.std(axis=0, ddof=1) / np.sqrt(m) if m > 1 else np.zeros(d.shape[1])

    d0 = Vc[:, 1:] - Vc[:, :1]
    d1 = np.diff(Vc, axis=1)
    excess = np.concatenate([d0.mean(0) - z * se_of(d0), d1.mean(0) - z * se_of(d1)])
    where = np.concatenate([times[idx[1:]], times[idx[1:]]])
    rep = report_exceedances("supermartingale", excess, where[:, None], atol)
    rep.extra = {"z": z, "n_checkpoints": int(len(idx)), "n_paths": int(m)}
    return rep


def pathwise_monotonicity(path: SamplePath, field: ScalarField, tol: float = 1e-6) -> ViolationReport:
    """Steps along one path where ``V`` increases by more than ``tol``."""
    v = field.value(path.states)
    inc = np.diff(v)
    return report_exceedances("pathwise_monotone", inc, path.states[1:], tol)
