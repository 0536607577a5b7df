"""The two closed-loop systems packaged for verification and simulation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jet, rotor
from .ensemble import AllPathsBlewUpError, run_ensemble
from .generator import SandwichBounds, ScalarField, apply_generator, sandwich_check
from .lab import (RegionSampler, ViolationReport, chain, conserved_drift, defect_scan,
                  normalize_block, report_exceedances, scan_generator_sign, tangency_check,
                  zero_block)
from .sde import BlowUpError, IntegratorConfig, InvalidArgumentError, SdeModel, simulate_path


@dataclass
class SystemCase:
    name: str
    params: object
    model: SdeModel
    lyapunov: ScalarField
    lv_analytic: Callable
    mv_indices: tuple
    nu_indices: tuple
    default_x0: np.ndarray
    bounds: SandwichBounds
    #: quantities conserved by the noise-free closed loop (name -> fn)
    integrals: dict = field(default_factory=dict)
    aux_field: Optional[ScalarField] = None
    feedback: Optional[Callable] = None

    @property
    def dim(self) -> int:
        return self.model.dim_state

    @property
    def state_names(self) -> tuple:
        return self.model.state_names

    def with_params(self, **changes) -> "SystemCase":
        return make_case(self.name, dataclasses.replace(self.params, **changes), self.feedback)


def jet_case(p: jet.JetParams = jet.JetParams(), feedback=jet.jet_feedback) -> SystemCase:
    c = [p.A1, p.A2, 1.0]
    return SystemCase(
        name="jet", params=p, model=jet.jet_closed_model(p, feedback),
        lyapunov=jet.jet_lyapunov(p), lv_analytic=lambda x: jet.jet_lv_analytic(p, x),
        mv_indices=jet.MV_INDICES, nu_indices=(3, 4, 5), default_x0=jet.DEFAULT_X0.copy(),
        bounds=SandwichBounds(0.5 * min(c), 0.5 * max(c)),
        integrals={"geometric": jet.geometric_integral},
        aux_field=jet.jet_aux_W(p), feedback=feedback,
    )


def rotor_case(p: rotor.RotorParams = rotor.RotorParams(),
               feedback=rotor.rotor_feedback) -> SystemCase:
    c = [p.A1 - p.I1, p.A2 - p.I2, 1.0]
    return SystemCase(
        name="rotor", params=p, model=rotor.rotor_closed_model(p, feedback),
        lyapunov=rotor.rotor_lyapunov(p), lv_analytic=lambda x: rotor.rotor_lv_analytic(p, x),
        mv_indices=rotor.MV_INDICES, nu_indices=(5, 6, 7), default_x0=rotor.DEFAULT_X0.copy(),
        bounds=SandwichBounds(0.5 * min(c), 0.5 * max(c)),
        integrals={
            "W1": lambda x: rotor.rotor_integrals(p, x)[0],
            "W2": lambda x: rotor.rotor_integrals(p, x)[1],
            "W3": lambda x: rotor.rotor_integrals(p, x)[2],
        },
        feedback=feedback,
    )


def make_case(name: str, params=None, feedback: Optional[Callable] = None) -> SystemCase:
    if name == "jet":
        return jet_case(params if params is not None else jet.JetParams(),
                        feedback or jet.jet_feedback)
    if name == "rotor":
        return rotor_case(params if params is not None else rotor.RotorParams(),
                          feedback or rotor.rotor_feedback)
    raise InvalidArgumentError(f"unknown model {name!r}")


def on_M_sampler(case: SystemCase, n: int = 1000, seed: int = 0, half_width: float = 10.0):
    y = list(case.model.y_indices)
    return RegionSampler.cube(case.dim, half_width, n_samples=n, seed=seed,
                              project=zero_block(y), accept=lambda x: not np.any(x[y]))


def off_M_zero_set_sampler(case: SystemCase, n: int = 1000, seed: int = 0,
                           half_width: float = 10.0, min_nu3: float = 0.5):
    """Points of ``{L V = 0} \\ M`` with unit nu near the upright direction."""
    mv = list(case.mv_indices)
    nu = list(case.nu_indices)

    def accept(x):
        return x[nu[2]] >= min_nu3 and (x[nu[0]] != 0 or x[nu[1]] != 0)

    return RegionSampler.cube(case.dim, half_width, n_samples=n, seed=seed,
                              project=chain(zero_block(mv), normalize_block(nu)), accept=accept)


def _check(condition: str, rep: ViolationReport) -> dict:
    d = rep.to_dict()
    d["condition"] = condition
    return d


def verify_case(case: SystemCase, *, seed: int = 0, n_sign: int = 100_000,
                n_oracle: int = 10_000, n_sandwich: int = 10_000, n_tangent: int = 1000,
                n_paths: int = 20, dt: float = 1e-3, horizon: float = 50.0,
                conservation_horizon: float = 20.0, ceiling: float = 1e3) -> dict:
    """Sampled checks of the four hypotheses of the invariance theorem.

    Returns a JSON-ready report with one entry per check and a pass/fail per
    condition.  Boundedness (condition 3) is probed empirically by a small
    ensemble against a state-norm ceiling and by drift of the conserved
    integrals along noise-free paths.
    """
    checks = []
    n, model, V = case.dim, case.model, case.lyapunov
    y = list(model.y_indices)

    bad = sandwich_check(V, y, case.bounds, RegionSampler.cube(n, 5.0, n_samples=n_sandwich, seed=seed))
    checks.append({"condition": "1", "name": "sandwich", "passed": not bad, "count": len(bad),
                   "n_checked": n_sandwich, "c1": case.bounds.c1, "c2": case.bounds.c2})

    box10 = RegionSampler.cube(n, 10.0, n_samples=n_sign, seed=seed + 1)
    checks.append(_check("2", scan_generator_sign(model, V, box10, 1e-10)))
    if case.aux_field is not None:
        checks.append(_check("3", scan_generator_sign(model, case.aux_field, box10, 1e-10,
                                                      name="aux_generator_sign")))

    xs = RegionSampler.cube(n, 2.0, n_samples=n_oracle, seed=seed + 2).draw()
    lv_num = apply_generator(model, V, xs)
    lv_ref = case.lv_analytic(xs)
    rel = np.abs(lv_num - lv_ref) / (1 + np.abs(lv_ref))
    checks.append(_check("2", report_exceedances("generator_oracle", rel, xs, 1e-8)))

    checks.append(_check("invariance", tangency_check(model, on_M_sampler(case, n_tangent, seed + 3))))
    # diffusion vanishes on M, so the noisy model gives the noise-free path there
    xM = on_M_sampler(case, 1, seed + 4, half_width=1.0).draw()[0]
    try:
        pM = simulate_path(model, xM, config=IntegratorConfig(dt=dt, horizon=conservation_horizon,
                                                              seed=seed))
        drift_y = float(np.max(np.abs(pM.states[:, y])))
    except BlowUpError:
        drift_y = float("inf")
    checks.append({"condition": "invariance", "name": "on_M_path", "passed": drift_y <= 1e-10,
                   "worst_value": drift_y, "tolerance": 1e-10})

    checks.append(_check("4", defect_scan(model, V, off_M_zero_set_sampler(case, n_tangent, seed + 5),
                                          case.mv_indices)))

    try:
        summary = run_ensemble(model, case.default_x0, n_paths,
                               IntegratorConfig(dt=dt, horizon=horizon, seed=seed), V)
        hits, blown = summary.ceiling_count(ceiling), summary.blowup_count
        worst = float(np.max(summary.max_state_norm))
    except AllPathsBlewUpError:
        hits, blown, worst = n_paths, n_paths, float("inf")
    checks.append({"condition": "3", "name": "boundedness", "passed": hits == 0 and blown == 0,
                   "count": hits, "blowup_count": blown, "n_checked": n_paths,
                   "worst_value": worst, "tolerance": ceiling})

    checks.extend(conservation_checks(case, dt=dt, horizon=conservation_horizon, seed=seed))

    if case.name == "rotor":
        checks.append(nullspace_check(case.params))

    conditions: dict[str, bool] = {}
    for c in checks:
        conditions[c["condition"]] = conditions.get(c["condition"], True) and bool(c["passed"])
    return {"model": case.name, "checks": checks, "conditions": conditions,
            "passed": all(conditions.values())}


def conservation_checks(case: SystemCase, *, dt: float = 1e-3, horizon: float = 20.0,
                        seed: int = 0) -> list[dict]:
    """Drift of the conserved integrals along one closed-loop path.

    The jet geometric integral is checked with the configured noise (its rows
    carry none) against an absolute bound of 5e-3; the rotor integrals are
    checked on the noise-free loop against a relative bound of 1e-3.
    """
    out = []
    cfg = IntegratorConfig(dt=dt, horizon=horizon, seed=seed)
    if case.name == "jet":
        try:
            path = simulate_path(case.model, case.default_x0, config=cfg)
            dev, _ = conserved_drift(path, case.integrals["geometric"])
        except BlowUpError:
            dev = float("inf")
        out.append({"condition": "3", "name": "geometric_integral", "passed": dev <= 5e-3,
                    "worst_value": dev, "tolerance": 5e-3})
        return out
    quiet = case.with_params(sigma=(0.0,) * len(case.params.sigma))
    try:
        path = simulate_path(quiet.model, case.default_x0, config=cfg)
    except BlowUpError:
        path = None
    for name, fn in quiet.integrals.items():
        if path is None:
            rel = float("inf")
        else:
            dev, _ = conserved_drift(path, fn)
            rel = dev / max(abs(float(fn(path.states[0]))), 1e-300)
        out.append({"condition": "3", "name": f"integral_{name}", "passed": rel <= 1e-3,
                    "worst_value": rel, "tolerance": 1e-3})
    return out


def nullspace_check(p: rotor.RotorParams, tol: float = 1e-10) -> dict:
    N = rotor.rotor_N_nullspace(p)
    dist = rotor.subspace_distance(N, rotor.analytic_N_basis(p)) if N.shape[1] == 2 else float("inf")
    resid = float(np.max(np.abs(rotor.rotor_Q_matrix(p) @ N))) if N.size else 0.0
    return {"condition": "integrals", "name": "Q_nullspace", "passed": N.shape[1] == 2 and dist <= tol,
            "dimension": int(N.shape[1]), "subspace_distance": dist, "residual": resid,
            "tolerance": tol}
