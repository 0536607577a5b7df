"""
Strong convergence order of the two schemes
===========================================

Geometric Brownian motion has a closed-form solution driven by the same
Brownian path, which makes it a clean test of pathwise accuracy.  The mean
terminal error should scale like ``dt^(1/2)`` for Euler-Maruyama and like
``dt`` for Milstein.
"""
import numpy as np

from stochlab.sde import Scheme, estimate_strong_order, gbm_exact, gbm_model, strong_errors

model, exact = gbm_model(mu=0.05, s=0.2), gbm_exact(mu=0.05, s=0.2)
dts = [2.0 ** -k for k in range(6, 11)]

for scheme in (Scheme.EULER_MARUYAMA, Scheme.MILSTEIN):
    errs = strong_errors(model, exact, [1.0], dts, 200, 0, 1.0, scheme)
    slope = estimate_strong_order(model, exact, [1.0], dts, n_paths=200, seed=0, scheme=scheme)
    print(scheme.value)
    for dt, e in zip(dts, errs):
        print(f"  dt = 2^{int(np.log2(dt)):d}   mean |error| = {e:.3e}")
    print(f"  fitted slope {slope:.3f}")
