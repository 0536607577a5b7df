"""
Checking the stability hypotheses by sampling
=============================================

The invariance argument needs a Lyapunov candidate ``V`` that is sandwiched
between two class-K functions of ``|y|``, has a non-positive generator, and
whose zero set ``{LV = 0}`` holds no invariant set other than ``M = {y = 0}``.
None of these can be proved by sampling, but a violation found by sampling
is a definite counterexample.
"""
import numpy as np

from stochlab import jet
from stochlab.experiments import make_case, verify_case
from stochlab.lab import RegionSampler, scan_generator_sign, stationarity_defect

###############################################################################
# The full battery for both models.

for name in ("jet", "rotor"):
    report = verify_case(make_case(name), horizon=10.0)
    print(name, report["conditions"])

###############################################################################
# Remove the feedback and the generator turns positive somewhere: the noise
# now pumps energy into the transverse rates.

p = jet.JetParams()
open_model = jet.jet_closed_model(p, feedback=jet.open_loop)
rep = scan_generator_sign(open_model, jet.jet_lyapunov(p), RegionSampler.cube(6, 2.0, seed=0))
print(f"open loop: {rep.count} of {rep.n_checked} samples have LV > 0")
print("worst state:", np.round(rep.worst_state, 3), "LV =", rep.worst_value)

###############################################################################
# On ``{omega1 = omega2 = 0}`` with ``nu`` tilted off the axis, the drift
# immediately re-excites the transverse rates, so no path can rest there.

x = np.array([0.0, 0.0, 1.0, 0.0, 0.5, 0.8])
print("stationarity defect:", stationarity_defect(jet.jet_closed_model(p), jet.jet_lyapunov(p),
                                                  x, jet.MV_INDICES))
