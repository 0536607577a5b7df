"""Stochastic partial-stabilization laboratory for rigid bodies.

Euler-Maruyama/Milstein integration of Ito SDEs, the Ito generator applied to
Lyapunov candidates, sampled checks of invariance-principle hypotheses and
Monte Carlo estimators of stability in probability, for a rigid body driven
by jet torques and by two rotors.
"""

from .ensemble import (EnsembleSummary, estimate_convergence, estimate_exceedance,
                       pathwise_monotonicity, run_ensemble, supermartingale_check,
                       wilson_interval)
from .generator import (SandwichBounds, ScalarField, apply_generator, fd_consistency_check,
                        sandwich_check)
from .jet import JetParams, jet_closed_model, jet_lyapunov
from .lab import (RegionSampler, ViolationReport, conserved_drift, limit_probe,
                  scan_generator_sign, stationarity_defect, tangency_check)
from .rotor import MomentumFix, HMode, RotorParams, rotor_closed_model, rotor_lyapunov
from .sde import (BlowUpError, IntegratorConfig, SamplePath, Scheme, SdeModel,
                  estimate_strong_order, simulate_path, wiener_increments)

__version__ = "0.1.0"
