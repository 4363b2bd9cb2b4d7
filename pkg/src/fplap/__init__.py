"""Numerical toolkit for the fractional p-Laplacian fast diffusion equation
u_t + L_{s,p} u = 0 in one space dimension, with quadrature of the operator
on radial powers in any dimension."""

__version__ = "0.1.0"

from .errors import NumericalError, ValidationError
from .params import Exponents, Params, Regime, classify_regime, decay_exponent, derive_exponents
from .grid_field import Field, Grid, apply_scaling, field_from_csv, field_to_csv, lq_norm, mass, resample
from .nonlinearity import Nonlinearity, phi, phi_reg
from .operator import (DiscreteOperator, FrozenTail, KernelWeights, PowerTail, TailClosure, ZeroTail,
                       apply_op, build_weights, make_closure, stationary_residual)
from .evolve import EvolveConfig, Trajectory, detect_extinction, run, stable_dt, step
from .constants import (ConstantReport, elliptic_power_action, find_pc_crossing, power_action,
                        vf_eigen_amplitude, vss_amplitude)
from .selfsim import (Profile, ProfileConfig, RescaledConfig, bump, extract_profile, run_rescaled,
                      to_selfsim, zoom_evolve)
from .exact_solutions import (VSS, Barenblatt, BarrierCritical, BarrierLower, BarrierUpper, PowerPc,
                              certify_barrier, closed_form, discretize, eval_closed)
