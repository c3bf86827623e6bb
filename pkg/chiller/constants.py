"""Contains numerical defaults used across chiller."""

import os

# Upper bound on the number of density matrices kept per trajectory
MAX_STORED_STATES = int(os.getenv("CHILLER_MAX_STORED_STATES",
                                  default="20000"))
# Generator residual below which a sampled state counts as steady
STEADY_TOL = float(os.getenv("CHILLER_STEADY_TOL", default="1e-8"))
# MaxEnt support half-width in standard deviations and number of grid points
MAXENT_K_SIGMA = float(os.getenv("CHILLER_MAXENT_K_SIGMA", default="6"))
MAXENT_N_POINTS = int(os.getenv("CHILLER_MAXENT_N_POINTS", default="4001"))
# Successive percentile tables must agree to the second decimal place
PERCENTILE_TOL = float(os.getenv("CHILLER_PERCENTILE_TOL", default="0.01"))
# Highest number of moments tried before giving up on convergence
MAXENT_M_MAX = int(os.getenv("CHILLER_MAXENT_M_MAX", default="8"))
