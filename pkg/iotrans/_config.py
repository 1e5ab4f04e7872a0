import os

import pkg_resources

DATA_DIR = pkg_resources.resource_filename("iotrans", "_data/")

EPS_PROB = 1e-9
"""Tolerance for every zero test and normalization check on probabilities."""
HORIZON_CAP = 12
"""Longest output word that is enumerated exactly."""
DIMENSION_GUARD = 10**6
"""Largest number of amplitudes (or matrix entries) materialized explicitly."""
RANK_TOL = 1e-9
PSD_TOL = 1e-8
STATIONARY_RESIDUAL = 1e-10
GRID_RESOLUTION = 64


def default_seed() -> int:
    """Seed used when none is given, taken from `IOTRANS_SEED` if it is set."""
    return int(os.environ.get("IOTRANS_SEED", 0))
