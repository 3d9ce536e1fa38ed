"""Monte Carlo solvers for the Yukawa (screened Laplace) equation and panharmonic measures."""

import os

# the TBB layer bundled with some numba builds is older than numba expects
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

__version__ = "0.1.0"
