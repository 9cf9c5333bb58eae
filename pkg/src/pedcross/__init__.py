"""pedcross: a deterministic pedestrian road-crossing laboratory.

Simulates two-lane road-crossing trials with parameterized pedestrian
agents, computes car/effective/synchronized gap structure and behavioral
features, and evaluates a from-scratch model suite (linear, logistic, SVM,
random forest, MLP, agglomerative clustering) with cross-validation,
rank-based statistics, and cross-domain transfer strategies.
"""

import os as _os

# Pin BLAS thread pools before numpy first loads so matrix products (and
# therefore trained models) are bit-identical regardless of machine core
# count.  PEDCROSS_THREADS overrides; set it identically to reproduce runs.
_threads = _os.environ.get("PEDCROSS_THREADS", "1")
for _var in ("OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "OMP_NUM_THREADS",
             "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
    _os.environ.setdefault(_var, _threads)
del _os, _threads, _var

__version__ = "0.1.0"

from .sim import (AgentProfile, ScenarioConfig, TrialRecord, VehicleStream,
                  DE_PROFILE, JP_PROFILE, PROFILE_PRESETS,
                  generate_dataset, generate_trial)
from .gaps import (CrossingEvents, GapBundle, GapObservation,
                   car_gaps, compute_all_gaps, crossing_events,
                   effective_gaps, synchronized_gaps)

__all__ = [
    "AgentProfile", "ScenarioConfig", "TrialRecord", "VehicleStream",
    "DE_PROFILE", "JP_PROFILE", "PROFILE_PRESETS",
    "generate_dataset", "generate_trial",
    "CrossingEvents", "GapBundle", "GapObservation",
    "car_gaps", "compute_all_gaps", "crossing_events",
    "effective_gaps", "synchronized_gaps",
    "__version__",
]
