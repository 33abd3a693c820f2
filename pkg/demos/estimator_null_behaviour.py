"""How the four calibration estimators behave for a calibrated predictor.

Labels are redrawn from the predictions themselves, so every estimator
targets zero.  The kernel-density estimators carry a positive bias while the
U-statistics centre on zero.

Run with ``python3 demos/estimator_null_behaviour.py``.
"""
import numpy as np

from credal_cal.cli import null_distribution
from credal_cal.estimators import CalEstimatorKind, Kind

kinds = [CalEstimatorKind(k) for k in (Kind.CE2, Kind.CEKL, Kind.CEK, Kind.CEMMD)]
samples = null_distribution(kinds, n=500, k=3, resamples=200, seed=1)
for name, v in samples.items():
    se = v.std(ddof=1) / np.sqrt(v.size)
    print(f"{name:>6}: mean {v.mean():+.5f} +- {2 * se:.5f}  (95% quantile {np.quantile(v, 0.95):.5f})")
