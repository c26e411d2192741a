"""Committed simulation regimes used by the diagnostics checks.

``MISESTIMATION_PH`` and ``MISESTIMATION_CROSSING`` are the regime pair for
:func:`hazrank.diagnose.misestimation_probe`. In the crossing regime the
driver feature moves mass from a central lognormal bump into a low, tight
bump and a high, wide one. The median drops for driver = 1, but a random
pair is still more often won by the driver = 1 record, so a pairwise
Plackett-Luce fit points the other way. The parameters were found by a
grid search over the lognormal components and are kept fixed here.

``PH_TEST_TRUE`` and ``PH_TEST_VIOLATING`` calibrate :func:`ph_test`: the
first satisfies proportional hazards, the second makes the log-utility
spread depend on a binary feature so the hazard ratio drifts.
"""

from __future__ import annotations

import math

from .simulate import Bernoulli, LogNormal, Mixture, SimSpec, WeibullPH

__all__ = [
    "MISESTIMATION_PH",
    "MISESTIMATION_CROSSING",
    "MISESTIMATION_N",
    "PH_TEST_TRUE",
    "PH_TEST_VIOLATING",
]

MISESTIMATION_N = 2000

MISESTIMATION_PH = SimSpec(MISESTIMATION_N, (0.5,), (Bernoulli(0.5),), WeibullPH(1.5))

MISESTIMATION_CROSSING = SimSpec(
    MISESTIMATION_N,
    (0.0,),
    (Bernoulli(0.5),),
    Mixture(((0.98, LogNormal(0.0, 0.5)), (0.01, LogNormal(-0.3, 0.1)), (0.01, LogNormal(1.5, 0.2)))),
    alt_weights=(0.01, 0.55, 0.44),
)

PH_TEST_TRUE = SimSpec(2000, (1.0,), (Bernoulli(0.5),), WeibullPH(1.5))

PH_TEST_VIOLATING = SimSpec(5000, (0.1,), (Bernoulli(0.5),), LogNormal(0.0, 0.25), sigma_beta=(math.log(4.0),))
