"""Curve tables for the dominance-versus-crossing illustration.

Three (or more) groups are drawn independently; the first group is the
reference. For each group the table holds its empirical CDF on a shared
grid and the log ratio of its Nelson-Aalen cumulative hazard to the
reference's, which is flat exactly when hazards are proportional.
"""

from __future__ import annotations

import numpy as np

from .baseline import nelson_aalen
from .core import derived_seed, seeded_rng
from .diagnose import crossing_detect, empirical_cdf
from .simulate import draw_utilities

CDF_COLUMNS = ("group", "u", "F")
HAZARD_COLUMNS = ("group", "u", "log_hazard_ratio")


def figure_data(n: int, seed: int, groups: dict, grid_points: int = 200, epsilon: float = 0.01):
    """Return ``(cdf_rows, hazard_rows, pair_reports)``.

    ``groups`` maps a name to ``(law, score)``. ``pair_reports`` compares the
    reference group against each other group with :func:`crossing_detect`.
    """
    names = list(groups)
    samples = {}
    for k, name in enumerate(names):
        law, score = groups[name]
        samples[name] = draw_utilities(law, n, seeded_rng(derived_seed(seed, k)), score)

    pooled = np.concatenate(list(samples.values()))
    grid = np.quantile(pooled, np.linspace(0.005, 0.995, grid_points))
    ecdfs = {name: empirical_cdf(x) for name, x in samples.items()}
    cumhaz = {name: nelson_aalen(x) for name, x in samples.items()}

    ref = names[0]
    ref_h = np.asarray(cumhaz[ref](grid))
    cdf_rows, hazard_rows = [], []
    for name in names:
        for u, F in zip(grid, ecdfs[name](grid)):
            cdf_rows.append((name, float(u), float(F)))
        h = np.asarray(cumhaz[name](grid))
        ok = (h > 0) & (ref_h > 0)
        for u, hv, rv in zip(grid[ok], h[ok], ref_h[ok]):
            hazard_rows.append((name, float(u), float(np.log(hv / rv))))

    reports = {
        f"{ref},{name}": crossing_detect(ecdfs[ref], ecdfs[name], epsilon=epsilon, min_n=0)
        for name in names[1:]
    }
    return cdf_rows, hazard_rows, reports
