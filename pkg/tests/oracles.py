"""Independent reference computations used by tests and the acceptance gate."""

import numpy as np


def simulated_blockage_probability(length, tx_height, rx_height, params,
                                   seed=0, total_time=50_000.0, t_slice=2.0):
    """Monte-Carlo blocker-crossing estimate of the blockage probability.

    Simulates a Poisson field of ground blockers (density, speed, uniform
    random headings) moving in straight lines, counts exact crossings of the
    link's ground projection where the line-of-sight height is within
    blocker reach, and converts the empirical crossing rate into the
    stationary two-state blocked fraction rate / (rate + 1/mean_duration).
    The per-blockage mean holding time enters analytically, so all Monte
    Carlo randomness probes the geometric crossing rate.

    Returns (probability, number of simulated blocker trajectories).
    """
    rng = np.random.default_rng(seed)
    if length == 0 or params.density == 0 or params.velocity == 0:
        return 0.0, 0
    reach = params.velocity * t_slice + 1.0
    lx = length + 2 * reach
    ly = 2 * reach
    n_slices = int(np.ceil(total_time / t_slice))
    n = int(rng.poisson(params.density * lx * ly * n_slices))
    x0 = rng.uniform(-reach, length + reach, size=n)
    y0 = rng.uniform(-reach, reach, size=n)
    heading = rng.uniform(0.0, 2.0 * np.pi, size=n)
    vx = params.velocity * np.cos(heading)
    vy = params.velocity * np.sin(heading)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_cross = -y0 / vy
    x_cross = x0 + vx * t_cross
    los_height = tx_height + (rx_height - tx_height) * (x_cross / length)
    hits = np.isfinite(t_cross) & (t_cross > 0.0) & (t_cross <= t_slice) \
        & (x_cross >= 0.0) & (x_cross <= length) \
        & (los_height <= params.blocker_height)
    rate = float(np.count_nonzero(hits)) / (n_slices * t_slice)
    mu = 1.0 / params.mean_duration
    return rate / (rate + mu), n
