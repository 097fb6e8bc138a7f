"""Decibel/linear conversions shared across the package."""

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


def db_to_linear(db):
    """Power ratio from dB."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    """dB from a linear power ratio; 0 maps to -inf without warnings."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(x)
    return out if out.ndim else float(out)


def dbm_to_mw(dbm):
    """Milliwatts from dBm."""
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)
