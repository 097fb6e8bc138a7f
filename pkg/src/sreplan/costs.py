"""Device catalog and the two affine cost models.

Costs are dimensionless relative units anchored so that a 100x100
reflecting surface costs 1 unit under the default parameters.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CostParams:
    ris_deploy: float = 0.4      # fixed deployment cost of a RIS
    ris_per_atom: float = 6e-5   # unit cost per meta-atom
    ncr_deploy: float = 0.8      # fixed deployment cost of a repeater
    ncr_per_db: float = 0.04     # cost per dB of amplification gain

    def __post_init__(self):
        if min(self.ris_deploy, self.ris_per_atom, self.ncr_deploy, self.ncr_per_db) < 0:
            raise ValueError("cost parameters must be non-negative")


def ris_cost(num_elements: int, params: CostParams) -> float:
    """Deployment plus per-meta-atom cost."""
    if num_elements < 0:
        raise ValueError("element count must be non-negative")
    return params.ris_deploy + params.ris_per_atom * num_elements


def ncr_cost(gain_db: float, params: CostParams) -> float:
    """Deployment plus per-dB amplification cost."""
    if gain_db < 0:
        raise ValueError("gain must be non-negative (dB)")
    return params.ncr_deploy + params.ncr_per_db * gain_db


@dataclass(frozen=True)
class DeviceSpec:
    """One installable device type: a technology plus configuration.

    Exactly one of ``ris_shape`` / ``ncr_gain_db`` is set, matching `kind`.
    """

    kind: str                 # "ris" | "ncr"
    cost: float
    ris_shape: tuple | None = None   # (n_h, n_v) meta-atom grid
    ncr_gain_db: float | None = None

    def __post_init__(self):
        if self.kind not in ("ris", "ncr"):
            raise ValueError("device kind must be 'ris' or 'ncr'")
        if (self.ris_shape is None) == (self.ncr_gain_db is None):
            raise ValueError("exactly one of ris_shape / ncr_gain_db must be set")
        if self.kind == "ris" and self.ris_shape is None:
            raise ValueError("ris device needs a ris_shape")
        if self.kind == "ncr" and self.ncr_gain_db is None:
            raise ValueError("ncr device needs a gain")
        if self.cost <= 0:
            raise ValueError("device cost must be positive")

    @property
    def num_elements(self) -> int:
        return int(self.ris_shape[0] * self.ris_shape[1])

    @property
    def label(self) -> str:
        if self.kind == "ris":
            return f"ris_{self.ris_shape[0]}x{self.ris_shape[1]}"
        return f"ncr_{self.ncr_gain_db:g}dB"


def build_catalog(ris_dims, ncr_gains_db, params: CostParams,
                  ncr_cost_override: float | None = None) -> list:
    """Device list from RIS side lengths and repeater gains.

    ``ncr_cost_override`` pins every repeater's price (used for price-ratio
    sweeps with fixed configurations).
    """
    catalog = []
    for dim in ris_dims:
        shape = (int(dim), int(dim))
        catalog.append(DeviceSpec(kind="ris", cost=ris_cost(shape[0] * shape[1], params),
                                  ris_shape=shape))
    for g in ncr_gains_db:
        cost = ncr_cost_override if ncr_cost_override is not None else ncr_cost(g, params)
        catalog.append(DeviceSpec(kind="ncr", cost=cost, ncr_gain_db=float(g)))
    return catalog
