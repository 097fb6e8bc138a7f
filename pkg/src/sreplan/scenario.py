"""Scenario configuration files, scene file schema, and the seeded
synthetic-map generator used for non-site-specific studies.

Both file formats are JSON with a versioned ``schema`` key:

Scene (``sreplan-scene/1``)::

    {"schema": "sreplan-scene/1",
     "bounds": [xmin, ymin, xmax, ymax],
     "bs": {"x": ..., "y": ..., "z": ...},
     "buildings": [{"vertices": [[x, y], ...], "height": 6.0}, ...]}

Config (``sreplan-config/1``): every key optional except ``scene``; defaults
mirror the standard simulation parameter table (28 GHz, 200 MHz, 35 dBm
transmit, -82 dBm noise, 12x16 BS panel, 12x6 repeater panels, 100x100
surface at 1 unit, 55 dB repeater at 3 units, blocker statistics
h=1.7 m, density 4e-3 /m^2, 15 m/s, 5 s mean duration).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .costs import CostParams
from .link import BlockageParams, RadioParams
from .scene import Building, Point3, Scene

SCENE_SCHEMA = "sreplan-scene/1"
CONFIG_SCHEMA = "sreplan-config/1"
SWEEP_SCHEMA = "sreplan-sweep/1"

SWEEP_PARAMETERS = ("price_ratio", "ris_dim", "ncr_gain", "snr_threshold", "multiplicity")


@dataclass(frozen=True)
class ArraysConfig:
    bs_shape: tuple = (12, 16)
    ncr_panel_shape: tuple = (12, 6)
    ue_elements: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    scene: str
    radio: RadioParams = field(default_factory=RadioParams)
    blockage: BlockageParams = field(default_factory=BlockageParams)
    costs: CostParams = field(default_factory=CostParams)
    arrays: ArraysConfig = field(default_factory=ArraysConfig)
    ris_dims: tuple = (100,)
    ncr_gains_db: tuple = (55.0,)
    snr_threshold_db: float = 0.0
    multiplicity: int = 1
    tp_step_m: float = 5.0
    ue_height_m: float = 1.5
    ris_spacing_m: float = 5.0
    ris_height_m: float = 5.0
    ncr_height_m: float = 6.5
    seed: int = 0

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be at least 1")
        if min(self.tp_step_m, self.ris_spacing_m) <= 0:
            raise ValueError("grid step and site spacing must be positive")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    scenes: tuple  # scene file paths; empty means "use the config scene"

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; "
                             f"one of {SWEEP_PARAMETERS}")
        if not self.values:
            raise ValueError("sweep values must be nonempty")


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = {"schema": CONFIG_SCHEMA, "scene": cfg.scene}
    d["radio"] = asdict(cfg.radio)
    d["blockage"] = asdict(cfg.blockage)
    d["costs"] = asdict(cfg.costs)
    d["arrays"] = {"bs_shape": list(cfg.arrays.bs_shape),
                   "ncr_panel_shape": list(cfg.arrays.ncr_panel_shape),
                   "ue_elements": cfg.arrays.ue_elements}
    d["catalog"] = {"ris_dims": list(cfg.ris_dims),
                    "ncr_gains_db": list(cfg.ncr_gains_db)}
    for key in ("snr_threshold_db", "multiplicity", "tp_step_m", "ue_height_m",
                "ris_spacing_m", "ris_height_m", "ncr_height_m", "seed"):
        d[key] = getattr(cfg, key)
    return d


def config_from_dict(d: dict) -> ScenarioConfig:
    if "scene" not in d:
        raise ValueError("config is missing the 'scene' key")
    kw = {"scene": d["scene"]}
    if "radio" in d:
        kw["radio"] = RadioParams(**d["radio"])
    if "blockage" in d:
        kw["blockage"] = BlockageParams(**d["blockage"])
    if "costs" in d:
        kw["costs"] = CostParams(**d["costs"])
    if "arrays" in d:
        a = d["arrays"]
        kw["arrays"] = ArraysConfig(
            bs_shape=tuple(a.get("bs_shape", (12, 16))),
            ncr_panel_shape=tuple(a.get("ncr_panel_shape", (12, 6))),
            ue_elements=int(a.get("ue_elements", 1)))
    cat = d.get("catalog", {})
    if "ris_dims" in cat:
        kw["ris_dims"] = tuple(int(v) for v in cat["ris_dims"])
    if "ncr_gains_db" in cat:
        kw["ncr_gains_db"] = tuple(float(v) for v in cat["ncr_gains_db"])
    for key in ("snr_threshold_db", "tp_step_m", "ue_height_m", "ris_spacing_m",
                "ris_height_m", "ncr_height_m"):
        if key in d:
            kw[key] = float(d[key])
    for key in ("multiplicity", "seed"):
        if key in d:
            kw[key] = int(d[key])
    return ScenarioConfig(**kw)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def save_config(cfg: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def apply_overrides(cfg: ScenarioConfig, overrides) -> ScenarioConfig:
    """Apply ``key=value`` strings (dotted keys reach sections, e.g.
    ``radio.tx_power_dbm=30`` or ``catalog.ris_dims=[50,100]``)."""
    d = config_to_dict(cfg)
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = d
        parts = key.split(".")
        for p in parts[:-1]:
            if p not in node or not isinstance(node[p], dict):
                raise ValueError(f"unknown config section {p!r} in {key!r}")
            node = node[p]
        if parts[-1] not in node:
            raise ValueError(f"unknown config key {key!r}")
        node[parts[-1]] = value
    return config_from_dict(d)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "schema": SCENE_SCHEMA,
        "bounds": list(scene.bounds),
        "bs": {"x": scene.bs_position.x, "y": scene.bs_position.y, "z": scene.bs_position.z},
        "buildings": [{"vertices": b.footprint.tolist(), "height": b.height}
                      for b in scene.buildings],
    }


def scene_from_dict(d: dict) -> Scene:
    try:
        buildings = tuple(Building(b["vertices"], b["height"]) for b in d.get("buildings", []))
        bs = d["bs"]
        return Scene(buildings=buildings, bounds=tuple(float(v) for v in d["bounds"]),
                     bs_position=Point3(float(bs["x"]), float(bs["y"]), float(bs["z"])))
    except KeyError as exc:
        raise ValueError(f"scene file is missing key {exc}") from exc


def load_scene(path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2)
        fh.write("\n")


def load_sweep(path) -> SweepSpec:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return SweepSpec(parameter=d["parameter"], values=tuple(d["values"]),
                     scenes=tuple(d.get("scenes", [])))


def generate_scene(seed: int, size: float = 400.0, n_buildings: int = 12,
                   building_height: float = 6.0, bs_height_offset: float = 1.5,
                   min_radius: float = 10.0, max_radius: float = 24.0,
                   street_gap: float = 8.0) -> Scene:
    """Seeded synthetic map: disjoint convex buildings of uniform height in a
    square region, with the base station on the roof of the most central one.
    """
    rng = np.random.default_rng(seed)
    placed = []
    footprints = []
    attempts = 0
    while len(footprints) < n_buildings and attempts < 200 * n_buildings:
        attempts += 1
        radius = rng.uniform(min_radius, max_radius)
        margin = radius + street_gap
        center = rng.uniform(margin, size - margin, size=2)
        if any(np.hypot(*(center - pc)) < radius + pr + street_gap for pc, pr in placed):
            continue
        k = int(rng.integers(6, 11))
        angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=k))
        radii = rng.uniform(0.55, 1.0, size=k) * radius
        pts = center + np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
        hull = ConvexHull(pts)
        footprints.append(pts[hull.vertices])
        placed.append((center, radius))
    buildings = tuple(Building(fp, building_height) for fp in footprints)
    mid = np.array([size / 2.0, size / 2.0])
    host = min(buildings, key=lambda b: float(np.hypot(*(b.centroid - mid))))
    bs = Point3(float(host.centroid[0]), float(host.centroid[1]),
                host.height + bs_height_offset)
    return Scene(buildings=buildings, bounds=(0.0, 0.0, size, size), bs_position=bs)
