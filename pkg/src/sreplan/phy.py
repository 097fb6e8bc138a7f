"""Antenna-array geometry, element patterns, deterministic path channels,
and the RIS / repeater configuration primitives.

Conventions
-----------
Local array frame: boresight along +x, elements laid out in the y-z plane.
Angles are (azimuth, elevation): azimuth rotates +x toward +y, elevation
tilts toward +z.  Array responses are unnormalized (unit-modulus entries),
so ``norm(a)**2`` equals the element count.  Element radiation patterns are
power gains; they enter channel amplitudes via square roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .units import SPEED_OF_LIGHT

PATTERNS = ("isotropic", "sector3gpp", "cosine")

# Element spacings in wavelengths: panels at lambda/2, RIS grids at lambda/4.
PANEL_SPACING_WL = 0.5
RIS_SPACING_WL = 0.25

_SECTOR_PEAK_DBI = 8.0
_SECTOR_BEAMWIDTH_DEG = 65.0
_SECTOR_FLOOR_DB = 30.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions (L, 3) in the local frame plus a local-to-world
    rotation and the per-element radiation pattern."""

    element_positions: np.ndarray
    orientation: np.ndarray  # (3, 3) rotation, local -> world
    pattern: str = "isotropic"

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown element pattern {self.pattern!r}")
        if self.element_positions.ndim != 2 or self.element_positions.shape[1] != 3 \
                or self.element_positions.shape[0] < 1:
            raise ValueError("element_positions must be a nonempty (L, 3) array")

    @property
    def num_elements(self) -> int:
        return self.element_positions.shape[0]


@dataclass(frozen=True)
class Path:
    """One propagation path: complex amplitude (linear, includes spreading
    loss and phase) plus departure/arrival angles in the local array frames."""

    amplitude: complex
    departure: tuple  # (azimuth, elevation) at the transmitter
    arrival: tuple    # (azimuth, elevation) at the receiver
    length: float


@dataclass(frozen=True)
class RisConfig:
    """Reflecting surface configuration: element grid and optional explicit
    phase profile.  ``phase_profile=None`` means the surface is phase-aligned
    per link (the planning assumption for a reconfigurable device)."""

    shape: tuple  # (n_horizontal, n_vertical)
    phase_profile: np.ndarray | None = None

    @property
    def num_elements(self) -> int:
        return int(self.shape[0] * self.shape[1])

    def __post_init__(self):
        if self.shape[0] < 1 or self.shape[1] < 1:
            raise ValueError("RIS grid must be at least 1x1")
        if self.phase_profile is not None and len(self.phase_profile) != self.num_elements:
            raise ValueError("phase profile length must equal the element count")


@dataclass(frozen=True)
class NcrConfig:
    """Two-panel amplify-and-forward repeater configuration.

    ``gain`` is the linear power gain.  The receive/forward beams default to
    per-link matched beamforming; explicit vectors (norm^2 = panel element
    count) may be supplied instead.  ``panel_separation`` records the angular
    split between the panels; orientations, not the angle itself, enter the
    computations.
    """

    panel_shape: tuple  # (n_horizontal, n_vertical) per panel
    gain: float
    panel_separation: float = np.pi
    receive_beam: np.ndarray | None = None
    forward_beam: np.ndarray | None = None

    @property
    def panel_elements(self) -> int:
        return int(self.panel_shape[0] * self.panel_shape[1])

    def __post_init__(self):
        if self.gain <= 0:
            raise ValueError("repeater gain must be positive")
        for beam in (self.receive_beam, self.forward_beam):
            if beam is not None and len(beam) != self.panel_elements:
                raise ValueError("beam length must equal the panel element count")


def wave_vector(azimuth: float, elevation: float, wavelength: float) -> np.ndarray:
    """Propagation vector of a plane wave toward (azimuth, elevation)."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    k = 2.0 * np.pi / wavelength
    ce = np.cos(elevation)
    return k * np.array([ce * np.cos(azimuth), ce * np.sin(azimuth), np.sin(elevation)])


def array_response(geom: ArrayGeometry, azimuth: float, elevation: float,
                   wavelength: float) -> np.ndarray:
    """Unnormalized steering vector exp(j k^T nu_l) for the local direction."""
    k = wave_vector(azimuth, elevation, wavelength)
    return np.exp(1j * (geom.element_positions @ k))


def element_gain(pattern: str, azimuth, elevation):
    """Linear power gain of one element toward a local direction.

    isotropic: 1.  sector3gpp: parabolic-in-dB pattern, 65 deg half-power
    beamwidths in both cuts, 30 dB floor, 8 dBi peak.  cosine: cos(theta)
    relative to the +x surface normal on the front hemisphere, 0 behind.
    """
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    if pattern == "isotropic":
        return np.ones(np.broadcast(az, el).shape) if az.ndim or el.ndim else 1.0
    if pattern == "sector3gpp":
        az_deg = np.degrees(np.arctan2(np.sin(az), np.cos(az)))
        el_deg = np.degrees(el)
        a_h = np.minimum(12.0 * (az_deg / _SECTOR_BEAMWIDTH_DEG) ** 2, _SECTOR_FLOOR_DB)
        a_v = np.minimum(12.0 * (el_deg / _SECTOR_BEAMWIDTH_DEG) ** 2, _SECTOR_FLOOR_DB)
        att = np.minimum(a_h + a_v, _SECTOR_FLOOR_DB)
        out = 10.0 ** ((_SECTOR_PEAK_DBI - att) / 10.0)
        return out if out.ndim else float(out)
    if pattern == "cosine":
        out = np.maximum(np.cos(el) * np.cos(az), 0.0)
        return out if out.ndim else float(out)
    raise ValueError(f"unknown element pattern {pattern!r}")


def build_channel(tx: ArrayGeometry, rx: ArrayGeometry, paths,
                  wavelength: float) -> np.ndarray:
    """Deterministic multipath channel matrix (rx elements x tx elements).

    H = sum_p (alpha_p / sqrt(P)) sqrt(g_rx g_tx) a_rx a_tx^H, with element
    gains evaluated at each path's local angles.
    """
    if not paths:
        raise ValueError("paths must be nonempty")
    h = np.zeros((rx.num_elements, tx.num_elements), dtype=complex)
    scale = 1.0 / np.sqrt(len(paths))
    for p in paths:
        g_t = element_gain(tx.pattern, *p.departure)
        g_r = element_gain(rx.pattern, *p.arrival)
        a_t = array_response(tx, *p.departure, wavelength)
        a_r = array_response(rx, *p.arrival, wavelength)
        h += (p.amplitude * scale * np.sqrt(g_t * g_r)) * np.outer(a_r, a_t.conj())
    return h


def direction_angles(v) -> tuple:
    """(azimuth, elevation) of a direction vector."""
    v = np.asarray(v, dtype=float)
    az = np.arctan2(v[1], v[0])
    el = np.arctan2(v[2], np.hypot(v[0], v[1]))
    return float(az), float(el)


def geometric_path(tx_pos, rx_pos, f0: float,
                   tx_orient=None, rx_orient=None) -> Path:
    """Free-space line-of-sight path between two positions.

    Amplitude magnitude is lambda / (4 pi d) with phase -2 pi d / lambda.
    Departure/arrival angles are the LoS direction expressed in each array's
    local frame (identity orientation when omitted).
    """
    a = np.asarray(tx_pos, dtype=float)
    b = np.asarray(rx_pos, dtype=float)
    d = float(np.linalg.norm(b - a))
    if d <= 0:
        raise ValueError("positions must be distinct")
    lam = SPEED_OF_LIGHT / f0
    amp = (lam / (4.0 * np.pi * d)) * np.exp(-2j * np.pi * d / lam)
    u = (b - a) / d
    dep = u if tx_orient is None else tx_orient.T @ u
    arr = -u if rx_orient is None else rx_orient.T @ (-u)
    return Path(amplitude=complex(amp), departure=direction_angles(dep),
                arrival=direction_angles(arr), length=d)


def ris_phase_config(h_in, h_out) -> RisConfig:
    """Phase profile that co-phases the cascade sum_m h_out_m e^{j phi_m} h_in_m.

    Globally optimal for the diagonal phase problem: every term becomes real
    non-negative, so the cascade magnitude is sum_m |h_in_m||h_out_m|.
    """
    h_in = np.asarray(h_in)
    h_out = np.asarray(h_out)
    if h_in.shape != h_out.shape:
        raise ValueError("h_in and h_out must have equal length")
    phases = np.mod(-(np.angle(h_in) + np.angle(h_out)), 2.0 * np.pi)
    return RisConfig(shape=(len(h_in), 1), phase_profile=phases)


def mrt_beamformer(steering, n: int) -> np.ndarray:
    """Matched beamformer f = sqrt(n) steering* / ||steering||, norm^2 = n."""
    s = np.asarray(steering, dtype=complex)
    nrm = np.linalg.norm(s)
    if nrm == 0:
        raise ValueError("steering vector must be nonzero")
    return np.sqrt(n) * s.conj() / nrm


def planar_array(shape, spacing_wl: float, wavelength: float,
                 pattern: str = "isotropic", orientation=None) -> ArrayGeometry:
    """Uniform planar array in the local y-z plane, centered on the origin."""
    n_h, n_v = int(shape[0]), int(shape[1])
    d = spacing_wl * wavelength
    ys = (np.arange(n_h) - (n_h - 1) / 2.0) * d
    zs = (np.arange(n_v) - (n_v - 1) / 2.0) * d
    gy, gz = np.meshgrid(ys, zs, indexing="ij")
    pos = np.stack([np.zeros(n_h * n_v), gy.ravel(), gz.ravel()], axis=1)
    rot = np.eye(3) if orientation is None else np.asarray(orientation, dtype=float)
    return ArrayGeometry(element_positions=pos, orientation=rot, pattern=pattern)


def facing_rotation(azimuth: float, elevation: float = 0.0) -> np.ndarray:
    """Rotation whose +x boresight points toward (azimuth, elevation) in world
    coordinates, keeping the array's vertical axis upright."""
    ca, sa = np.cos(azimuth), np.sin(azimuth)
    ce, se = np.cos(elevation), np.sin(elevation)
    x = np.array([ce * ca, ce * sa, se])
    y = np.array([-sa, ca, 0.0])
    z = np.cross(x, y)
    return np.stack([x, y, z], axis=1)
