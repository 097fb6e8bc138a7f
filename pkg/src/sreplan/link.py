"""Link budgets: nominal SNR for direct, reflected, and repeated links,
the dynamic-blockage probability, and the long-term SNR mixture.

All SNRs are linear power ratios unless a name says otherwise.  Powers are
converted from dBm to milliwatts internally; only ratios matter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import phy
from .scene import CandidateSite
from .units import SPEED_OF_LIGHT, dbm_to_mw, linear_to_db


@dataclass(frozen=True)
class RadioParams:
    carrier_hz: float = 28e9
    bandwidth_hz: float = 200e6
    tx_power_dbm: float = 35.0
    noise_dbm: float = -82.0
    ncr_noise_dbm: float = -82.0

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


@dataclass(frozen=True)
class BlockageParams:
    blocker_height: float = 1.7   # m
    density: float = 4e-3         # blockers per m^2
    velocity: float = 15.0        # m/s
    mean_duration: float = 5.0    # s
    loss_db: float = 20.0         # attenuation while blocked


@dataclass(frozen=True)
class LinkBudget:
    snr_nominal_db: float
    snr_blocked_db: float
    blockage_probability: float
    snr_longterm_db: float

    @classmethod
    def from_linear(cls, nominal: float, blocked: float, p_block: float) -> "LinkBudget":
        lt = long_term_snr(nominal, blocked, p_block)
        return cls(linear_to_db(nominal), linear_to_db(blocked), p_block, linear_to_db(lt))


@dataclass(frozen=True)
class Mount:
    """An antenna array placed in the world."""
    position: np.ndarray
    array: phy.ArrayGeometry


def panel_mount(position, shape, pattern: str, wavelength: float,
                target=None, azimuth: float = 0.0,
                spacing_wl: float = phy.PANEL_SPACING_WL) -> Mount:
    """Panel at `position`.  With `target` the boresight points straight at
    it (an aimed backhaul/serving panel sees its partner at peak element
    gain); with `azimuth` the panel stays vertical with a horizontal
    boresight at that heading."""
    pos = np.asarray(position, dtype=float)
    elevation = 0.0
    if target is not None:
        d = np.asarray(target, dtype=float) - pos
        azimuth = float(np.arctan2(d[1], d[0]))
        elevation = float(np.arctan2(d[2], np.hypot(d[0], d[1])))
    rot = phy.facing_rotation(azimuth, elevation)
    return Mount(pos, phy.planar_array(shape, spacing_wl, wavelength, pattern, rot))


def single_antenna(position, pattern: str = "isotropic") -> Mount:
    pos = np.asarray(position, dtype=float)
    arr = phy.ArrayGeometry(np.zeros((1, 3)), np.eye(3), pattern)
    return Mount(pos, arr)


def _los_path(tx: Mount, rx: Mount, radio: RadioParams) -> phy.Path:
    return phy.geometric_path(tx.position, rx.position, radio.carrier_hz,
                              tx.array.orientation, rx.array.orientation)


def _path_power(path: phy.Path, tx: phy.ArrayGeometry, rx: phy.ArrayGeometry) -> float:
    """|amplitude|^2 including both element patterns (single-path channels)."""
    g_t = phy.element_gain(tx.pattern, *path.departure)
    g_r = phy.element_gain(rx.pattern, *path.arrival)
    return abs(path.amplitude) ** 2 * g_t * g_r


def _beamformed_snr(h: np.ndarray, radio: RadioParams) -> float:
    """sigma_s |w^H H f|^2 / (sigma_n |w|^2) at the jointly matched f, w
    with |f|^2 = N_t."""
    n_t = h.shape[1]
    smax = np.linalg.norm(h) if min(h.shape) == 1 else np.linalg.svd(h, compute_uv=False)[0]
    return dbm_to_mw(radio.tx_power_dbm) * n_t * smax ** 2 / dbm_to_mw(radio.noise_dbm)


def snr_direct(bs: Mount, ue: Mount, radio: RadioParams, paths=None) -> float:
    """Nominal SNR of the direct link with matched precoding and combining."""
    if paths is None:
        paths = [_los_path(bs, ue, radio)]
    h = phy.build_channel(bs.array, ue.array, paths, radio.wavelength)
    return _beamformed_snr(h, radio)


def ris_mount(site: CandidateSite, cfg: phy.RisConfig, wavelength: float) -> Mount:
    """RIS surface on a wall site, boresight along the outward normal."""
    az = float(np.arctan2(site.outward_normal[1], site.outward_normal[0]))
    rot = phy.facing_rotation(az, 0.0)
    arr = phy.planar_array(cfg.shape, phy.RIS_SPACING_WL, wavelength, "cosine", rot)
    return Mount(site.position.as_array(), arr)


def snr_ris(bs: Mount, site: CandidateSite, ue: Mount, cfg: phy.RisConfig,
            radio: RadioParams, paths_in=None, paths_out=None) -> float:
    """Nominal SNR through a wall-mounted reflecting surface.

    Geometry with the base station or the user behind the surface plane
    yields 0 (unserveable), not an error.  With ``cfg.phase_profile=None``
    the surface is co-phased for the link, which for the line-of-sight case
    reduces to the exact cascade sum_m |h_in_m||h_out_m|.
    """
    lam = radio.wavelength
    surface = ris_mount(site, cfg, lam)
    m = cfg.num_elements
    n_t = bs.array.num_elements
    n_r = ue.array.num_elements

    explicit = paths_in is not None or paths_out is not None
    if paths_in is None:
        paths_in = [_los_path(bs, surface, radio)]
    if paths_out is None:
        paths_out = [_los_path(surface, ue, radio)]

    if explicit:
        h_i = phy.build_channel(bs.array, surface.array, paths_in, lam)
        h_o = phy.build_channel(surface.array, ue.array, paths_out, lam)
        f = np.sqrt(n_t) * np.linalg.svd(h_i)[2].conj()[0]
        w = np.linalg.svd(h_o)[0][:, 0]
        h_in = h_i @ f
        h_out = w.conj() @ h_o
        if cfg.phase_profile is None:
            cascade = float(np.sum(np.abs(h_in) * np.abs(h_out)))
        else:
            cascade = abs(np.sum(h_out * np.exp(1j * cfg.phase_profile) * h_in))
        s = dbm_to_mw(radio.tx_power_dbm) / dbm_to_mw(radio.noise_dbm)
        return s * cascade ** 2

    # LoS route: rank-one hops.  Cosine patterns return 0 behind the plane,
    # which zeroes the whole cascade.
    p_in, p_out = paths_in[0], paths_out[0]
    g_in = _path_power(p_in, bs.array, surface.array)
    g_out = _path_power(p_out, surface.array, ue.array)
    if g_in == 0.0 or g_out == 0.0:
        return 0.0
    if cfg.phase_profile is None:
        cascade_sq = (m ** 2) * g_in * g_out * (n_t ** 2) * n_r
    else:
        a_in = phy.array_response(surface.array, *p_in.arrival, lam)
        a_out = phy.array_response(surface.array, *p_out.departure, lam)
        inner = np.sum(a_out.conj() * np.exp(1j * cfg.phase_profile) * a_in)
        cascade_sq = g_in * g_out * (n_t ** 2) * n_r * abs(inner) ** 2
    return dbm_to_mw(radio.tx_power_dbm) * cascade_sq / dbm_to_mw(radio.noise_dbm)


def ncr_panels(site: CandidateSite, cfg: phy.NcrConfig, bs_position,
               wavelength: float) -> tuple:
    """(receive panel toward the BS, forward panel along the site normal)."""
    pos = site.position.as_array()
    p1 = panel_mount(pos, cfg.panel_shape, "sector3gpp", wavelength, target=bs_position)
    az = float(np.arctan2(site.outward_normal[1], site.outward_normal[0]))
    p2 = panel_mount(pos, cfg.panel_shape, "sector3gpp", wavelength, azimuth=az)
    return p1, p2


def ncr_compound_snr(first_hop_peak: float, second_hop_peak: float, gain: float,
                     n_panel: int, radio: RadioParams):
    """Amplified-noise SNR: g s |w^H Ho u|^2 |b^H Hi f|^2 /
    (g v |w^H Ho u|^2 |b|^2 + n |w|^2) with matched unit-norm w."""
    s = dbm_to_mw(radio.tx_power_dbm)
    v = dbm_to_mw(radio.ncr_noise_dbm)
    n = dbm_to_mw(radio.noise_dbm)
    num = gain * s * second_hop_peak * first_hop_peak
    den = gain * v * second_hop_peak * n_panel + n
    return num / den


def snr_ncr(bs: Mount, site: CandidateSite, ue: Mount, cfg: phy.NcrConfig,
            radio: RadioParams, paths_in=None, paths_out=None) -> float:
    """Nominal SNR through a rooftop amplify-and-forward repeater."""
    lam = radio.wavelength
    p1, p2 = ncr_panels(site, cfg, bs.position, lam)
    n_t = bs.array.num_elements
    n_p = cfg.panel_elements
    n_r = ue.array.num_elements

    explicit = paths_in is not None or paths_out is not None or \
        cfg.receive_beam is not None or cfg.forward_beam is not None
    if paths_in is None:
        paths_in = [_los_path(bs, p1, radio)]
    if paths_out is None:
        paths_out = [_los_path(p2, ue, radio)]

    if explicit:
        h_i = phy.build_channel(bs.array, p1.array, paths_in, lam)
        h_o = phy.build_channel(p2.array, ue.array, paths_out, lam)
        f = np.sqrt(n_t) * np.linalg.svd(h_i)[2].conj()[0]
        v_in = h_i @ f
        b = cfg.receive_beam if cfg.receive_beam is not None \
            else np.sqrt(n_p) * v_in / np.linalg.norm(v_in)
        u = cfg.forward_beam if cfg.forward_beam is not None \
            else np.sqrt(n_p) * np.linalg.svd(h_o)[2].conj()[0]
        w = h_o @ u
        w = w / np.linalg.norm(w)
        first = abs(b.conj() @ v_in) ** 2
        second = abs(w.conj() @ (h_o @ u)) ** 2
        return float(ncr_compound_snr(first, second, cfg.gain, n_p, radio))

    first = _path_power(paths_in[0], bs.array, p1.array) * (n_p ** 2) * (n_t ** 2)
    second = _path_power(paths_out[0], p2.array, ue.array) * (n_p ** 2) * n_r
    return float(ncr_compound_snr(first, second, cfg.gain, n_p, radio))


def blockage_probability(length, tx_height: float, rx_height: float,
                         params: BlockageParams):
    """Stationary probability that moving ground blockers cut the link.

    Blockers of height h_B, density lambda_B, and speed V cross the link's
    ground projection at rate (2/pi) lambda_B V length beta, where beta is
    the fraction of the link whose line-of-sight height is within blocker
    reach.  Each crossing blocks the link for an exponential holding time
    with the configured mean, giving P = rate / (rate + 1/mean_duration).
    """
    r = np.asarray(length, dtype=float)
    if np.any(r < 0):
        raise ValueError("link length must be non-negative")
    h_lo = min(tx_height, rx_height)
    h_hi = max(tx_height, rx_height)
    if params.blocker_height <= h_lo or params.mean_duration <= 0:
        return np.zeros_like(r) if r.ndim else 0.0
    if h_hi == h_lo:
        beta = 1.0
    else:
        beta = min(1.0, (params.blocker_height - h_lo) / (h_hi - h_lo))
    rate = (2.0 / np.pi) * params.density * params.velocity * r * beta
    mu = 1.0 / params.mean_duration
    p = rate / (rate + mu)
    return p if p.ndim else float(p)


def long_term_snr(nominal, blocked, p_block):
    """Blockage-weighted mixture in the linear power domain."""
    p = np.asarray(p_block, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("blockage probability must lie in [0, 1]")
    out = p * np.asarray(blocked, dtype=float) + (1.0 - p) * np.asarray(nominal, dtype=float)
    return out if out.ndim else float(out)
