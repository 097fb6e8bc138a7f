"""Per-link feasibility: evaluate every base-station and device link against
the SNR threshold and emit the boolean activation matrices the planner uses.

Static occlusion by buildings is a hard veto, separate from the statistical
dynamic blockage folded into the long-term SNR.  The base station aims its
panel straight at whatever it serves (test point or candidate site), and
repeater panel 1 aims at the base station, so aimed hops depart and arrive
at peak element gain; repeater panel 2 stays vertical along the site's
outward normal; a reflecting surface serves only geometry in front of its
plane.

Dynamic blockage applies to ground-level hops (base station to test point,
device to test point).  The elevated backhaul hop lies above blocker reach,
so its blockage probability is zero by the height-clamping rule; it is
skipped outright.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .link import BlockageParams, RadioParams, blockage_probability, ncr_compound_snr
from .phy import element_gain
from .scene import Scene, occluded_from
from .units import db_to_linear, dbm_to_mw, linear_to_db


@dataclass(frozen=True)
class ActivationMatrix:
    """Boolean activation per test point (BS) and per (TP, site, device),
    with the long-term SNR record (dB, -inf where a link is structurally
    impossible) retained for reporting and re-thresholding."""

    threshold_db: float
    bs_active: np.ndarray      # (T,) bool
    device_active: np.ndarray  # (T, C, D) bool
    bs_snr_db: np.ndarray      # (T,) float
    device_snr_db: np.ndarray  # (T, C, D) float
    bs_clear: np.ndarray       # (T,) bool: unoccluded
    device_clear: np.ndarray   # (T, C, D) bool: unoccluded, compatible, front side

    def with_threshold(self, threshold_db: float) -> "ActivationMatrix":
        """Re-threshold from the stored SNR records (no link re-evaluation)."""
        return ActivationMatrix(
            threshold_db=threshold_db,
            bs_active=self.bs_clear & (self.bs_snr_db >= threshold_db),
            device_active=self.device_clear & (self.device_snr_db >= threshold_db),
            bs_snr_db=self.bs_snr_db,
            device_snr_db=self.device_snr_db,
            bs_clear=self.bs_clear,
            device_clear=self.device_clear,
        )


def compute_activation(scene: Scene, sites, devices, tps, radio: RadioParams,
                       blockage: BlockageParams, threshold_db: float,
                       bs_shape=(12, 16), ncr_panel_shape=(12, 6),
                       ue_elements: int = 1, threads: int = 1) -> ActivationMatrix:
    """Evaluate all links and threshold them at `threshold_db`.

    Links use the closed-form single-path SNR algebra (identical to the
    per-link reference functions in the link module, which tests assert).
    """
    t_n = len(tps)
    c_n = len(sites)
    d_n = len(devices)
    tp_pos = np.array([tp.position.as_array() for tp in tps]).reshape(t_n, 3)
    bs_pos = scene.bs_position.as_array()
    ue_z = float(tp_pos[0, 2]) if t_n else 0.0

    lam = radio.wavelength
    s_mw = dbm_to_mw(radio.tx_power_dbm)
    n_mw = dbm_to_mw(radio.noise_dbm)
    n_t = int(np.prod(bs_shape))
    n_p = int(np.prod(ncr_panel_shape))
    n_r = int(ue_elements)
    att = db_to_linear(-blockage.loss_db)

    def fspl(d):
        return (lam / (4.0 * np.pi * d)) ** 2

    # The BS aims its panel at whatever it serves: peak element gain on
    # every direct and backhaul departure.
    g_peak = float(element_gain("sector3gpp", 0.0, 0.0))

    # Direct links.
    dvec = tp_pos - bs_pos
    d3 = np.linalg.norm(dvec, axis=1)
    dh = np.hypot(dvec[:, 0], dvec[:, 1])
    gamma0 = (s_mw / n_mw) * (n_t ** 2) * n_r * fspl(d3) * g_peak
    p_b = np.asarray(blockage_probability(dh, bs_pos[2], ue_z, blockage))
    gamma_lt = p_b * gamma0 * att + (1.0 - p_b) * gamma0
    bs_clear = ~occluded_from(bs_pos, tp_pos, scene)
    bs_snr_db = np.where(bs_clear, linear_to_db(gamma_lt), -np.inf)

    device_snr_db = np.full((t_n, c_n, d_n), -np.inf)
    device_clear = np.zeros((t_n, c_n, d_n), dtype=bool)

    def eval_site(ci):
        site = sites[ci]
        spos = site.position.as_array()
        nx, ny = site.outward_normal

        # Backhaul hop (elevated, blocker-free).  The repeater's receive
        # panel is aimed at the BS, so both ends sit at peak element gain.
        occ_in = bool(occluded_from(bs_pos, spos[None, :], scene)[0])
        bvec = spos - bs_pos
        b3 = float(np.linalg.norm(bvec))
        cos_in = float((-bvec[0] * nx - bvec[1] * ny) / b3)
        gain_in_ris = fspl(b3) * g_peak * max(cos_in, 0.0)
        gain_in_ncr = fspl(b3) * g_peak * g_peak

        # Access hop, vectorized over test points.
        occ_out = occluded_from(spos, tp_pos, scene)
        ovec = tp_pos - spos
        o3 = np.linalg.norm(ovec, axis=1)
        oh = np.hypot(ovec[:, 0], ovec[:, 1])
        cos_out = (ovec[:, 0] * nx + ovec[:, 1] * ny) / o3
        az_n = np.arctan2(ny, nx)
        az_rel = np.arctan2(ovec[:, 1], ovec[:, 0]) - az_n
        el_out = np.arctan2(ovec[:, 2], oh)
        g_p2 = element_gain("sector3gpp", az_rel, el_out)
        gain_out_ris = fspl(o3) * np.maximum(cos_out, 0.0)
        gain_out_ncr = fspl(o3) * g_p2
        p_hop = np.asarray(blockage_probability(oh, spos[2], ue_z, blockage))

        for di, dev in enumerate(devices):
            if dev.kind == "ris" and site.kind == "wall":
                if occ_in or cos_in <= 0.0:
                    continue
                m = dev.num_elements
                g0 = (s_mw / n_mw) * (m ** 2) * (n_t ** 2) * n_r * gain_in_ris * gain_out_ris
                g_lt = p_hop * g0 * att + (1.0 - p_hop) * g0
                clear = (~occ_out) & (cos_out > 0.0)
            elif dev.kind == "ncr" and site.kind == "rooftop":
                if occ_in:
                    continue
                g_lin = db_to_linear(dev.ncr_gain_db)
                first = gain_in_ncr * (n_p ** 2) * (n_t ** 2)
                second = gain_out_ncr * (n_p ** 2) * n_r
                g0 = ncr_compound_snr(first, second, g_lin, n_p, radio)
                g_blocked = ncr_compound_snr(first, second * att, g_lin, n_p, radio)
                g_lt = p_hop * g_blocked + (1.0 - p_hop) * g0
                clear = ~occ_out
            else:
                continue
            device_clear[:, ci, di] = clear
            device_snr_db[:, ci, di] = np.where(clear, linear_to_db(g_lt), -np.inf)

    if threads > 1 and c_n > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(eval_site, range(c_n)))
    else:
        for ci in range(c_n):
            eval_site(ci)

    return ActivationMatrix(
        threshold_db=threshold_db,
        bs_active=bs_clear & (bs_snr_db >= threshold_db),
        device_active=device_clear & (device_snr_db >= threshold_db),
        bs_snr_db=bs_snr_db,
        device_snr_db=device_snr_db,
        bs_clear=bs_clear,
        device_clear=device_clear,
    )


def write_audit_table(path, act: ActivationMatrix, tps, sites, devices) -> None:
    """Dump every (TP, site, device) entry as delimited text for audit."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# schema: sreplan-activation/1\n")
        fh.write("tp_id\tsite_id\tdevice\tsnr_db\tactive\n")
        for ti, tp in enumerate(tps):
            fh.write(f"{tp.id}\tbs\tbs\t{act.bs_snr_db[ti]:.3f}\t{int(act.bs_active[ti])}\n")
            for ci, site in enumerate(sites):
                for di, dev in enumerate(devices):
                    fh.write(f"{tp.id}\t{site.id}\t{dev.label}\t"
                             f"{act.device_snr_db[ti, ci, di]:.3f}\t"
                             f"{int(act.device_active[ti, ci, di])}\n")
