"""Exact minimum-cost device placement under K-fold coverage.

The integer program: choose at most one device per candidate site so that
every test point is covered K times (the base station counts once where it
is active), minimizing total installation cost.

Solved by branch and bound over include/exclude decisions on
(site, device) columns, with a dual-greedy unit bound and an LP-relaxation
bound (scipy HiGHS) for pruning.  Ties are resolved exactly by sequential
lexicographic optimization: minimize cost, then the number of installs
under a cost budget, then the number of repeaters, then fix the
lexicographically smallest site-id set and device choices through
feasibility probes.  `brute_force_plan` is the exhaustive oracle for small
instances; both routes produce identical plans.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .activation import ActivationMatrix

COST_EPS = 1e-9
BRUTE_FORCE_COLUMN_LIMIT = 24


@dataclass(frozen=True)
class PlanningInstance:
    activation: ActivationMatrix
    sites: tuple
    devices: tuple
    multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "devices", tuple(self.devices))
        if self.multiplicity < 1:
            raise ValueError("coverage multiplicity must be at least 1")
        if any(d.cost <= 0 for d in self.devices):
            raise ValueError("device costs must be strictly positive")


@dataclass(frozen=True)
class Plan:
    status: str                 # "optimal" | "infeasible"
    installs: tuple             # ((site_id, DeviceSpec), ...) sorted by site id
    total_cost: float
    coverage_count: np.ndarray  # per test point, including the base station
    uncoverable: tuple = ()

    @property
    def num_ris(self) -> int:
        return sum(1 for _, d in self.installs if d.kind == "ris")

    @property
    def num_ncr(self) -> int:
        return sum(1 for _, d in self.installs if d.kind == "ncr")


@dataclass(frozen=True)
class _Column:
    j: int  # index into the master column list (weight vectors align to it)
    site_idx: int
    site_id: int
    device_idx: int
    cost: float
    is_ncr: bool
    mask: int  # bitmask over reduced row indices


def _extract_columns(inst: PlanningInstance):
    """Residual rows (test points still needing coverage) and usable columns."""
    act = inst.activation
    k = inst.multiplicity
    req_full = np.maximum(0, k - act.bs_active.astype(int))
    rows = np.nonzero(req_full > 0)[0]
    row_pos = {int(t): i for i, t in enumerate(rows)}
    req = [int(req_full[t]) for t in rows]

    cols = []
    for ci in range(len(inst.sites)):
        for di in range(len(inst.devices)):
            covered = np.nonzero(act.device_active[:, ci, di])[0]
            mask = 0
            for t in covered:
                p = row_pos.get(int(t))
                if p is not None:
                    mask |= 1 << p
            if mask:
                cols.append(_Column(len(cols), ci, inst.sites[ci].id, di,
                                    inst.devices[di].cost,
                                    inst.devices[di].kind == "ncr", mask))
    return rows, req, cols


def check_feasibility(inst: PlanningInstance) -> list:
    """Ids of test points that cannot reach K-fold coverage even with every
    site equipped (each site counted once); empty list means feasible."""
    act = inst.activation
    site_covers = act.device_active.any(axis=2)  # (T, C)
    capacity = act.bs_active.astype(int) + site_covers.sum(axis=1)
    bad = np.nonzero(capacity < inst.multiplicity)[0]
    return [int(t) for t in bad]


def _plan_key(cost, chosen):
    """Lexicographic tie-break key for a complete solution."""
    site_ids = tuple(sorted(c.site_id for c in chosen))
    pairs = tuple(sorted((c.site_id, c.device_idx) for c in chosen))
    n_ncr = sum(1 for c in chosen if c.is_ncr)
    return (cost, len(chosen), n_ncr, site_ids, pairs)


def _key_better(a, b) -> bool:
    """True if key `a` beats key `b` (cost compared with tolerance)."""
    if a[0] < b[0] - COST_EPS:
        return True
    if a[0] > b[0] + COST_EPS:
        return False
    return a[1:] < b[1:]


def _canonical_cost(chosen) -> float:
    return math.fsum(c.cost for c in sorted(chosen, key=lambda c: (c.site_id, c.device_idx)))


def _finish_plan(inst: PlanningInstance, chosen) -> Plan:
    chosen = sorted(chosen, key=lambda c: (c.site_id, c.device_idx))
    installs = tuple((c.site_id, inst.devices[c.device_idx]) for c in chosen)
    act = inst.activation
    cover = act.bs_active.astype(int).copy()
    for c in chosen:
        cover += act.device_active[:, c.site_idx, c.device_idx].astype(int)
    return Plan("optimal", installs, _canonical_cost(chosen), cover)


def _infeasible_plan(inst: PlanningInstance, uncoverable) -> Plan:
    return Plan("infeasible", (), float("inf"),
                inst.activation.bs_active.astype(int), tuple(uncoverable))


def _site_dominance(cols):
    """Within one site, drop a column when a sibling covers a superset at a
    lower cost, or at a tied cost with a tie-break-preferred device (prefer
    non-repeater, then lower device index).  Swapping the dropped column for
    its dominator never worsens the plan tie-break, so optimality and the
    returned plan are both preserved."""
    by_site = {}
    for c in cols:
        by_site.setdefault(c.site_idx, []).append(c)
    kept = []
    for _, group in sorted(by_site.items()):
        for a in group:
            dominated = False
            for b in group:
                if b is a or (b.mask | a.mask) != b.mask:
                    continue
                if b.cost < a.cost - COST_EPS:
                    dominated = True
                    break
                if b.cost <= a.cost + COST_EPS and \
                        (b.is_ncr, b.device_idx) < (a.is_ncr, a.device_idx):
                    dominated = True
                    break
            if not dominated:
                kept.append(a)
    kept.sort(key=lambda c: (c.site_id, c.device_idx))
    return kept


def _row_dominance(req, cols):
    """Merge rows with identical coverer sets (keeping the strongest
    requirement) and drop any row implied by another whose coverer set is a
    subset with an equal-or-higher requirement.  Returns (new_req, columns
    remapped onto the surviving rows)."""
    n = len(req)
    coverers = [0] * n
    for j, c in enumerate(cols):
        m = c.mask
        while m:
            low = m & -m
            coverers[low.bit_length() - 1] |= 1 << j
            m ^= low
    strongest = {}
    for i in range(n):
        key = coverers[i]
        strongest[key] = max(strongest.get(key, 0), req[i])
    uniq = sorted(strongest.items())
    keep = []
    for m1, r1 in uniq:
        dominated = False
        for m2, r2 in uniq:
            if (m2, r2) != (m1, r1) and (m2 | m1) == m1 and r2 >= r1:
                dominated = True
                break
        if not dominated:
            keep.append((m1, r1))
    new_req = [r for _, r in keep]
    remapped = []
    for j, c in enumerate(cols):
        mask = 0
        for i, (m, _) in enumerate(keep):
            if (m >> j) & 1:
                mask |= 1 << i
        remapped.append(_Column(c.j, c.site_idx, c.site_id, c.device_idx,
                                c.cost, c.is_ncr, mask))
    return new_req, remapped


def _reindex(cols):
    """Renumber master indices 0..n-1 after presolve drops columns."""
    return [_Column(j, c.site_idx, c.site_id, c.device_idx, c.cost, c.is_ncr, c.mask)
            for j, c in enumerate(cols)]


def _unit_bound(req, active_mask, cols, weights):
    """Dual-feasible lower bound on sum(weights) over feasible completions:
    every still-needed coverage unit pays at least the cheapest per-unit
    weight among columns that can supply it.  inf when a live row has no
    coverer at all."""
    n = len(req)
    best_unit = [math.inf] * n
    for c in cols:
        m = c.mask & active_mask
        if not m:
            continue
        unit = weights[c.j] / m.bit_count()
        while m:
            low = m & -m
            i = low.bit_length() - 1
            if unit < best_unit[i]:
                best_unit[i] = unit
            m ^= low
    total = 0.0
    for i in range(n):
        if (active_mask >> i) & 1 and req[i] > 0:
            if math.isinf(best_unit[i]):
                return math.inf
            total += req[i] * best_unit[i]
    return total


def _coverage_matrix(n_rows, cols) -> np.ndarray:
    cov = np.zeros((n_rows, len(cols)), dtype=bool)
    for pos, c in enumerate(cols):
        m = c.mask
        while m:
            low = m & -m
            cov[low.bit_length() - 1, pos] = True
            m ^= low
    return cov


class _Subproblem:
    """One constrained search: minimize a column-weight sum subject to
    coverage, one-device-per-site, and linear budget rows."""

    def __init__(self, req, cols, weights, budgets, use_lp=True, find_any=False):
        self.req0 = list(req)
        self.cols0 = list(cols)
        self.weights = weights
        self.budgets = budgets  # list of (weight_vector, limit)
        self.use_lp = use_lp
        self.find_any = find_any
        self.n_rows = len(req)
        self.full_mask = (1 << self.n_rows) - 1 if self.n_rows else 0
        self.cov = _coverage_matrix(self.n_rows, cols)
        self.pos = {c.j: p for p, c in enumerate(cols)}
        self.best_value = math.inf
        self.best_chosen = None

    def _lp(self, req, active, avail, spent_budgets):
        live = [i for i in range(self.n_rows) if (active >> i) & 1 and req[i] > 0]
        if not live or not avail:
            return 0.0
        idx = [self.pos[c.j] for c in avail]
        a_cov = self.cov[np.ix_(live, idx)].astype(float)
        site_ids = np.array([c.site_idx for c in avail])
        sites = np.unique(site_ids)
        a_site = (site_ids[None, :] == sites[:, None]).astype(float)
        rows = [-a_cov, a_site]
        rhs = [-np.array([req[i] for i in live], dtype=float), np.ones(len(sites))]
        for (bw, limit), spent in zip(self.budgets, spent_budgets):
            rows.append(np.array([[bw[c.j] for c in avail]]))
            rhs.append(np.array([limit - spent]))
        res = linprog(c=[self.weights[c.j] for c in avail],
                      A_ub=np.vstack(rows), b_ub=np.concatenate(rhs),
                      bounds=[(0.0, 1.0)] * len(avail), method="highs")
        if res.status == 2:
            return math.inf
        if res.status != 0:
            return -math.inf
        return float(res.fun)

    def solve(self):
        if len(self.cols0) * 4 + 100 > sys.getrecursionlimit():
            sys.setrecursionlimit(len(self.cols0) * 4 + 1000)
        self._recurse(self.req0, self.full_mask, self.cols0, [], 0.0,
                      [0.0] * len(self.budgets))
        if self.best_chosen is None:
            return None
        return list(self.best_chosen)

    def _recurse(self, req, active, avail, chosen, value, spent_budgets):
        if not active:
            if value < self.best_value - COST_EPS:
                self.best_value = value
                self.best_chosen = list(chosen)
            return
        if self.find_any and self.best_chosen is not None:
            return
        bound = _unit_bound(req, active, avail, self.weights)
        if value + bound >= self.best_value - COST_EPS:
            return
        for (bw, limit), spent in zip(self.budgets, spent_budgets):
            if spent + _unit_bound(req, active, avail, bw) > limit + COST_EPS:
                return
        if self.use_lp and len(avail) > 8:
            lp = self._lp(req, active, avail, spent_budgets)
            if value + lp >= self.best_value - COST_EPS or lp == math.inf:
                return

        pick = None
        pick_score = None
        for c in avail:
            cov = (c.mask & active).bit_count()
            if not cov:
                continue
            score = (-cov / (self.weights[c.j] + 1e-9), c.site_id, c.device_idx)
            if pick_score is None or score < pick_score:
                pick_score = score
                pick = c
        if pick is None:
            return

        # Include pick.
        within = True
        spent2 = list(spent_budgets)
        for b, (bw, limit) in enumerate(self.budgets):
            spent2[b] += bw[pick.j]
            if spent2[b] > limit + COST_EPS:
                within = False
        if within:
            req2 = list(req)
            active2 = active
            m = pick.mask & active
            while m:
                low = m & -m
                i = low.bit_length() - 1
                req2[i] -= 1
                if req2[i] <= 0:
                    active2 &= ~low
                m ^= low
            chosen.append(pick)
            self._recurse(req2, active2,
                          [o for o in avail if o.site_idx != pick.site_idx],
                          chosen, value + self.weights[pick.j], spent2)
            chosen.pop()

        # Exclude pick.
        self._recurse(req, active, [o for o in avail if o is not pick],
                      chosen, value, spent_budgets)


def _force_site(req, cols, site_id):
    """Append a pseudo-row requiring one install at `site_id`."""
    bit = 1 << len(req)
    out = [_Column(c.j, c.site_idx, c.site_id, c.device_idx, c.cost, c.is_ncr,
                   c.mask | bit) if c.site_id == site_id else c
           for c in cols]
    return req + [1], out


def _solve_lexicographic(req, cols, *, use_lp=True):
    """Exact (cost, installs, repeaters, site-set, devices) lexicographic
    optimum via sequential constrained searches.  None when infeasible."""
    if not req:
        return []
    n = len(cols)
    cost_w = [0.0] * n
    ones_w = [0.0] * n
    ncr_w = [0.0] * n
    zero_w = [0.0] * n
    for c in cols:
        cost_w[c.j] = c.cost
        ones_w[c.j] = 1.0
        ncr_w[c.j] = 1.0 if c.is_ncr else 0.0

    best_cost = _Subproblem(req, cols, cost_w, [], use_lp).solve()
    if best_cost is None:
        return None
    c_star = _canonical_cost(best_cost)
    budget_cost = (cost_w, c_star + COST_EPS)

    min_installs = _Subproblem(req, cols, ones_w, [budget_cost], use_lp).solve()
    i_star = len(min_installs)
    budget_installs = (ones_w, i_star + 0.5)

    min_ncr = _Subproblem(req, cols, ncr_w, [budget_cost, budget_installs], use_lp).solve()
    n_star = sum(1 for c in min_ncr if c.is_ncr)
    budgets = [budget_cost, budget_installs, (ncr_w, n_star + 0.5)]

    # Fix the lexicographically smallest site-id set, one site at a time.
    cur_req, cur_cols = list(req), list(cols)
    fixed_sites = []
    floor = -1
    for _ in range(i_star):
        fixed = None
        for s in sorted({c.site_id for c in cur_cols if c.site_id > floor}):
            trial_cols = [c for c in cur_cols
                          if c.site_id <= floor or c.site_id >= s]
            t_req, t_cols = _force_site(cur_req, trial_cols, s)
            probe = _Subproblem(t_req, t_cols, zero_w, budgets, use_lp,
                                find_any=True).solve()
            if probe is not None:
                fixed = s
                break
        if fixed is None:  # cannot happen for a consistent i_star
            raise RuntimeError("lexicographic site fixing failed")
        cur_req, cur_cols = _force_site(
            cur_req, [c for c in cur_cols if c.site_id <= floor or c.site_id >= fixed],
            fixed)
        fixed_sites.append(fixed)
        floor = fixed

    # Fix the device at each chosen site, smallest index first.
    for s in fixed_sites:
        options = sorted({c.device_idx for c in cur_cols if c.site_id == s})
        for d in options:
            if len(options) == 1:
                break
            trial_cols = [c for c in cur_cols
                          if c.site_id != s or c.device_idx == d]
            probe = _Subproblem(cur_req, trial_cols, zero_w, budgets, use_lp,
                                find_any=True).solve()
            if probe is not None:
                cur_cols = trial_cols
                break
        else:
            raise RuntimeError("lexicographic device fixing failed")

    final = _Subproblem(cur_req, cur_cols, zero_w, budgets, use_lp,
                        find_any=True).solve()
    if final is None:
        raise RuntimeError("lexicographic device fixing failed")
    return final


def plan_min_cost(inst: PlanningInstance, presolve: bool = True,
                  use_lp: bool = True) -> Plan:
    """Provably cost-optimal plan, or an infeasible outcome with the
    uncoverable test points listed."""
    uncoverable = check_feasibility(inst)
    if uncoverable:
        return _infeasible_plan(inst, uncoverable)
    req, cols = _extract_columns(inst)[1:]
    if presolve:
        cols = _site_dominance(cols)
        req, cols = _row_dominance(req, cols)
    cols = _reindex(cols)
    chosen = _solve_lexicographic(req, cols, use_lp=use_lp)
    if chosen is None:
        return _infeasible_plan(inst, uncoverable)
    return _finish_plan(inst, chosen)


def write_instance(path, inst: PlanningInstance) -> None:
    """Serialize a planning instance as delimited text (regression fixtures).

    Only the activation booleans, device catalog, and multiplicity survive;
    SNR records are reduced to +/-inf consistent with the active entries.
    """
    act = inst.activation
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# schema: sreplan-instance/1\n")
        fh.write(f"# multiplicity: {inst.multiplicity}\n")
        fh.write(f"# site_ids: {','.join(str(s.id) for s in inst.sites)}\n")
        for di, d in enumerate(inst.devices):
            cfg = d.ris_shape[0] if d.kind == "ris" else d.ncr_gain_db
            fh.write(f"# device: {di}\t{d.kind}\t{cfg:g}\t{d.cost!r}\n")
        fh.write("tp_id\tsite\tdevice\tactive\n")
        for t in range(len(act.bs_active)):
            fh.write(f"{t}\tbs\t-\t{int(act.bs_active[t])}\n")
        for t, ci, di in zip(*np.nonzero(act.device_active)):
            fh.write(f"{t}\t{ci}\t{di}\t1\n")


def read_instance(path) -> PlanningInstance:
    """Rebuild a planning instance written by `write_instance`."""
    from .costs import DeviceSpec
    from .scene import CandidateSite, Point3

    multiplicity = 1
    site_ids = []
    devices = []
    bs_rows = {}
    links = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# multiplicity:"):
                multiplicity = int(line.split(":", 1)[1])
            elif line.startswith("# site_ids:"):
                raw = line.split(":", 1)[1].strip()
                site_ids = [int(v) for v in raw.split(",")] if raw else []
            elif line.startswith("# device:"):
                _, kind, cfg, cost = line.split(":", 1)[1].strip().split("\t")
                if kind == "ris":
                    side = int(float(cfg))
                    devices.append(DeviceSpec(kind="ris", cost=float(cost),
                                              ris_shape=(side, side)))
                else:
                    devices.append(DeviceSpec(kind="ncr", cost=float(cost),
                                              ncr_gain_db=float(cfg)))
            elif line.startswith("#") or line.startswith("tp_id"):
                continue
            else:
                t, site, dev, active = line.split("\t")
                if site == "bs":
                    bs_rows[int(t)] = bool(int(active))
                elif int(active):
                    links.append((int(t), int(site), int(dev)))
    n_t = len(bs_rows)
    bs_active = np.array([bs_rows[t] for t in range(n_t)], dtype=bool)
    device_active = np.zeros((n_t, len(site_ids), len(devices)), dtype=bool)
    for t, ci, di in links:
        device_active[t, ci, di] = True
    act = ActivationMatrix(
        threshold_db=0.0,
        bs_active=bs_active,
        device_active=device_active,
        bs_snr_db=np.where(bs_active, np.inf, -np.inf),
        device_snr_db=np.where(device_active, np.inf, -np.inf),
        bs_clear=bs_active.copy(),
        device_clear=device_active.copy(),
    )
    sites = [CandidateSite(sid, Point3(float(i), 0.0, 5.0), "wall",
                           np.array([1.0, 0.0]))
             for i, sid in enumerate(site_ids)]
    return PlanningInstance(activation=act, sites=sites, devices=devices,
                            multiplicity=multiplicity)


def brute_force_plan(inst: PlanningInstance) -> Plan:
    """Exhaustive enumeration oracle honoring one device per site and the
    same tie-breaking as `plan_min_cost`.  Guarded to small instances."""
    uncoverable = check_feasibility(inst)
    if uncoverable:
        return _infeasible_plan(inst, uncoverable)
    rows, req, cols = _extract_columns(inst)
    if len(cols) > BRUTE_FORCE_COLUMN_LIMIT:
        raise ValueError(
            f"instance too large for brute force: {len(cols)} columns "
            f"(limit {BRUTE_FORCE_COLUMN_LIMIT})")

    by_site = {}
    for c in cols:
        by_site.setdefault(c.site_idx, []).append(c)
    site_groups = [sorted(g, key=lambda c: c.device_idx) for _, g in sorted(by_site.items())]

    best = {"key": None, "chosen": None}

    def covered(chosen):
        need = list(req)
        for c in chosen:
            m = c.mask
            while m:
                low = m & -m
                need[low.bit_length() - 1] -= 1
                m ^= low
        return all(r <= 0 for r in need)

    def walk(gi, chosen, cost):
        if best["key"] is not None and cost > best["key"][0] + COST_EPS:
            return
        if gi == len(site_groups):
            if covered(chosen):
                key = _plan_key(_canonical_cost(chosen), chosen)
                if best["key"] is None or _key_better(key, best["key"]):
                    best["key"] = key
                    best["chosen"] = list(chosen)
            return
        for c in site_groups[gi]:
            chosen.append(c)
            walk(gi + 1, chosen, cost + c.cost)
            chosen.pop()
        walk(gi + 1, chosen, cost)  # no install at this site

    walk(0, [], 0.0)
    if best["chosen"] is None:
        return _infeasible_plan(inst, uncoverable)
    return _finish_plan(inst, best["chosen"])
