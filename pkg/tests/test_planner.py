import numpy as np
import pytest

from sreplan.activation import ActivationMatrix
from sreplan.costs import DeviceSpec
from sreplan.planner import (PlanningInstance, brute_force_plan, check_feasibility,
                             plan_min_cost)
from sreplan.scene import CandidateSite, Point3


def stub_sites(n, ids=None):
    ids = list(range(n)) if ids is None else ids
    return [CandidateSite(i, Point3(float(i), 0.0, 5.0), "wall", np.array([1.0, 0.0]))
            for i in ids]


def ris_dev(cost, side=100):
    return DeviceSpec(kind="ris", cost=cost, ris_shape=(side, side))


def ncr_dev(cost, gain=55.0):
    return DeviceSpec(kind="ncr", cost=cost, ncr_gain_db=gain)


def make_instance(bs_active, device_active, devices, k=1, site_ids=None):
    bs_active = np.asarray(bs_active, dtype=bool)
    device_active = np.asarray(device_active, dtype=bool)
    t, c, d = device_active.shape
    act = ActivationMatrix(
        threshold_db=0.0,
        bs_active=bs_active,
        device_active=device_active,
        bs_snr_db=np.where(bs_active, 20.0, -np.inf),
        device_snr_db=np.where(device_active, 20.0, -np.inf),
        bs_clear=bs_active.copy(),
        device_clear=device_active.copy(),
    )
    return PlanningInstance(activation=act, sites=stub_sites(c, site_ids),
                            devices=devices, multiplicity=k)


def random_instance(rng, max_sites=6, max_tps=30, k_choices=(1, 2)):
    n_t = int(rng.integers(2, max_tps + 1))
    n_c = int(rng.integers(1, max_sites + 1))
    devices = [ris_dev(float(rng.choice([0.5, 1.0, 1.5]))),
               ncr_dev(float(rng.choice([1.0, 2.0, 3.0])))]
    density = rng.uniform(0.3, 0.75)
    device_active = rng.random((n_t, n_c, 2)) < density
    bs_active = rng.random(n_t) < 0.5
    k = int(rng.choice(k_choices))
    return make_instance(bs_active, device_active, devices, k=k)


def plans_equal(a, b):
    if a.status != b.status:
        return False
    if a.status == "infeasible":
        return a.uncoverable == b.uncoverable
    return (a.total_cost == b.total_cost
            and [(s, d.label) for s, d in a.installs] == [(s, d.label) for s, d in b.installs])


class TestCheckFeasibility:
    def test_uncovered_tp_reported(self):
        inst = make_instance([False, True], np.zeros((2, 1, 1), bool), [ris_dev(1.0)])
        assert check_feasibility(inst) == [0]

    def test_bs_only_feasible(self):
        inst = make_instance([True, True], np.zeros((2, 1, 1), bool), [ris_dev(1.0)])
        assert check_feasibility(inst) == []
        plan = plan_min_cost(inst)
        assert plan.status == "optimal" and plan.total_cost == 0.0 and plan.installs == ()

    def test_counting_argument_with_multiplicity(self):
        # One TP reachable via the BS plus one site (two devices there).
        dev_act = np.zeros((1, 1, 2), bool)
        dev_act[0, 0, :] = True
        devices = [ris_dev(1.0), ncr_dev(3.0)]
        assert check_feasibility(make_instance([True], dev_act, devices, k=2)) == []
        assert check_feasibility(make_instance([True], dev_act, devices, k=3)) == [0]


class TestPlanMinCost:
    def test_picks_cheaper_option(self):
        dev_act = np.zeros((1, 2, 2), bool)
        dev_act[0, 0, 1] = True  # ncr at site 0 covers
        dev_act[0, 1, 0] = True  # ris at site 1 covers
        devices = [ris_dev(1.0), ncr_dev(3.0)]
        plan = plan_min_cost(make_instance([False], dev_act, devices))
        assert plan.total_cost == 1.0
        assert [(s, d.label) for s, d in plan.installs] == [(1, "ris_100x100")]

    def test_infeasible_outcome(self):
        inst = make_instance([False], np.zeros((1, 1, 1), bool), [ris_dev(1.0)])
        plan = plan_min_cost(inst)
        assert plan.status == "infeasible"
        assert plan.uncoverable == (0,)

    def test_one_device_per_site(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            inst = random_instance(rng)
            plan = plan_min_cost(inst)
            if plan.status == "optimal":
                sids = [s for s, _ in plan.installs]
                assert len(sids) == len(set(sids))
                assert np.all(plan.coverage_count >= inst.multiplicity)
                assert plan.total_cost == pytest.approx(
                    sum(d.cost for _, d in plan.installs))

    def test_site_exclusivity_binds(self):
        # K=2 for one TP covered by two devices at one site plus one elsewhere:
        # the same-site pair cannot both be used.
        dev_act = np.zeros((1, 2, 2), bool)
        dev_act[0, 0, 0] = True
        dev_act[0, 0, 1] = True
        dev_act[0, 1, 1] = True
        devices = [ris_dev(1.0), ncr_dev(3.0)]
        plan = plan_min_cost(make_instance([False], dev_act, devices, k=2))
        assert plan.status == "optimal"
        sids = sorted(s for s, _ in plan.installs)
        assert sids == [0, 1]
        assert plan.total_cost == pytest.approx(4.0)

    def test_search_detects_assignment_infeasibility(self):
        # Counting passes (two sites reach each TP) but one device per site
        # cannot satisfy both TPs at K=2.
        dev_act = np.zeros((2, 2, 2), bool)
        dev_act[0, 0, 0] = True  # tp0: site0/ris, site1/ris
        dev_act[0, 1, 0] = True
        dev_act[1, 0, 1] = True  # tp1: site0/ncr, site1/ncr
        dev_act[1, 1, 1] = True
        devices = [ris_dev(1.0), ncr_dev(3.0)]
        inst = make_instance([False, False], dev_act, devices, k=2)
        assert check_feasibility(inst) == []
        plan = plan_min_cost(inst)
        assert plan.status == "infeasible"
        assert brute_force_plan(inst).status == "infeasible"


class TestOracleEquality:
    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(2024)
        statuses = {"optimal": 0, "infeasible": 0}
        for _ in range(120):
            inst = random_instance(rng)
            got = plan_min_cost(inst)
            want = brute_force_plan(inst)
            assert plans_equal(got, want), (got, want)
            statuses[got.status] += 1
        assert statuses["optimal"] >= 60  # the family is not degenerate

    def test_presolve_and_lp_do_not_change_plans(self):
        rng = np.random.default_rng(77)
        for _ in range(40):
            inst = random_instance(rng)
            base = plan_min_cost(inst)
            assert plans_equal(base, plan_min_cost(inst, presolve=False))
            assert plans_equal(base, plan_min_cost(inst, use_lp=False))

    def test_tie_break_prefers_fewest_then_ris_then_low_site_ids(self):
        # Two equal-cost covers: {site0 ncr} vs {site1 ris + site2 ris}.
        dev_act = np.zeros((2, 3, 2), bool)
        dev_act[:, 0, 1] = True          # ncr at site 0 covers both, cost 2
        dev_act[0, 1, 0] = True          # ris at site 1 covers tp0, cost 1
        dev_act[1, 2, 0] = True          # ris at site 2 covers tp1, cost 1
        devices = [ris_dev(1.0), ncr_dev(2.0)]
        plan = plan_min_cost(make_instance([False, False], dev_act, devices))
        assert plan.total_cost == pytest.approx(2.0)
        assert [s for s, _ in plan.installs] == [0]  # fewest installs wins

        # Equal cost, equal installs: prefer the ris.
        dev_act2 = np.zeros((1, 2, 2), bool)
        dev_act2[0, 0, 1] = True
        dev_act2[0, 1, 0] = True
        devices2 = [ris_dev(1.0), ncr_dev(1.0)]
        plan2 = plan_min_cost(make_instance([False], dev_act2, devices2))
        assert [d.kind for _, d in plan2.installs] == ["ris"]

        # Equal everything: smallest site-id set.
        dev_act3 = np.zeros((1, 2, 1), bool)
        dev_act3[0, :, 0] = True
        plan3 = plan_min_cost(make_instance([False], dev_act3, [ris_dev(1.0)]))
        assert [s for s, _ in plan3.installs] == [0]

    def test_brute_force_guard(self):
        dev_act = np.ones((2, 13, 2), bool)
        devices = [ris_dev(1.0), ncr_dev(3.0)]
        inst = make_instance([False, False], dev_act, devices)
        with pytest.raises(ValueError, match="brute force"):
            brute_force_plan(inst)


class TestSerialization:
    def test_instance_round_trip_preserves_plans(self, tmp_path):
        from sreplan.planner import read_instance, write_instance
        rng = np.random.default_rng(91)
        for i in range(10):
            inst = random_instance(rng)
            path = tmp_path / f"inst{i}.tsv"
            write_instance(path, inst)
            back = read_instance(path)
            assert back.multiplicity == inst.multiplicity
            assert np.array_equal(back.activation.device_active,
                                  inst.activation.device_active)
            assert plans_equal(plan_min_cost(inst), plan_min_cost(back))


class TestComparativeStatics:
    def test_cost_monotone_in_multiplicity(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            inst1 = random_instance(rng, k_choices=(1,))
            act = inst1.activation
            inst2 = PlanningInstance(activation=act, sites=inst1.sites,
                                     devices=inst1.devices, multiplicity=2)
            p1, p2 = plan_min_cost(inst1), plan_min_cost(inst2)
            if p1.status == "optimal" and p2.status == "optimal":
                assert p2.total_cost >= p1.total_cost - 1e-9

    def test_cost_monotone_in_threshold(self):
        # Raising the threshold deletes activation entries: cost cannot drop.
        rng = np.random.default_rng(32)
        for _ in range(25):
            inst = random_instance(rng, k_choices=(1,))
            act = inst.activation
            shrunk_dev = act.device_active & (rng.random(act.device_active.shape) < 0.7)
            shrunk_bs = act.bs_active & (rng.random(act.bs_active.shape) < 0.7)
            inst_hi = make_instance(shrunk_bs, shrunk_dev, list(inst.devices),
                                    k=inst.multiplicity)
            lo, hi = plan_min_cost(inst), plan_min_cost(inst_hi)
            if lo.status == "optimal" and hi.status == "optimal":
                assert hi.total_cost >= lo.total_cost - 1e-9

    def test_ncr_count_non_increasing_in_ncr_price(self):
        rng = np.random.default_rng(33)
        checked = 0
        for _ in range(30):
            inst = random_instance(rng)
            counts = []
            feasible = True
            for scale in (1.0, 1.5, 2.0, 4.0):
                devices = [d if d.kind == "ris" else ncr_dev(d.cost * scale)
                           for d in inst.devices]
                p = plan_min_cost(PlanningInstance(
                    activation=inst.activation, sites=inst.sites,
                    devices=devices, multiplicity=inst.multiplicity))
                if p.status != "optimal":
                    feasible = False
                    break
                counts.append(p.num_ncr)
            if feasible:
                checked += 1
                assert all(b <= a for a, b in zip(counts, counts[1:])), counts
        assert checked >= 10
