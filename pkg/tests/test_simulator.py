import dataclasses

import numpy as np
import pytest

from tddnet import analysis, simulator
from tddnet.core import DYNAMIC, STATIC, TddPolicy, TrafficConfig
from tddnet.errors import DegenerateDeployment, DomainError, NoMeasuredUEs
from tddnet.validation import paper_network

TRAFFIC = TrafficConfig(ul_rate=0.02, dl_rate=0.02)
STATIC_HALF = TddPolicy(variant=STATIC, dl_fraction=0.5)


def test_deployment_deterministic(paper_net):
    a = simulator.generate_deployment(paper_net, 400.0, seed=3)
    b = simulator.generate_deployment(paper_net, 400.0, seed=3)
    c = simulator.generate_deployment(paper_net, 400.0, seed=4)
    assert np.array_equal(a.sap_xy, b.sap_xy)
    assert np.array_equal(a.ue_xy, b.ue_xy)
    assert not np.array_equal(a.sap_xy, c.sap_xy)


def test_deployment_inside_disk(paper_net):
    dep = simulator.generate_deployment(paper_net, 400.0, seed=3)
    assert (np.hypot(dep.sap_xy[:, 0], dep.sap_xy[:, 1]) <= 400.0).all()
    assert (np.hypot(dep.ue_xy[:, 0], dep.ue_xy[:, 1]) <= 400.0).all()
    # Poisson counts: loose 6-sigma sanity band around the area mean
    mean_saps = paper_net.sap_density * np.pi * 400.0 ** 2
    assert abs(len(dep.sap_xy) - mean_saps) < 6.0 * np.sqrt(mean_saps) + 1


def test_deployment_degenerate_raises():
    net = paper_network(sap_density=1e-12, ue_density=1e-12)
    with pytest.raises(DegenerateDeployment):
        simulator.generate_deployment(net, 100.0, seed=0)
    with pytest.raises(DegenerateDeployment):
        simulator.generate_deployment_retry(net, 100.0, seed=0, attempts=3)


def test_deployment_bad_radius(paper_net):
    with pytest.raises(DomainError):
        simulator.generate_deployment(paper_net, 0.0, seed=0)


def test_association_nearest_and_cap(paper_net):
    dep = simulator.generate_deployment(paper_net, 400.0, seed=5)
    assoc = simulator.associate(dep, cap=3, seed=5)
    from scipy.spatial import cKDTree

    tree = cKDTree(dep.sap_xy)
    _, nearest = tree.query(dep.ue_xy)
    for s, ues in enumerate(assoc.served_ues):
        assert len(ues) <= 3
        for u in ues:
            assert nearest[u] == s  # served only by the closest SAP
    served = np.concatenate([u for u in assoc.served_ues if len(u)]) \
        if any(len(u) for u in assoc.served_ues) else np.zeros(0)
    assert len(served) == len(set(served.tolist()))  # each UE at most once
    unserved = assoc.serving_sap == simulator.UNSERVED
    assert len(dep.ue_xy) == len(served) + unserved.sum()


def test_association_deterministic(paper_net):
    dep = simulator.generate_deployment(paper_net, 400.0, seed=5)
    a = simulator.associate(dep, cap=3, seed=5)
    b = simulator.associate(dep, cap=3, seed=5)
    assert np.array_equal(a.serving_sap, b.serving_sap)


def _small_run(seed=9, policy=STATIC_HALF, traffic=TRAFFIC, slots=3000,
               net=None):
    net = net or paper_network()
    dep = simulator.generate_deployment_retry(net, 350.0, seed)
    assoc = simulator.associate(dep, net.ue_cap, seed)
    return simulator.run_simulation(
        dep, assoc, net, traffic, policy, slots=slots, warmup=200, seed=seed)


def test_simulation_deterministic():
    m1 = _small_run()
    m2 = _small_run()
    assert np.array_equal(m1.arrivals_dl, m2.arrivals_dl)
    assert np.array_equal(m1.successes_ul, m2.successes_ul)
    assert np.array_equal(m1.wait_dl, m2.wait_dl)
    assert m1.mixed_slots == m2.mixed_slots


def test_simulation_unknown_variant_raises():
    with pytest.raises(DomainError):
        _small_run(policy=TddPolicy(variant="duplex", dl_fraction=0.5))


def test_simulation_bad_slot_counts(paper_net):
    dep = simulator.generate_deployment_retry(paper_net, 350.0, 1)
    assoc = simulator.associate(dep, paper_net.ue_cap, 1)
    with pytest.raises(DomainError):
        simulator.run_simulation(dep, assoc, paper_net, TRAFFIC, STATIC_HALF,
                                 slots=100, warmup=100, seed=1)


def test_static_mode_has_no_mixed_slots():
    m = _small_run(policy=STATIC_HALF)
    assert m.mixed_slots == 0


def test_dynamic_mode_mixes_directions():
    m = _small_run(policy=TddPolicy(variant=DYNAMIC, dl_fraction=0.5))
    assert m.mixed_slots > 0


def test_measured_throughput_ranges():
    rep = simulator.measure_throughput(_small_run())
    assert 0.0 <= rep.dl_throughput <= 1.0
    assert 0.0 <= rep.ul_throughput <= 1.0
    for key in ("dl_service_rate_est", "ul_service_rate_est", "measured_ues",
                "mean_cell_size"):
        assert key in rep.diagnostics
    assert rep.diagnostics["measured_ues"] > 0
    assert 1.0 <= rep.diagnostics["mean_cell_size"] <= 3.0


def test_zero_traffic_run_measures_zero():
    m = _small_run(traffic=TrafficConfig(0.0, 0.0), slots=500)
    rep = simulator.measure_throughput(m)
    assert rep.dl_throughput == 0.0
    assert rep.ul_throughput == 0.0


def test_no_measured_ues_raises():
    m = _small_run(slots=500)
    empty = dataclasses.replace(m, in_inner=np.zeros_like(m.in_inner))
    with pytest.raises(NoMeasuredUEs):
        simulator.measure_throughput(empty)


def test_full_buffer_override_all_sap_slots_attempted(paper_net):
    dep = simulator.generate_deployment_retry(paper_net, 350.0, 2)
    assoc = simulator.associate(dep, paper_net.ue_cap, 2)
    m = simulator.run_simulation(
        dep, assoc, paper_net, TrafficConfig(0.0, 0.0), STATIC_HALF,
        slots=80, warmup=0, seed=2, full_buffer_dl=True)
    # every cell with served UEs fires every slot; per-link attempts sum to
    # the measured horizon for each cell
    att = np.zeros(len(dep.sap_xy), dtype=np.int64)
    np.add.at(att, m.link_sap, m.attempts_dl)
    assert (att[np.unique(m.link_sap)] == 80).all()
    assert m.attempts_ul.sum() == 0


def test_busy_fraction_tracks_activity_probability(paper_pmf):
    # mean-field activity of 2-UE cells vs the measured busy fraction
    net = paper_network()
    tr = TrafficConfig(0.02, 0.02)
    rates = analysis.stdd_service_rates(net, tr, 0.5, paper_pmf)
    fractions = []
    for seed in range(4):
        m = _small_run(seed=20 + seed, traffic=tr, slots=20000, net=net)
        fractions.append(m.busy_fraction(2, "dl"))
    got = float(np.mean(fractions))
    want = analysis.activity_probability(2, tr.dl_rate, 0.5, rates.dl)
    assert got == pytest.approx(want, rel=0.10)


def test_run_replication_deterministic(paper_net):
    _, r1 = simulator.run_replication(paper_net, TRAFFIC, STATIC_HALF, 350.0,
                                      slots=2000, warmup=100, seed=42)
    _, r2 = simulator.run_replication(paper_net, TRAFFIC, STATIC_HALF, 350.0,
                                      slots=2000, warmup=100, seed=42)
    assert r1.dl_throughput == r2.dl_throughput
    assert r1.ul_throughput == r2.ul_throughput


def test_aggregate_reports_ci(paper_net):
    reps = [simulator.run_replication(paper_net, TRAFFIC, STATIC_HALF, 350.0,
                                      slots=2000, warmup=100, seed=s)[1]
            for s in (1, 2, 3)]
    agg = simulator.aggregate_reports(reps)
    assert agg.dl_ci_halfwidth > 0.0
    assert agg.diagnostics["replications"] == 3.0
    assert min(r.dl_throughput for r in reps) <= agg.dl_throughput \
        <= max(r.dl_throughput for r in reps)
