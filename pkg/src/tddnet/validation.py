"""Cross-checks between the analysis engine, the oracles, and the simulator.

Each check compares an implementation value against an independently
computed reference and reports measured vs expected. The ``fast`` level is
pure numerics; ``full`` adds the simulation-backed checks.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import analysis, oracles, simulator
from .core import STATIC, DYNAMIC, NetworkConfig, TddPolicy, TrafficConfig, dbm_to_watts


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (
            f"[{tag}] {self.name}: measured={self.measured:.10g} "
            f"expected={self.expected:.10g} tol={self.tolerance:.3g} "
            f"({self.seconds:.2f}s)"
        )


def paper_network(**overrides) -> NetworkConfig:
    """Operating point used throughout the numerical experiments."""
    base = dict(
        sap_density=1e-4,
        ue_density=1e-3,
        sap_power=dbm_to_watts(23.0),
        ue_power=dbm_to_watts(17.0),
        path_loss_exp=3.8,
        sir_threshold=1.0,
        ue_cap=3,
    )
    base.update(overrides)
    return NetworkConfig(**base)


def _timed(name, measured, expected, tol, t0) -> CheckResult:
    return CheckResult(
        name=name,
        passed=abs(measured - expected) <= tol,
        measured=float(measured),
        expected=float(expected),
        tolerance=tol,
        seconds=time.perf_counter() - t0,
    )


def _timed_flag(name, ok, measured, expected, tol, t0) -> CheckResult:
    return CheckResult(name, bool(ok), float(measured), float(expected), tol, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Fast checks
# ---------------------------------------------------------------------------

def check_quadrature() -> list[CheckResult]:
    t0 = time.perf_counter()
    got = oracles.quadrature(lambda u: 1.0 / (1.0 + u * u), 0.0, math.inf, tol=1e-12)
    r1 = _timed("quadrature halfline arctan", got, math.pi / 2.0, 1e-10, t0)
    t0 = time.perf_counter()
    got = oracles.quadrature(lambda u: 1.0 / (1.0 + u * u), 1.0, math.inf, tol=1e-12)
    r2 = _timed("quadrature tail arctan", got, math.pi / 4.0, 1e-10, t0)
    return [r1, r2]


def check_interference_factors() -> list[CheckResult]:
    out = []
    for theta in (0.5, 1.0, 2.0):
        for alpha in (3.0, 3.8, 4.0):
            t0 = time.perf_counter()
            ref = theta ** (2.0 / alpha) * oracles.quadrature(
                lambda u, a=alpha: 1.0 / (1.0 + u ** (a / 2.0)), 0.0, math.inf, tol=1e-12
            )
            got = analysis.v_factor(theta, alpha)
            out.append(_timed(f"v_factor({theta},{alpha}) vs quadrature", got, ref, 1e-8, t0))
            t0 = time.perf_counter()
            z = analysis.z_factor(theta, alpha)
            out.append(
                _timed_flag(f"z_factor({theta},{alpha}) < v_factor", z < got, z, got, 0.0, t0)
            )
    t0 = time.perf_counter()
    out.append(_timed("z_factor(1,4) analytic", analysis.z_factor(1.0, 4.0), math.pi / 4.0, 1e-10, t0))
    return out


def check_queue_formulas() -> list[CheckResult]:
    """Lemma closed forms vs truncated-chain oracle on a 10x10 stable grid."""
    t0 = time.perf_counter()
    worst_t = worst_i = 0.0
    xis = np.linspace(0.01, 0.3, 10)
    for xi in xis:
        for frac in np.linspace(0.05, 0.9, 10):
            mu_eff = xi + frac * (1.0 - xi)  # stable: mu_eff > xi
            sol = oracles.geo_g1_chain(float(xi), float(mu_eff), trunc=10_000)
            t_form = analysis.geo_g1_throughput(float(xi), float(mu_eff), 1)
            i_form = analysis.geo_g1_idle_prob(float(xi), float(mu_eff), 1)
            worst_t = max(worst_t, abs(sol.throughput - t_form))
            worst_i = max(worst_i, abs(sol.idle_prob - i_form))
    return [
        _timed("geo_g1 throughput vs chain (max |gap|)", worst_t, 0.0, 1e-6, t0),
        _timed("geo_g1 idle prob vs chain (max |gap|)", worst_i, 0.0, 1e-6, t0),
    ]


def check_cell_load_normalization() -> list[CheckResult]:
    t0 = time.perf_counter()
    worst = 0.0
    for rho in (0.01, 0.1, 1.0, 10.0):
        for cap in (1, 3, 10):
            worst = max(worst, abs(analysis.cell_load_pmf(rho, cap).probs.sum() - 1.0))
    return [_timed("cell_load_pmf normalization (max |gap|)", worst, 0.0, 1e-9, t0)]


def check_stdd_identity() -> list[CheckResult]:
    """Compositional vs explicit tier-sum forms of the S-TDD throughput."""
    t0 = time.perf_counter()
    net = paper_network()
    pmf = analysis.cell_load_pmf(net.density_ratio, net.ue_cap)
    worst = 0.0
    for xi_d in (0.005, 0.02, 0.08):
        for p_s in (0.3, 0.5, 0.8):
            tr = TrafficConfig(ul_rate=0.02, dl_rate=xi_d)
            a = analysis.stdd_throughput(net, tr, p_s, pmf)
            b = analysis.stdd_throughput_explicit(net, tr, p_s, pmf)
            worst = max(worst, abs(a.dl_throughput - b.dl_throughput),
                        abs(a.ul_throughput - b.ul_throughput))
    return [_timed("S-TDD compositional vs explicit (max |gap|)", worst, 0.0, 1e-12, t0)]


def check_dl_fraction_rule() -> list[CheckResult]:
    t0 = time.perf_counter()
    tr = TrafficConfig(ul_rate=0.02, dl_rate=0.08)
    got = analysis.optimal_dl_fraction(tr)
    ref = oracles.grid_minimize(
        lambda p: abs(tr.dl_rate / p - tr.ul_rate / (1.0 - p)), 0.001, 0.999
    )
    return [_timed("optimal_dl_fraction vs grid search", got, ref, 2e-3, t0)]


def check_fixed_point() -> list[CheckResult]:
    """Coupled-system iteration vs closed forms at a light symmetric point."""
    t0 = time.perf_counter()
    net = paper_network(sap_power=1.0, ue_power=1.0)
    tr = TrafficConfig(ul_rate=2e-4, dl_rate=2e-4)
    pmf = analysis.cell_load_pmf(net.density_ratio, net.ue_cap)
    fp = analysis.dtdd_fixed_point(net, tr, pmf, tol=1e-12)
    cf = analysis.dtdd_service_rates(net, tr, pmf)
    gap = max(abs(fp.rates.dl - cf.dl), abs(fp.rates.ul - cf.ul))
    return [_timed("dtdd fixed point vs closed form (light symmetric)", gap, 0.0, 1e-6, t0)]


# ---------------------------------------------------------------------------
# Full (simulation-backed) checks
# ---------------------------------------------------------------------------

def check_cell_load_vs_association(deployments: int = 4000, seed: int = 7) -> list[CheckResult]:
    """Analytic load PMF vs per-SAP association histogram.

    Only SAPs in the inner half-radius disk are counted: boundary cells are
    clipped by the window and carry systematically fewer UEs.
    """
    t0 = time.perf_counter()
    net = paper_network()
    pmf = analysis.cell_load_pmf(net.density_ratio, net.ue_cap)
    counts = np.zeros(net.ue_cap + 1)
    for k in range(deployments):
        dep = simulator.generate_deployment_retry(net, 500.0, seed + k)
        assoc = simulator.associate(dep, net.ue_cap, seed + k)
        inner = np.hypot(dep.sap_xy[:, 0], dep.sap_xy[:, 1]) <= dep.region_radius / 2.0
        for s, ues in enumerate(assoc.served_ues):
            if inner[s]:
                counts[len(ues)] += 1
    emp = counts / counts.sum()
    mask = pmf.probs > 0.01
    rel = np.abs(emp[mask] - pmf.probs[mask]) / pmf.probs[mask]
    return [_timed("cell-load PMF vs association histogram (max rel gap)",
                   float(rel.max()), 0.0, 0.05, t0)]


def check_full_buffer_coverage(deployments: int = 60, slots: int = 60,
                               radius: float = 1200.0,
                               seed: int = 11) -> list[CheckResult]:
    """Full-buffer DL success fraction vs the 1/(1+Z) coverage identity.

    The identity averages over the typical UE of the point process, so the
    calibration run removes the per-cell cap (pure nearest-SAP association)
    and averages per-link success ratios: every UE gets equal weight. A
    wider window than the default keeps the missing-far-interference bias
    (which scales as radius^(2 - alpha)) well below the 1% tolerance.
    """
    t0 = time.perf_counter()
    net = paper_network(ue_cap=10**6)
    ref = oracles.full_buffer_dl_coverage(net.sir_threshold, net.path_loss_exp)
    policy = TddPolicy(variant=STATIC, dl_fraction=1.0)
    tr = TrafficConfig(ul_rate=0.0, dl_rate=0.0)
    ratios = []
    samples = 0
    for k in range(deployments):
        dep = simulator.generate_deployment_retry(net, radius, seed + k)
        assoc = simulator.associate(dep, net.ue_cap, seed + k)
        metrics = simulator.run_simulation(
            dep, assoc, net, tr, policy, slots=slots, warmup=0, seed=seed + k,
            full_buffer_dl=True,
        )
        sel = metrics.in_inner.astype(bool) & (metrics.attempts_dl > 0)
        ratios.append(metrics.successes_dl[sel] / metrics.attempts_dl[sel])
        samples += int(metrics.attempts_dl[sel].sum())
    got = float(np.concatenate(ratios).mean())
    tol = 0.01 * ref
    return [_timed(f"full-buffer DL coverage ({samples} link-slots)", got, ref, tol, t0)]


def check_analysis_shapes() -> list[CheckResult]:
    """Qualitative structure of the analytical ratio sweep."""
    t0 = time.perf_counter()
    net = paper_network()
    pmf = analysis.cell_load_pmf(net.density_ratio, net.ue_cap)
    ratios = np.logspace(math.log10(0.1), math.log10(10.0), 20)
    dl_s, ul_s, dl_d, ul_d = [], [], [], []
    for r in ratios:
        tr = TrafficConfig(ul_rate=0.02, dl_rate=0.02 * float(r))
        p = analysis.optimal_dl_fraction(tr)
        s = analysis.stdd_throughput(net, tr, p, pmf)
        d = analysis.dtdd_throughput(net, tr, pmf)
        dl_s.append(s.dl_throughput)
        ul_s.append(s.ul_throughput)
        dl_d.append(d.dl_throughput)
        ul_d.append(d.ul_throughput)
    dl_s, ul_s = np.array(dl_s), np.array(ul_s)
    dl_d, ul_d = np.array(dl_d), np.array(ul_d)

    out = []
    for name, curve in (("S-TDD", dl_s), ("D-TDD", dl_d)):
        sign = np.sign(np.diff(curve))
        changes = int(np.sum(np.diff(sign[sign != 0]) != 0))
        imax = int(np.argmax(curve))
        unimodal = changes <= 1 and 0 < imax < len(curve) - 1
        out.append(_timed_flag(f"DL {name} ratio sweep unimodal", unimodal, changes, 1, 0, t0))
    for name, curve in (("S-TDD", ul_s), ("D-TDD", ul_d)):
        mono = bool(np.all(np.diff(curve) <= 1e-12))
        out.append(_timed_flag(f"UL {name} ratio sweep non-increasing", mono,
                               float(np.max(np.diff(curve))), 0.0, 0, t0))
    both = (dl_s > 0.01) & (dl_d > 0.01)
    ok_dl = bool(np.all(dl_d[both] >= dl_s[both] - 1e-12))
    out.append(_timed_flag("DL ordering D-TDD >= S-TDD", ok_dl,
                           float(np.min(dl_d[both] - dl_s[both])), 0.0, 0, t0))
    both = (ul_s > 0.01) & (ul_d > 0.01)
    ok_ul = bool(np.all(ul_s[both] >= ul_d[both] - 1e-12))
    out.append(_timed_flag("UL ordering S-TDD >= D-TDD", ok_ul,
                           float(np.min(ul_s[both] - ul_d[both])), 0.0, 0, t0))
    return out


def check_light_traffic_convergence() -> list[CheckResult]:
    t0 = time.perf_counter()
    out = []
    worst_light = 0.0
    gaps = {}
    for label, (xi_u, xi_d) in (("light", (0.005, 0.01)), ("medium", (0.05, 0.1))):
        tr = TrafficConfig(ul_rate=xi_u, dl_rate=xi_d)
        p = analysis.optimal_dl_fraction(tr)
        for rho in (0.05, 0.1, 0.2):
            net = paper_network(sap_density=rho * 1e-3, ue_density=1e-3)
            pmf = analysis.cell_load_pmf(rho, net.ue_cap)
            s = analysis.stdd_throughput(net, tr, p, pmf)
            d = analysis.dtdd_throughput(net, tr, pmf)
            gap_dl = abs(d.dl_throughput - s.dl_throughput) / s.dl_throughput
            gap_ul = abs(d.ul_throughput - s.ul_throughput) / s.ul_throughput
            gaps[(label, rho)] = gap_dl
            if label == "light":
                worst_light = max(worst_light, gap_dl, gap_ul)
    out.append(_timed("light-traffic S/D gap (max rel, both directions)",
                      worst_light, 0.0, 0.05, t0))
    widened = all(gaps[("medium", rho)] > gaps[("light", rho)] for rho in (0.05, 0.1, 0.2))
    out.append(_timed_flag("medium-traffic DL gap exceeds light at every density",
                           widened, float(min(gaps[("medium", r)] for r in (0.05, 0.1, 0.2))),
                           float(max(gaps[("light", r)] for r in (0.05, 0.1, 0.2))), 0, t0))
    return out


def check_analysis_vs_simulation(replications: int = 6, slots: int = 40_000,
                                 seed: int = 3) -> list[CheckResult]:
    """Spot cross-engine agreement at the symmetric paper point (S-TDD)."""
    t0 = time.perf_counter()
    net = paper_network()
    tr = TrafficConfig(ul_rate=0.02, dl_rate=0.02)
    pmf = analysis.cell_load_pmf(net.density_ratio, net.ue_cap)
    ana = analysis.stdd_throughput(net, tr, 0.5, pmf)
    policy = TddPolicy(variant=STATIC, dl_fraction=0.5)
    reps = [
        simulator.run_replication(net, tr, policy, 500.0, slots, 2000, seed + i)[1]
        for i in range(replications)
    ]
    sim = simulator.aggregate_reports(reps)
    gap_dl = abs(sim.dl_throughput - ana.dl_throughput) / ana.dl_throughput
    gap_ul = abs(sim.ul_throughput - ana.ul_throughput) / ana.ul_throughput
    return [
        _timed("analysis vs simulation DL rel gap (S-TDD symmetric)", gap_dl, 0.0, 0.15, t0),
        _timed("analysis vs simulation UL rel gap (S-TDD symmetric)", gap_ul, 0.0, 0.15, t0),
    ]


FAST_CHECKS = (
    check_quadrature,
    check_interference_factors,
    check_queue_formulas,
    check_cell_load_normalization,
    check_stdd_identity,
    check_dl_fraction_rule,
    check_fixed_point,
)

FULL_CHECKS = FAST_CHECKS + (
    check_cell_load_vs_association,
    check_full_buffer_coverage,
    check_analysis_shapes,
    check_light_traffic_convergence,
    check_analysis_vs_simulation,
)


def run_checks(level: str = "fast") -> list[CheckResult]:
    """Run the fast or full validation suite; returns all results."""
    checks = FAST_CHECKS if level == "fast" else FULL_CHECKS
    results: list[CheckResult] = []
    for fn in checks:
        results.extend(fn())
    return results
