"""Slot-based Monte Carlo simulator of the small cell TDD system.

Topology: PPP-distributed SAPs and UEs on a finite disk, nearest-SAP
association with a per-cell cap. Dynamics: Bernoulli per-UE arrivals into
per-link FIFO queues, per-slot DL/UL scheduling (one shared coin under
static TDD, independent coins under dynamic TDD), Rayleigh block fading,
SIR-threshold departures with retransmission of failed packets.

Statistics are collected after a warmup period and only for UEs inside an
inner disk of half the region radius, which guards against the missing
interference from outside the simulated window.

RNG streams are split by purpose (topology, association, scheduling,
arrivals, fading) so that changing one sweep axis does not perturb the
draws of the others.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from .core import DYNAMIC, STATIC, NetworkConfig, ThroughputReport, TddPolicy, TrafficConfig
from .errors import DegenerateDeployment, DomainError, NoMeasuredUEs

UNSERVED = -1


@dataclass
class Deployment:
    """One realization of the SAP/UE point processes on a disk."""

    region_radius: float
    sap_xy: np.ndarray  # (n_sap, 2)
    ue_xy: np.ndarray   # (n_ue, 2)
    seed: int


@dataclass
class Association:
    """Nearest-SAP association with per-cell cap."""

    serving_sap: np.ndarray       # per UE, UNSERVED if capped out
    served_ues: list[np.ndarray]  # per SAP, indices of served UEs


def _disk_points(rng, density, radius):
    n = rng.poisson(density * np.pi * radius**2)
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def generate_deployment(net: NetworkConfig, region_radius: float, seed: int) -> Deployment:
    """Draw Poisson-many SAPs and UEs uniformly on the disk; deterministic in seed."""
    if region_radius <= 0:
        raise DomainError("generate_deployment: region_radius must be > 0")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA0]))
    sap_xy = _disk_points(rng, net.sap_density, region_radius)
    ue_xy = _disk_points(rng, net.ue_density, region_radius)
    if len(sap_xy) == 0:
        raise DegenerateDeployment(f"seed {seed}: zero SAPs drawn")
    return Deployment(region_radius=region_radius, sap_xy=sap_xy, ue_xy=ue_xy, seed=seed)


def generate_deployment_retry(
    net: NetworkConfig, region_radius: float, seed: int, attempts: int = 10
) -> Deployment:
    """Retry :func:`generate_deployment` with bumped seeds on degenerate draws."""
    last = None
    for k in range(attempts):
        try:
            return generate_deployment(net, region_radius, seed + k)
        except DegenerateDeployment as exc:
            last = exc
    raise last


def associate(dep: Deployment, cap: int, seed: int) -> Association:
    """Map each UE to its nearest SAP; overfull cells keep a random subset."""
    if len(dep.sap_xy) == 0:
        raise DegenerateDeployment("associate: no SAPs")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA5]))
    tree = cKDTree(dep.sap_xy)
    _, nearest = tree.query(dep.ue_xy) if len(dep.ue_xy) else (None, np.empty(0, int))
    serving = np.asarray(nearest, dtype=np.int64).copy()
    served: list[np.ndarray] = []
    for s in range(len(dep.sap_xy)):
        cand = np.flatnonzero(serving == s)
        if len(cand) > cap:
            keep = rng.choice(cand, size=cap, replace=False)
            keep.sort()
            dropped = np.setdiff1d(cand, keep)
            serving[dropped] = UNSERVED
            cand = keep
        served.append(cand)
    return Association(serving_sap=serving, served_ues=served)


# ---------------------------------------------------------------------------
# Slot kernel
# ---------------------------------------------------------------------------

@njit(cache=True)
def _slot_kernel(
    slots, warmup,
    static_mode, full_buffer,
    theta, p_st, p_ut,
    link_sap, served_start, served_count, in_inner, g_sl, g_ss, g_ll,
    dir_coins, pick_f, arr_dl, arr_ul,
    fading_seed,
):
    np.random.seed(fading_seed)
    n_sap = served_count.shape[0]
    n_link = link_sap.shape[0]

    q_dl = np.zeros(n_link, np.int64)
    q_ul = np.zeros(n_link, np.int64)
    a_dl = np.zeros(n_link, np.int64)       # measured arrivals
    a_ul = np.zeros(n_link, np.int64)
    a_dl_tot = np.zeros(n_link, np.int64)
    a_ul_tot = np.zeros(n_link, np.int64)
    w_dl = np.zeros(n_link, np.int64)       # measured wait sums
    w_ul = np.zeros(n_link, np.int64)
    del_dl = np.zeros(n_link, np.int64)
    del_ul = np.zeros(n_link, np.int64)
    del_dl_tot = np.zeros(n_link, np.int64)
    del_ul_tot = np.zeros(n_link, np.int64)
    att_dl = np.zeros(n_link, np.int64)     # measured attempts / successes
    att_ul = np.zeros(n_link, np.int64)
    suc_dl = np.zeros(n_link, np.int64)
    suc_ul = np.zeros(n_link, np.int64)

    max_k = 0
    for s in range(n_sap):
        if served_count[s] > max_k:
            max_k = served_count[s]
    tier_slots = np.zeros((max_k + 1, 2), np.int64)  # [:, 0]=DL, [:, 1]=UL
    tier_tx = np.zeros((max_k + 1, 2), np.int64)
    mixed_slots = 0

    dl_act = np.empty(n_sap, np.int64)       # transmitting SAP indices
    dl_rx = np.empty(n_sap, np.int64)        # receiving link, -1 if none
    ul_act_link = np.empty(n_sap, np.int64)  # transmitting UE (link index)
    sap_dir = np.empty(n_sap, np.uint8)
    sap_tx = np.empty(n_sap, np.uint8)

    for t in range(slots):
        measuring = t >= warmup

        # (1) slot directions
        if static_mode:
            d_all = dir_coins[t, 0]
            for s in range(n_sap):
                sap_dir[s] = d_all
        else:
            for s in range(n_sap):
                sap_dir[s] = dir_coins[t, s]

        # wait accounting: every queued packet ages one slot
        if measuring and not full_buffer:
            for l in range(n_link):
                w_dl[l] += q_dl[l]
                w_ul[l] += q_ul[l]

        # (2) scheduling: one uniformly picked served UE per SAP
        n_dl = 0
        n_ul = 0
        for s in range(n_sap):
            sap_tx[s] = 0
            cnt = served_count[s]
            if cnt > 0:
                idx = int(pick_f[t, s] * cnt)
                if idx >= cnt:
                    idx = cnt - 1
                link = served_start[s] + idx
            else:
                link = -1
            if sap_dir[s] == 1:  # DL slot for this SAP
                if full_buffer:
                    dl_act[n_dl] = s
                    dl_rx[n_dl] = link
                    n_dl += 1
                    sap_tx[s] = 1
                elif link >= 0 and q_dl[link] > 0:
                    dl_act[n_dl] = s
                    dl_rx[n_dl] = link
                    n_dl += 1
                    sap_tx[s] = 1
            else:
                if link >= 0 and q_ul[link] > 0:
                    ul_act_link[n_ul] = link
                    n_ul += 1

        if measuring:
            if n_dl > 0 and n_ul > 0:
                mixed_slots += 1
            for s in range(n_sap):
                k = served_count[s]
                col = 0 if sap_dir[s] == 1 else 1
                tier_slots[k, col] += 1
                if sap_dir[s] == 1:
                    if sap_tx[s] == 1:
                        tier_tx[k, 0] += 1

        # (3)-(5) fading, SIR, departures
        for i in range(n_dl):
            link = dl_rx[i]
            if link < 0:
                continue  # interferer-only SAP (full-buffer, empty cell)
            s = dl_act[i]
            sig = p_st * np.random.exponential() * g_sl[s, link]
            interf = 0.0
            for j in range(n_dl):
                s2 = dl_act[j]
                if s2 != s:
                    interf += p_st * np.random.exponential() * g_sl[s2, link]
            for j in range(n_ul):
                l2 = ul_act_link[j]
                interf += p_ut * np.random.exponential() * g_ll[l2, link]
            ok = sig > theta * interf
            if measuring:
                att_dl[link] += 1
                if ok:
                    suc_dl[link] += 1
            if ok and not full_buffer:
                q_dl[link] -= 1
                del_dl_tot[link] += 1
                if measuring:
                    del_dl[link] += 1

        for i in range(n_ul):
            link = ul_act_link[i]
            s = link_sap[link]
            if measuring:
                tier_tx[served_count[s], 1] += 1
            sig = p_ut * np.random.exponential() * g_sl[s, link]
            interf = 0.0
            for j in range(n_ul):
                l2 = ul_act_link[j]
                if l2 != link:
                    interf += p_ut * np.random.exponential() * g_sl[s, l2]
            for j in range(n_dl):
                s2 = dl_act[j]
                interf += p_st * np.random.exponential() * g_ss[s2, s]
            ok = sig > theta * interf
            if measuring:
                att_ul[link] += 1
                if ok:
                    suc_ul[link] += 1
            if ok:
                q_ul[link] -= 1
                del_ul_tot[link] += 1
                if measuring:
                    del_ul[link] += 1

        # (6) arrivals, after departures
        if not full_buffer:
            for l in range(n_link):
                if arr_dl[t, l]:
                    q_dl[l] += 1
                    a_dl_tot[l] += 1
                    if measuring:
                        a_dl[l] += 1
                if arr_ul[t, l]:
                    q_ul[l] += 1
                    a_ul_tot[l] += 1
                    if measuring:
                        a_ul[l] += 1

    return (
        a_dl, a_ul, a_dl_tot, a_ul_tot, w_dl, w_ul,
        del_dl, del_ul, del_dl_tot, del_ul_tot,
        att_dl, att_ul, suc_dl, suc_ul,
        q_dl, q_ul, tier_slots, tier_tx, mixed_slots,
    )


# ---------------------------------------------------------------------------
# Python-side orchestration
# ---------------------------------------------------------------------------

@dataclass
class SimMetrics:
    """Raw per-link counters from one simulation run."""

    link_sap: np.ndarray
    link_ue: np.ndarray
    cell_size: np.ndarray  # served-UE count of the link's cell
    in_inner: np.ndarray
    arrivals_dl: np.ndarray
    arrivals_ul: np.ndarray
    arrivals_dl_total: np.ndarray
    arrivals_ul_total: np.ndarray
    wait_dl: np.ndarray
    wait_ul: np.ndarray
    delivered_dl: np.ndarray
    delivered_ul: np.ndarray
    delivered_dl_total: np.ndarray
    delivered_ul_total: np.ndarray
    attempts_dl: np.ndarray
    attempts_ul: np.ndarray
    successes_dl: np.ndarray
    successes_ul: np.ndarray
    queue_dl_final: np.ndarray
    queue_ul_final: np.ndarray
    tier_slots: np.ndarray  # (max_k+1, 2): direction slots per tier, post warmup
    tier_tx: np.ndarray     # (max_k+1, 2): transmissions per tier
    mixed_slots: int
    slots: int
    warmup: int

    def busy_fraction(self, k: int, direction: str) -> float:
        """Fraction of k-UE cells' own-direction slots with an actual transmission."""
        col = 0 if direction == "dl" else 1
        denom = self.tier_slots[k, col]
        return self.tier_tx[k, col] / denom if denom > 0 else 0.0


def _build_link_arrays(dep: Deployment, assoc: Association, alpha: float,
                       need_ul: bool = True):
    link_sap = []
    link_ue = []
    for s, ues in enumerate(assoc.served_ues):
        for u in ues:
            link_sap.append(s)
            link_ue.append(int(u))
    link_sap = np.asarray(link_sap, dtype=np.int64)
    link_ue = np.asarray(link_ue, dtype=np.int64)
    n_sap = len(dep.sap_xy)
    served_count = np.asarray([len(u) for u in assoc.served_ues], dtype=np.int64)
    served_start = np.concatenate([[0], np.cumsum(served_count)[:-1]]).astype(np.int64)

    def gains(a_xy, b_xy):
        d = np.hypot(a_xy[:, None, 0] - b_xy[None, :, 0], a_xy[:, None, 1] - b_xy[None, :, 1])
        with np.errstate(divide="ignore"):
            g = d ** (-alpha)
        g[~np.isfinite(g)] = 0.0  # co-located points never form a link
        return g

    ue_xy = dep.ue_xy[link_ue] if len(link_ue) else np.zeros((0, 2))
    g_sl = gains(dep.sap_xy, ue_xy)
    if need_ul:
        g_ss = gains(dep.sap_xy, dep.sap_xy)
        np.fill_diagonal(g_ss, 0.0)
        g_ll = gains(ue_xy, ue_xy)
        np.fill_diagonal(g_ll, 0.0)
    else:
        # DL-only run: UE-originated interference paths are never read
        g_ss = np.zeros((1, 1))
        g_ll = np.zeros((1, 1))
    inner = np.hypot(ue_xy[:, 0], ue_xy[:, 1]) <= dep.region_radius / 2.0
    return link_sap, link_ue, served_start, served_count, inner, g_sl, g_ss, g_ll


def run_simulation(
    dep: Deployment,
    assoc: Association,
    net: NetworkConfig,
    traffic: TrafficConfig,
    policy: TddPolicy,
    slots: int,
    warmup: int,
    seed: int,
    full_buffer_dl: bool = False,
) -> SimMetrics:
    """Run the slot loop and return raw counters; deterministic in seed.

    ``full_buffer_dl=True`` overrides traffic and scheduling: every SAP
    transmits DL in every slot (SIR-engine calibration mode).
    """
    if not slots > warmup >= 0:
        raise DomainError("run_simulation: need slots > warmup >= 0")
    (link_sap, link_ue, served_start, served_count,
     inner, g_sl, g_ss, g_ll) = _build_link_arrays(
        dep, assoc, net.path_loss_exp, need_ul=not full_buffer_dl)
    n_sap = len(dep.sap_xy)
    n_link = len(link_sap)

    if full_buffer_dl:
        p_dl = 1.0
        static_mode = True
    else:
        if policy.variant not in (STATIC, DYNAMIC):
            raise DomainError(f"run_simulation: unknown TDD variant {policy.variant!r}")
        p_dl = policy.dl_fraction
        if p_dl is None:
            total = traffic.ul_rate + traffic.dl_rate
            p_dl = traffic.dl_rate / total if total > 0 else 0.5
        static_mode = policy.variant != DYNAMIC

    # Purpose-split RNG streams: scheduling coins/picks and arrivals are
    # drawn outside the kernel, fading inside with its own seed.
    sched_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0]))
    arr_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC1]))
    fading_seed = int(
        np.random.SeedSequence([seed, 0xC2]).generate_state(1, np.uint32)[0]
    )
    if static_mode:
        dir_coins = (sched_rng.random((slots, 1)) < p_dl).astype(np.uint8)
    else:
        dir_coins = (sched_rng.random((slots, n_sap)) < p_dl).astype(np.uint8)
    pick_f = sched_rng.random((slots, n_sap), dtype=np.float32)
    if full_buffer_dl:
        arr_dl = np.zeros((slots, max(n_link, 1)), np.uint8)
        arr_ul = arr_dl
    else:
        arr_dl = (arr_rng.random((slots, max(n_link, 1))) < traffic.dl_rate).astype(np.uint8)
        arr_ul = (arr_rng.random((slots, max(n_link, 1))) < traffic.ul_rate).astype(np.uint8)

    out = _slot_kernel(
        slots, warmup,
        static_mode, full_buffer_dl,
        net.sir_threshold, net.sap_power, net.ue_power,
        link_sap, served_start, served_count, inner.astype(np.uint8),
        g_sl, g_ss, g_ll,
        dir_coins, pick_f, arr_dl, arr_ul,
        fading_seed,
    )
    (a_dl, a_ul, a_dl_tot, a_ul_tot, w_dl, w_ul,
     del_dl, del_ul, del_dl_tot, del_ul_tot,
     att_dl, att_ul, suc_dl, suc_ul,
     q_dl, q_ul, tier_slots, tier_tx, mixed_slots) = out

    return SimMetrics(
        link_sap=link_sap,
        link_ue=link_ue,
        cell_size=served_count[link_sap] if n_link else np.zeros(0, np.int64),
        in_inner=inner,
        arrivals_dl=a_dl, arrivals_ul=a_ul,
        arrivals_dl_total=a_dl_tot, arrivals_ul_total=a_ul_tot,
        wait_dl=w_dl, wait_ul=w_ul,
        delivered_dl=del_dl, delivered_ul=del_ul,
        delivered_dl_total=del_dl_tot, delivered_ul_total=del_ul_tot,
        attempts_dl=att_dl, attempts_ul=att_ul,
        successes_dl=suc_dl, successes_ul=suc_ul,
        queue_dl_final=q_dl, queue_ul_final=q_ul,
        tier_slots=tier_slots, tier_tx=tier_tx,
        mixed_slots=int(mixed_slots),
        slots=slots, warmup=warmup,
    )


def _per_link_throughput(arrivals: np.ndarray, waits: np.ndarray) -> np.ndarray:
    """Definition-style per-link rate: arrivals / total packet wait slots."""
    thr = np.zeros(len(arrivals))
    mask = (arrivals > 0) & (waits > 0)
    thr[mask] = np.minimum(arrivals[mask] / waits[mask], 1.0)
    return thr


def measure_throughput(metrics: SimMetrics) -> ThroughputReport:
    """Per-UE mean packet throughput over the inner measurement disk.

    Per link and direction the rate is arrivals / (delivered delays +
    elapsed waits of packets still queued at the horizon); the network
    value is the unweighted mean over measured UEs. Zero-arrival links
    count as zero and are flagged in the diagnostics.
    """
    inner = metrics.in_inner.astype(bool)
    if not inner.any():
        raise NoMeasuredUEs("inner measurement disk holds no served UE")
    thr_dl = _per_link_throughput(metrics.arrivals_dl, metrics.wait_dl)[inner]
    thr_ul = _per_link_throughput(metrics.arrivals_ul, metrics.wait_ul)[inner]

    def rate(succ, att):
        a = att[inner].sum()
        return succ[inner].sum() / a if a > 0 else 0.0

    diag = {
        "dl_service_rate_est": rate(metrics.successes_dl, metrics.attempts_dl),
        "ul_service_rate_est": rate(metrics.successes_ul, metrics.attempts_ul),
        "measured_ues": float(inner.sum()),
        "zero_arrival_dl_links": float((metrics.arrivals_dl[inner] == 0).sum()),
        "zero_arrival_ul_links": float((metrics.arrivals_ul[inner] == 0).sum()),
        "mean_cell_size": float(metrics.cell_size[inner].mean()),
    }
    return ThroughputReport(
        dl_throughput=float(thr_dl.mean()),
        ul_throughput=float(thr_ul.mean()),
        diagnostics=diag,
    )


def run_replication(
    net: NetworkConfig,
    traffic: TrafficConfig,
    policy: TddPolicy,
    region_radius: float,
    slots: int,
    warmup: int,
    seed: int,
    full_buffer_dl: bool = False,
) -> tuple[SimMetrics, ThroughputReport]:
    """Deployment + association + slot loop + measurement for one seed."""
    dep = generate_deployment_retry(net, region_radius, seed)
    assoc = associate(dep, net.ue_cap, seed)
    metrics = run_simulation(
        dep, assoc, net, traffic, policy, slots, warmup, seed,
        full_buffer_dl=full_buffer_dl,
    )
    return metrics, measure_throughput(metrics)


def aggregate_reports(reports: list[ThroughputReport]) -> ThroughputReport:
    """Replication mean with a normal-approximation 95% CI halfwidth."""
    n = len(reports)
    dl = np.array([r.dl_throughput for r in reports])
    ul = np.array([r.ul_throughput for r in reports])
    hw = lambda x: 1.96 * x.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
    diag: dict[str, float] = {"replications": float(n)}
    for key in reports[0].diagnostics:
        diag[key] = float(np.mean([r.diagnostics[key] for r in reports]))
    return ThroughputReport(
        dl_throughput=float(dl.mean()),
        ul_throughput=float(ul.mean()),
        dl_ci_halfwidth=float(hw(dl)),
        ul_ci_halfwidth=float(hw(ul)),
        diagnostics=diag,
    )
