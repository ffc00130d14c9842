"""Closed-form throughput engine for static and dynamic TDD.

Implements the interference integrals V and Z, the truncated cell-load PMF,
the Geo/G/1 throughput/idle formulas, the S-TDD and D-TDD throughput
expressions, and the coupled D-TDD service-rate fixed point.

All results depend on densities only through rho = sap_density/ue_density
and on powers only through their ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .core import NetworkConfig, ThroughputReport, TrafficConfig
from .errors import (
    ConvergenceError,
    DegenerateDenominator,
    DomainError,
    NumericalError,
)

CELL_SHAPE = 3.5  # Voronoi cell-area shape parameter eta


# ---------------------------------------------------------------------------
# Interference integrals
# ---------------------------------------------------------------------------

def v_factor(theta: float, alpha: float) -> float:
    """Full-plane interference factor 2 pi theta^(2/alpha) / (alpha sin(2 pi/alpha))."""
    _check_domain(theta, alpha)
    return 2.0 * math.pi * theta ** (2.0 / alpha) / (alpha * math.sin(2.0 * math.pi / alpha))


def z_factor(theta: float, alpha: float) -> float:
    """Guard-zone interference factor theta^(2/a) * int_{theta^(-2/a)}^inf du/(1+u^(a/2)).

    Evaluated by adaptive quadrature on a finite interval via the rational
    substitution u = L (1+t)/(1-t); absolute error <= 1e-10.
    """
    _check_domain(theta, alpha)
    pref = theta ** (2.0 / alpha)
    lower = theta ** (-2.0 / alpha)
    half = alpha / 2.0

    def integrand(t):
        u = lower * (1.0 + t) / (1.0 - t)
        jac = 2.0 * lower / (1.0 - t) ** 2
        return jac / (1.0 + u ** half)

    val, err = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    if err > 1e-10:
        raise ConvergenceError(f"z_factor: quadrature error estimate {err:.2e} > 1e-10")
    return pref * val


def _check_domain(theta, alpha):
    if theta <= 0:
        raise DomainError("theta must be > 0")
    if alpha <= 2:
        raise DomainError("alpha must be > 2")


# ---------------------------------------------------------------------------
# Cell load
# ---------------------------------------------------------------------------

@dataclass
class CellLoadPmf:
    """Distribution of served UEs per SAP, truncated at the cap."""

    probs: np.ndarray  # index i = 0..cap
    rho: float
    cap: int
    shape: float = CELL_SHAPE

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.cap + 1), self.probs))


def cell_load_pmf(rho: float, cap: int) -> CellLoadPmf:
    """Truncated cell-load PMF; tail mass lumped at ``cap`` by complement.

    Probabilities below the cap follow the Gamma-ratio law with shape
    eta = 3.5, computed in log space to survive large i.
    """
    if rho <= 0:
        raise DomainError("cell_load_pmf: rho must be > 0")
    if cap < 1:
        raise DomainError("cell_load_pmf: cap must be >= 1")
    eta = CELL_SHAPE
    i = np.arange(cap, dtype=np.float64)
    logp = (
        eta * math.log(eta)
        + gammaln(i + eta)
        - i * math.log(rho)
        - gammaln(i + 1.0)
        - gammaln(eta)
        - (i + eta) * math.log(1.0 / rho + eta)
    )
    head = np.exp(logp)
    if not np.all(np.isfinite(head)):
        raise NumericalError("cell_load_pmf: non-finite probability mass")
    probs = np.empty(cap + 1)
    probs[:cap] = head
    probs[cap] = max(1.0 - head.sum(), 0.0)
    return CellLoadPmf(probs=probs, rho=rho, cap=cap)


def mean_load(pmf: CellLoadPmf) -> float:
    """Mean of the truncated load distribution, sum i * probs[i]."""
    return pmf.mean


# ---------------------------------------------------------------------------
# Geo/G/1 closed forms
# ---------------------------------------------------------------------------

def geo_g1_throughput(xi: float, mu: float, n: int) -> float:
    """Mean packet throughput of one queue: max{(mu/n - xi) / (1 - xi), 0}.

    Convention: 1.0 at the degenerate point xi = 1, mu/n = 1.
    """
    if xi >= 1.0:
        return 1.0 if mu / n >= 1.0 else 0.0
    return max((mu / n - xi) / (1.0 - xi), 0.0)


def geo_g1_idle_prob(xi: float, mu: float, n: int) -> float:
    """Stationary empty-queue probability: max{1 - n xi / mu, 0}."""
    if mu <= 0.0:
        if xi == 0.0:
            return 1.0
        raise DomainError("geo_g1_idle_prob: mu = 0 with xi > 0")
    return max(1.0 - n * xi / mu, 0.0)


def optimal_dl_fraction(traffic: TrafficConfig) -> float:
    """DL slot fraction balancing offered load: dl / (ul + dl)."""
    total = traffic.ul_rate + traffic.dl_rate
    if total <= 0:
        raise DomainError("optimal_dl_fraction: both arrival rates are zero")
    return traffic.dl_rate / total


# ---------------------------------------------------------------------------
# S-TDD
# ---------------------------------------------------------------------------

@dataclass
class ServiceRates:
    """Per-direction conditional success probabilities, clamped to [0, 1]."""

    ul: float
    dl: float


def stdd_service_rates(
    net: NetworkConfig, traffic: TrafficConfig, p_s: float, pmf: CellLoadPmf
) -> ServiceRates:
    """Static-TDD mean-field service rates.

    dl = 1 - E[N] xi_D Z / p_S and ul = 1 - E[N] xi_U V / (1 - p_S),
    each clamped to [0, 1]; a zero slot share with traffic gives rate 0.
    """
    en = pmf.mean
    z = z_factor(net.sir_threshold, net.path_loss_exp)
    v = v_factor(net.sir_threshold, net.path_loss_exp)
    dl = _one_sided_rate(en * traffic.dl_rate * z, p_s)
    ul = _one_sided_rate(en * traffic.ul_rate * v, 1.0 - p_s)
    return ServiceRates(ul=ul, dl=dl)


def _one_sided_rate(load_term: float, share: float) -> float:
    if share <= 0.0:
        return 1.0 if load_term == 0.0 else 0.0
    return min(max(1.0 - load_term / share, 0.0), 1.0)


def stdd_throughput(
    net: NetworkConfig, traffic: TrafficConfig, p_s: float, pmf: CellLoadPmf
) -> ThroughputReport:
    """Mean UL/DL packet throughput under static TDD.

    Sums geo_g1_throughput(xi, share * mu, i) over the load PMF, with mu from
    :func:`stdd_service_rates`; algebraically identical to the explicit
    tier-sum form (the identity is asserted in tests).
    """
    rates = stdd_service_rates(net, traffic, p_s, pmf)
    t_dl = _tier_sum(pmf, traffic.dl_rate, p_s * rates.dl)
    t_ul = _tier_sum(pmf, traffic.ul_rate, (1.0 - p_s) * rates.ul)
    diag = {
        "dl_service_rate": rates.dl,
        "ul_service_rate": rates.ul,
        "dl_idle_prob": _tier_idle(pmf, traffic.dl_rate, p_s * rates.dl),
        "ul_idle_prob": _tier_idle(pmf, traffic.ul_rate, (1.0 - p_s) * rates.ul),
        "mean_load": pmf.mean,
        "dl_fraction": p_s,
    }
    return ThroughputReport(dl_throughput=t_dl, ul_throughput=t_ul, diagnostics=diag)


def _tier_sum(pmf: CellLoadPmf, xi: float, mu_eff: float) -> float:
    if xi == 0.0:
        return 0.0  # no packets to deliver
    return sum(
        pmf.probs[i] * geo_g1_throughput(xi, mu_eff, i)
        for i in range(1, pmf.cap + 1)
    )


def _tier_idle(pmf: CellLoadPmf, xi: float, mu_eff: float) -> float:
    if xi == 0.0:
        return 1.0
    if mu_eff <= 0.0:
        return 0.0
    return sum(
        pmf.probs[i] * geo_g1_idle_prob(xi, mu_eff, i)
        for i in range(1, pmf.cap + 1)
    ) / max(1.0 - pmf.probs[0], 1e-300)


def stdd_throughput_explicit(
    net: NetworkConfig, traffic: TrafficConfig, p_s: float, pmf: CellLoadPmf
) -> ThroughputReport:
    """Tier-sum form written out verbatim; equals :func:`stdd_throughput`.

    Kept as the second route of the algebraic-identity check.
    """
    en = pmf.mean
    z = z_factor(net.sir_threshold, net.path_loss_exp)
    v = v_factor(net.sir_threshold, net.path_loss_exp)
    xi_d, xi_u = traffic.dl_rate, traffic.ul_rate
    t_dl = t_ul = 0.0
    for i in range(1, pmf.cap + 1):
        if xi_d > 0 and xi_d < 1:
            t_dl += pmf.probs[i] / (1.0 - xi_d) * max(
                p_s / i - xi_d * (1.0 + en * z / i), 0.0
            )
        if xi_u > 0 and xi_u < 1:
            t_ul += pmf.probs[i] / (1.0 - xi_u) * max(
                (1.0 - p_s) / i - xi_u * (1.0 + en * v / i), 0.0
            )
    return ThroughputReport(dl_throughput=t_dl, ul_throughput=t_ul)


def activity_probability(k: int, xi: float, p: float, mu: float) -> float:
    """Probability a k-UE cell transmits in a slot of its direction: min(k xi/(p mu), 1)."""
    if mu <= 0.0 or p <= 0.0:
        raise DomainError("activity_probability: need mu > 0 and p > 0")
    return min(k * xi / (p * mu), 1.0)


# ---------------------------------------------------------------------------
# D-TDD
# ---------------------------------------------------------------------------

def dtdd_service_rates(
    net: NetworkConfig, traffic: TrafficConfig, pmf: CellLoadPmf
) -> ServiceRates:
    """Dynamic-TDD closed-form service rates.

    Shared numerator xi_U + xi_D - (xi_D^2 Z + xi_U^2 V) E[N]; the UL
    denominator carries the SAP/UE power ratio, the DL denominator its
    inverse. A non-positive denominator raises DegenerateDenominator.
    """
    xi_u, xi_d = traffic.ul_rate, traffic.dl_rate
    if xi_u + xi_d <= 0:
        raise DomainError("dtdd_service_rates: both arrival rates are zero")
    en = pmf.mean
    z = z_factor(net.sir_threshold, net.path_loss_exp)
    v = v_factor(net.sir_threshold, net.path_loss_exp)
    ratio = net.power_ratio  # P_st / P_ut

    num = xi_u + xi_d - (xi_d**2 * z + xi_u**2 * v) * en
    den_ul = xi_u + xi_d - xi_d**2 * en * (z - v * ratio)
    den_dl = xi_d + xi_u - xi_u**2 * en * v * (1.0 - 1.0 / ratio)
    if den_ul <= 0:
        raise DegenerateDenominator(f"dtdd UL denominator {den_ul:.3e} <= 0")
    if den_dl <= 0:
        raise DegenerateDenominator(f"dtdd DL denominator {den_dl:.3e} <= 0")
    clamp = lambda x: min(max(x, 0.0), 1.0)
    return ServiceRates(ul=clamp(num / den_ul), dl=clamp(num / den_dl))


def dtdd_throughput(
    net: NetworkConfig, traffic: TrafficConfig, pmf: CellLoadPmf
) -> ThroughputReport:
    """Mean UL/DL packet throughput under dynamic TDD with load-balanced p_D."""
    p_d = optimal_dl_fraction(traffic)
    rates = dtdd_service_rates(net, traffic, pmf)
    xi_u, xi_d = traffic.ul_rate, traffic.dl_rate
    t_dl = t_ul = 0.0
    for k in range(1, pmf.cap + 1):
        t_dl += p_d * pmf.probs[k] * geo_g1_throughput(xi_d, rates.dl, k)
        t_ul += (1.0 - p_d) * pmf.probs[k] * geo_g1_throughput(xi_u, rates.ul, k)
    if xi_d == 0.0:
        t_dl = 0.0
    if xi_u == 0.0:
        t_ul = 0.0
    diag = {
        "dl_service_rate": rates.dl,
        "ul_service_rate": rates.ul,
        "mean_load": pmf.mean,
        "dl_fraction": p_d,
    }
    return ThroughputReport(dl_throughput=t_dl, ul_throughput=t_ul, diagnostics=diag)


@dataclass
class FixedPointResult:
    rates: ServiceRates
    iterations: int
    residual: float

    @property
    def diagnostics(self) -> dict[str, float]:
        return {"iterations": float(self.iterations), "residual": self.residual}


def dtdd_fixed_point(
    net: NetworkConfig,
    traffic: TrafficConfig,
    pmf: CellLoadPmf,
    tol: float = 1e-10,
    max_iter: int = 1000,
    literal: bool = False,
) -> FixedPointResult:
    """Iterate the coupled D-TDD service-rate system from (1, 1).

    Default is the symmetry-consistent system
        mu_D = (1 + p xi_D Z E[N]/mu_D + (1-p) xi_U V E[N] (Put/Pst)/mu_U)^-1
        mu_U = (1 + (1-p) xi_U V E[N]/mu_U + p xi_D V E[N] (Pst/Put)/mu_D)^-1
    where the UL equation mirrors the DL one with directions, rates, and the
    power ratio swapped (Z applies only at UE receivers, where the serving
    distance excludes nearby interferers). ``literal=True`` instead keeps
    xi_D and the DL rate in both UL interference terms as written in the
    source derivation; simulation arbitrates between the two.
    """
    if tol <= 0:
        raise DomainError("dtdd_fixed_point: tol must be > 0")
    xi_u, xi_d = traffic.ul_rate, traffic.dl_rate
    if xi_u + xi_d <= 0:
        return FixedPointResult(ServiceRates(ul=1.0, dl=1.0), 0, 0.0)
    p = optimal_dl_fraction(traffic)
    en = pmf.mean
    z = z_factor(net.sir_threshold, net.path_loss_exp)
    v = v_factor(net.sir_threshold, net.path_loss_exp)
    ratio = net.power_ratio

    a_dl_same = p * xi_d * z * en                       # SAP interference at UE
    a_dl_cross = (1.0 - p) * xi_u * v * en / ratio      # UE interference at UE
    if literal:
        a_ul_same = (1.0 - p) * xi_d * v * en           # paired with mu_D below
        a_ul_cross = p * xi_d * v * en * ratio
        ul_same_uses_dl_rate = True
    else:
        a_ul_same = (1.0 - p) * xi_u * v * en           # UE interference at SAP
        a_ul_cross = p * xi_d * v * en * ratio          # SAP interference at SAP
        ul_same_uses_dl_rate = False

    mu_d, mu_u = 1.0, 1.0
    for it in range(1, max_iter + 1):
        new_d = 1.0 / (1.0 + a_dl_same / mu_d + a_dl_cross / mu_u)
        if ul_same_uses_dl_rate:
            # literal reading: same-tier term divides by the DL rate
            new_u = 1.0 / (1.0 + a_ul_same / mu_d + a_ul_cross / mu_u)
        else:
            new_u = 1.0 / (1.0 + a_ul_same / mu_u + a_ul_cross / mu_d)
        resid = max(abs(new_d - mu_d), abs(new_u - mu_u))
        mu_d, mu_u = new_d, new_u
        if mu_d <= 0 or mu_u <= 0:
            raise DegenerateDenominator("dtdd_fixed_point: iterate left (0, 1]")
        if resid < tol:
            clamp = lambda x: min(max(x, 0.0), 1.0)
            return FixedPointResult(
                ServiceRates(ul=clamp(mu_u), dl=clamp(mu_d)), it, resid
            )
    raise ConvergenceError(
        f"dtdd_fixed_point: no convergence after {max_iter} iterations"
    )
