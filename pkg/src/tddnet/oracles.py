"""Independent brute-force references for tests and the validate command.

Everything here is deliberately decoupled from the analysis module: the
quadrature is a hand-rolled adaptive Simpson scheme (not scipy), and the
queue oracle solves the truncated birth-death chain numerically instead of
using the closed forms it is meant to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, TruncationError


# ---------------------------------------------------------------------------
# Adaptive quadrature
# ---------------------------------------------------------------------------

def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, fa, b, fb, whole, m, fm, tol, depth):
    lm, flm, left = _simpson(f, a, fa, m, fm)
    rm, frm, right = _simpson(f, m, fm, b, fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol or depth <= 0:
        # integrable endpoint singularities bottom out with tiny residuals
        if depth <= 0 and abs(delta) > max(15.0 * tol, 1e-13):
            raise ConvergenceError(
                f"adaptive Simpson: recursion limit reached, residual {abs(delta):.3e}"
            )
        return left + right + delta / 15.0
    # floor the per-half tolerance at double precision scale
    half_tol = max(0.5 * tol, 1e-17)
    return _adaptive(f, a, fa, m, fm, left, lm, flm, half_tol, depth - 1) + _adaptive(
        f, m, fm, b, fb, right, rm, frm, half_tol, depth - 1
    )


def quadrature(f, a: float, b: float, tol: float = 1e-12, panels: int = 8) -> float:
    """Adaptive Simpson estimate of the integral of ``f`` on (a, b).

    ``b = inf`` is handled by the rational substitution u = a + t/(1-t)^2,
    which keeps the transformed integrand regular for algebraic tail decay
    u^(-s) down to s = 3/2. Absolute error target ``tol``.
    """
    if tol <= 0:
        raise DomainError("quadrature: tol must be > 0")
    if math.isinf(b):
        def g(t, _f=f, _a=a):
            w = 1.0 - t
            return _f(_a + t / (w * w)) * (1.0 + t) / (w * w * w)
        return quadrature(g, 0.0, 1.0 - 1e-12, tol=tol, panels=panels)

    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo, fhi = f(lo), f(hi)
        m, fm, whole = _simpson(f, lo, flo, hi, fhi)
        total += _adaptive(f, lo, flo, hi, fhi, whole, m, fm, tol / panels, 48)
    return total


# ---------------------------------------------------------------------------
# Geo/G/1 birth-death chain
# ---------------------------------------------------------------------------

@dataclass
class ChainSolution:
    """Stationary distribution of the truncated queue-length chain."""

    stationary: np.ndarray  # pi(0..L)
    mean_queue: float
    throughput: float       # arrival rate / mean queue length
    idle_prob: float


def geo_g1_chain(xi: float, mu_eff: float, trunc: int = 10_000) -> ChainSolution:
    """Solve the queue-length birth-death chain by its balance recursion.

    Per-slot dynamics: a head-of-line packet departs with probability
    ``mu_eff``; an arrival occurs with probability ``xi`` and cannot depart
    in its arrival slot. Balance gives pi(1) = pi(0) * xi / (mu_eff (1-xi))
    and ratio xi (1-mu_eff) / ((1-xi) mu_eff) thereafter.

    The truncation level starts at ``trunc`` and doubles until the tail
    term is below 1e-10 (heavy tails near the stability boundary).
    """
    if not 0.0 <= xi < 1.0:
        raise DomainError("geo_g1_chain: xi must lie in [0, 1)")
    if not 0.0 < mu_eff <= 1.0:
        raise DomainError("geo_g1_chain: mu_eff must lie in (0, 1]")
    if xi == 0.0:
        pi = np.zeros(2)
        pi[0] = 1.0
        return ChainSolution(pi, 0.0, 0.0, 1.0)
    if xi >= mu_eff:
        # Unstable: no proper stationary distribution; all mass escapes.
        pi = np.zeros(2)
        return ChainSolution(pi, math.inf, 0.0, 0.0)

    ratio = xi * (1.0 - mu_eff) / ((1.0 - xi) * mu_eff)
    if ratio == 0.0:
        # mu_eff = 1: the queue never exceeds one packet
        p1 = xi / ((1.0 - xi) * mu_eff)
        pi = np.array([1.0, p1]) / (1.0 + p1)
        mean_q = float(pi[1])
        return ChainSolution(pi, mean_q, xi / mean_q, float(pi[0]))
    level = trunc
    for _ in range(12):
        j = np.arange(1, level + 1, dtype=np.float64)
        # log pi(j)/pi(0) = log(xi/((1-xi) mu)) + (j-1) log(ratio)
        log_first = math.log(xi) - math.log1p(-xi) - math.log(mu_eff)
        with np.errstate(divide="ignore"):
            log_terms = log_first + (j - 1.0) * (math.log(ratio) if ratio > 0 else -math.inf)
        rel = np.exp(log_terms)
        tail = rel[-1]
        norm = 1.0 + rel.sum()
        if tail / norm < 1e-10:
            pi = np.empty(level + 1)
            pi[0] = 1.0 / norm
            pi[1:] = rel / norm
            mean_q = float(np.dot(np.arange(level + 1), pi))
            thr = xi / mean_q if mean_q > 0 else 0.0
            return ChainSolution(pi, mean_q, thr, float(pi[0]))
        level *= 2
    raise TruncationError(
        f"geo_g1_chain: tail mass above 1e-10 even at truncation {level}"
    )


# ---------------------------------------------------------------------------
# Closed-form references
# ---------------------------------------------------------------------------

def full_buffer_dl_coverage(theta: float, alpha: float) -> float:
    """All-interferers-active DL success probability, 1 / (1 + Z(theta, alpha)).

    Classical nearest-association coverage identity; reference for the
    simulator's SIR engine under the full-buffer override.
    """
    if theta <= 0 or alpha <= 2:
        raise DomainError("full_buffer_dl_coverage: need theta > 0 and alpha > 2")
    pref = theta ** (2.0 / alpha)
    lower = theta ** (-2.0 / alpha)
    z = pref * quadrature(lambda u: 1.0 / (1.0 + u ** (alpha / 2.0)), lower, math.inf,
                          tol=1e-12)
    return 1.0 / (1.0 + z)


def grid_minimize(f, lo: float, hi: float, n: int = 999) -> float:
    """Argmin of ``f`` over a uniform grid on [lo, hi]; brute-force reference."""
    xs = np.linspace(lo, hi, n)
    vals = np.array([f(x) for x in xs])
    return float(xs[int(np.argmin(vals))])
