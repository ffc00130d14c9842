"""Domain types, unit conversions, and configuration validation.

All internal computation uses linear units; dB/dBm values are accepted only
at the JSON config boundary (keys suffixed ``_db`` / ``_dbm``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import InvalidParameter

STATIC = "static"
DYNAMIC = "dynamic"


def db_to_linear(x_db: float) -> float:
    """10^(x/10)."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """Inverse of :func:`db_to_linear`."""
    return 10.0 * math.log10(x)


def dbm_to_watts(x_dbm: float) -> float:
    """10^((x-30)/10)."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Deployment and radio parameters, all in linear units."""

    sap_density: float      # SAPs per m^2
    ue_density: float       # UEs per m^2
    sap_power: float        # W
    ue_power: float         # W
    path_loss_exp: float    # dimensionless, > 2
    sir_threshold: float    # linear
    ue_cap: int             # max served UEs per SAP

    @property
    def density_ratio(self) -> float:
        """SAP/UE density ratio; the only way densities enter the analysis."""
        return self.sap_density / self.ue_density

    @property
    def power_ratio(self) -> float:
        """SAP/UE transmit power ratio."""
        return self.sap_power / self.ue_power

    def invariant_violations(self) -> list[str]:
        errs = []
        if not self.sap_density > 0:
            errs.append("sap_density: must be > 0")
        if not self.ue_density > 0:
            errs.append("ue_density: must be > 0")
        if not self.sap_power > 0:
            errs.append("sap_power: must be > 0")
        if not self.ue_power > 0:
            errs.append("ue_power: must be > 0")
        if not self.path_loss_exp > 2:
            errs.append("path_loss_exp: must be > 2 (interference integrals diverge otherwise)")
        if not self.sir_threshold > 0:
            errs.append("sir_threshold: must be > 0 (linear)")
        if not (isinstance(self.ue_cap, int) and self.ue_cap >= 1):
            errs.append("ue_cap: must be an integer >= 1")
        return errs


@dataclass(frozen=True)
class TrafficConfig:
    """Per-UE Bernoulli arrival probabilities per slot."""

    ul_rate: float  # in [0, 1]
    dl_rate: float  # in [0, 1]

    def invariant_violations(self) -> list[str]:
        errs = []
        if not 0.0 <= self.ul_rate <= 1.0:
            errs.append("ul_rate: must lie in [0, 1]")
        if not 0.0 <= self.dl_rate <= 1.0:
            errs.append("dl_rate: must lie in [0, 1]")
        return errs


@dataclass(frozen=True)
class TddPolicy:
    """TDD mode and DL slot fraction.

    ``dl_fraction=None`` means "balance the offered load", i.e. use
    dl_rate/(ul_rate + dl_rate) at evaluation time.
    """

    variant: str                      # STATIC or DYNAMIC
    dl_fraction: float | None = None  # in [0, 1], or None for auto

    def invariant_violations(self) -> list[str]:
        errs = []
        if self.variant not in (STATIC, DYNAMIC):
            errs.append(f"variant: must be '{STATIC}' or '{DYNAMIC}'")
        if self.dl_fraction is not None and not 0.0 <= self.dl_fraction <= 1.0:
            errs.append("dl_fraction: must lie in [0, 1]")
        return errs


@dataclass
class ThroughputReport:
    """Per-direction mean packet throughput plus diagnostics."""

    dl_throughput: float
    ul_throughput: float
    dl_ci_halfwidth: float = 0.0
    ul_ci_halfwidth: float = 0.0
    diagnostics: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dl_throughput": self.dl_throughput,
            "ul_throughput": self.ul_throughput,
            "dl_ci_halfwidth": self.dl_ci_halfwidth,
            "ul_ci_halfwidth": self.ul_ci_halfwidth,
            "diagnostics": dict(self.diagnostics),
        }


def validate_config(
    net: NetworkConfig, traffic: TrafficConfig, policy: TddPolicy
) -> tuple[NetworkConfig, TrafficConfig, TddPolicy]:
    """Return the bundle unchanged if every invariant holds.

    Raises :class:`InvalidParameter` carrying the full list of violations
    otherwise. Pure: same inputs always give the same outcome.
    """
    errs = (
        net.invariant_violations()
        + traffic.invariant_violations()
        + policy.invariant_violations()
    )
    if errs:
        raise InvalidParameter(errs)
    return net, traffic, policy


def _pop_scaled(d: dict, base: str, suffix: str, conv):
    """Fetch ``base`` or ``base+suffix`` (converted) from a config dict."""
    if base in d and base + suffix in d:
        raise InvalidParameter(f"{base}: given both linear and {suffix} forms")
    if base + suffix in d:
        return conv(d.pop(base + suffix))
    if base in d:
        return d.pop(base)
    raise InvalidParameter(f"{base}: missing")


def config_from_dict(doc: dict) -> tuple[NetworkConfig, TrafficConfig, TddPolicy]:
    """Build and validate the config bundle from a parsed JSON document."""
    try:
        n = dict(doc["network"])
        t = dict(doc["traffic"])
        p = dict(doc.get("tdd", {}))
    except (KeyError, TypeError) as exc:
        raise InvalidParameter(f"config document: missing section ({exc})") from exc

    net = NetworkConfig(
        sap_density=float(n["sap_density"]),
        ue_density=float(n["ue_density"]),
        sap_power=float(_pop_scaled(n, "sap_power", "_dbm", dbm_to_watts)),
        ue_power=float(_pop_scaled(n, "ue_power", "_dbm", dbm_to_watts)),
        path_loss_exp=float(n["path_loss_exp"]),
        sir_threshold=float(_pop_scaled(n, "sir_threshold", "_db", db_to_linear)),
        ue_cap=int(n["ue_cap"]),
    )
    traffic = TrafficConfig(ul_rate=float(t["ul_rate"]), dl_rate=float(t["dl_rate"]))
    frac = p.get("dl_fraction", None)
    policy = TddPolicy(
        variant=p.get("variant", STATIC),
        dl_fraction=None if frac is None else float(frac),
    )
    return validate_config(net, traffic, policy)


def load_config(path: str) -> dict:
    """Read a JSON config file; the raw document (simulation block included)."""
    with open(path) as fh:
        return json.load(fh)
