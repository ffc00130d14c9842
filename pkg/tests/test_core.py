import json
import math

import pytest

from tddnet.core import (
    DYNAMIC,
    STATIC,
    NetworkConfig,
    TddPolicy,
    ThroughputReport,
    TrafficConfig,
    config_from_dict,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    load_config,
    validate_config,
)
from tddnet.errors import InvalidParameter


def test_unit_conversions():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(0.0) == 1.0
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(23.0) == pytest.approx(0.19952623, rel=1e-8)
    assert linear_to_db(db_to_linear(7.3)) == pytest.approx(7.3)


def _net(**overrides):
    base = dict(sap_density=1e-4, ue_density=1e-3, sap_power=0.2,
                ue_power=0.05, path_loss_exp=3.8, sir_threshold=1.0, ue_cap=3)
    base.update(overrides)
    return NetworkConfig(**base)


def test_network_ratios():
    net = _net()
    assert net.density_ratio == pytest.approx(0.1)
    assert net.power_ratio == pytest.approx(4.0)


def test_validate_config_collects_all_violations():
    net = _net(sap_density=-1.0, path_loss_exp=1.5)
    traffic = TrafficConfig(ul_rate=-0.1, dl_rate=0.02)
    policy = TddPolicy(variant="half-duplex", dl_fraction=1.7)
    with pytest.raises(InvalidParameter) as exc:
        validate_config(net, traffic, policy)
    msgs = "\n".join(exc.value.errors)
    assert "sap_density" in msgs
    assert "path_loss_exp" in msgs
    assert "ul_rate" in msgs
    assert "variant" in msgs
    assert "dl_fraction" in msgs
    assert len(exc.value.errors) == 5


def test_validate_config_passes_clean_bundle():
    bundle = (_net(), TrafficConfig(0.02, 0.02), TddPolicy(STATIC, 0.5))
    assert validate_config(*bundle) == bundle


def test_policy_variants():
    assert TddPolicy(STATIC, 0.5).invariant_violations() == []
    assert TddPolicy(DYNAMIC, None).invariant_violations() == []
    assert TddPolicy("STATIC", 0.5).invariant_violations()  # case-sensitive


DOC = {
    "network": {
        "sap_density": 1e-4, "ue_density": 1e-3,
        "sap_power_dbm": 23.0, "ue_power_dbm": 17.0,
        "path_loss_exp": 3.8, "sir_threshold_db": 0.0, "ue_cap": 3,
    },
    "traffic": {"ul_rate": 0.02, "dl_rate": 0.04},
    "tdd": {"variant": "dynamic"},
}


def test_config_from_dict_scaled_keys():
    net, traffic, policy = config_from_dict(json.loads(json.dumps(DOC)))
    assert net.sap_power == pytest.approx(dbm_to_watts(23.0))
    assert net.ue_power == pytest.approx(dbm_to_watts(17.0))
    assert net.sir_threshold == pytest.approx(1.0)
    assert traffic.dl_rate == 0.04
    assert policy.variant == DYNAMIC
    assert policy.dl_fraction is None


def test_config_from_dict_rejects_double_specified_power():
    doc = json.loads(json.dumps(DOC))
    doc["network"]["sap_power"] = 0.2
    with pytest.raises(InvalidParameter):
        config_from_dict(doc)


def test_config_from_dict_rejects_missing_section():
    with pytest.raises(InvalidParameter):
        config_from_dict({"network": DOC["network"]})


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(DOC))
    doc = load_config(str(path))
    net, _, _ = config_from_dict(doc)
    assert net.path_loss_exp == 3.8


def test_packaged_default_config_is_valid():
    from importlib import resources

    with resources.files("tddnet.data").joinpath("default_config.json").open() as fh:
        doc = json.load(fh)
    net, traffic, policy = config_from_dict(doc)
    assert net.density_ratio == pytest.approx(0.1)
    assert doc["simulation"]["slots"] > doc["simulation"]["warmup"]


def test_report_to_dict():
    rep = ThroughputReport(0.1, 0.2, 0.01, 0.02, {"mean_load": 2.9})
    d = rep.to_dict()
    assert d["dl_throughput"] == 0.1
    assert d["ul_ci_halfwidth"] == 0.02
    assert d["diagnostics"]["mean_load"] == 2.9
    json.dumps(d)  # serializable


def test_network_config_frozen():
    net = _net()
    with pytest.raises(Exception):
        net.sap_density = 1.0
    assert not math.isnan(net.density_ratio)
