"""tddnet: packet-throughput evaluation of small cell networks under
static and dynamic TDD, via closed-form analysis and an independent
slot-based Monte Carlo simulator."""

from .core import (
    DYNAMIC,
    STATIC,
    NetworkConfig,
    TddPolicy,
    ThroughputReport,
    TrafficConfig,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    validate_config,
)
from .analysis import (
    CellLoadPmf,
    ServiceRates,
    activity_probability,
    cell_load_pmf,
    dtdd_fixed_point,
    dtdd_service_rates,
    dtdd_throughput,
    geo_g1_idle_prob,
    geo_g1_throughput,
    mean_load,
    optimal_dl_fraction,
    stdd_service_rates,
    stdd_throughput,
    v_factor,
    z_factor,
)
from .simulator import (
    Association,
    Deployment,
    SimMetrics,
    aggregate_reports,
    associate,
    generate_deployment,
    measure_throughput,
    run_replication,
    run_simulation,
)

__version__ = "0.1.0"
