"""Data-driven estimation of charging-station meter errors from fleet
charging records, with a synthetic-fleet validation harness."""

from .model import (ChargingOrder, ChargingPoint, ChargingSegment,
                    ComparisonChain, DensityEstimate, ModelConfig,
                    QuantBounds, ReferenceCluster, StationVerdict,
                    chain_error, energy_density, relative_meter_error)
from .estimator import (EstimationResult, PooledDensity,
                        TruncatedNormalErrorModel, acceptance_probability,
                        build_chains, cluster_probability,
                        find_reference_clusters, pool_estimates,
                        reference_bias_sigma, reference_station_error,
                        run_pipeline)
from .simulator import (SimEv, SimFcs, SimScenario, ValidationReport,
                        conversion_efficiency, desk_scale_scenario,
                        run_validation, simulate_fleet, simulate_session)

__version__ = "0.1.0"
