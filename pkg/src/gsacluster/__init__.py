"""Two-level clustering for large wireless sensor networks.

First level: energy-gradient multihop clusters whose residual energy is
non-decreasing toward the cluster head. Second level: a gravitational
search algorithm associates cluster heads with gateway nodes, balancing
gateway residual energy against head-to-gateway-to-base-station distance.
A round-based simulation engine measures energy consumption and network
lifetime; an experiment CLI drives multi-seed scenario grids.
"""

from .assign import (FF1, FF2, Assignment, AssignmentObjective,
                     DegenerateFitnessError, EligibilityMap, FitnessWeights,
                     InfeasibleAssignmentError, assign_heads,
                     assign_sensors_direct, brute_force_assignment,
                     build_eligibility, decode_agent, default_weights,
                     fitness_ff1, fitness_ff2)
from .gradient import (GRADIENT, WATERSHED, ClusterSet, build_clusters,
                       cluster_count_comparison)
from .gsa import (Agent, FitnessEvaluationError, GsaParams, GsaResult,
                  compute_accelerations, compute_masses,
                  gravitational_constant, optimize, step_kinematics)
from .netmodel import (Deployment, GatewayNode, Position, RadioParams,
                       SensorNode, UnknownNodeError, deploy_random,
                       deployment_from_json, deployment_to_json, distance,
                       neighbors, rx_energy, sensor_adjacency, tx_energy)
from .sim import (GC_GSA, GSA_EEC, WA_GSA, GsaSettings,
                  InfeasibleDeploymentError, NetworkState, RoundReport,
                  SimConfig, SimSummary, Simulation, run_round,
                  run_simulation)

__version__ = "0.1.0"
