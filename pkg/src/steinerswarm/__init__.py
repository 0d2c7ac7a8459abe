"""steinerswarm: a deterministic, headless swarm simulator in which local
potential-field behaviors stretch a robot swarm into a thick Steiner tree
between diverging leaders, plus the evaluation harness measuring achieved
Steiner-tree size at disconnection under random permanent failures.
"""

from .base_behavior import (BoundaryInfo, FlockParams, boundary_tension_force,
                            detect_boundary, flocking_force)
from .core import (LeaderRecord, NeighborView, PublicVars, RobotState,
                   frame_transform, snapshot_neighborhoods)
from .engine import (ConfigError, LeaderScript, SwarmConfig, World,
                     inject_failures, init_world, step, strategy_behaviors)
from .geometry import CommGraph, Vec2, build_comm_graph, gabriel_reduce
from .harness import (ExperimentPlan, SummaryRow, parse_config, run_experiment,
                      run_trial, serialize_config)
from .leader import (LeaderParams, leader_pull_force, lonely_leader_attraction,
                     update_leader_field)
from .metrics import (SteinerTree, TrialRecord, is_connected, performance_ratio,
                      relay_reference_line, steiner_minimal_tree)
from .stability import (StabilityParams, compression_force, density_force,
                        observable_area, phi, update_b, update_t_h)
from .svgrender import dump_frame, render_svg

__version__ = "0.1.0"
