"""Bidirectional Bayes-net Monte Carlo motion planning on planar robots.

The planner grows two Bayes nets of incrementally learned Gaussian mixture
components from one uniformly seeded waypoint set: one net contracts onto
the task-space goal box, the other onto the start configuration.  Graph
search over the paired nets extracts a continuous-time-safe trajectory.
RRT-Connect, PRM, and numerical potential-field-descent baselines share
the same scenario types and safety predicate.
"""

from .bayesnet import (BayesNet, ExpansionConfig, NetEdge, NetNode, SeedSet,
                       exp_bayes_net, expansion_iteration, stretch_edge)
from .baselines import BaselineConfig, pf_descent, prm, rrt_connect
from .environment import (CollisionParams, Obstacle, box, circle,
                          collision_cost, segment_safe, signed_distance,
                          waypoint_collision_field)
from .fields import (Annealer, GoalConstraint, PotentialField,
                     StartConstraint, field_value, goal_penalty,
                     is_satisfied, start_penalty, unnormalized_density)
from .gmm import (GaussianComponent, LearningFactors, Mixture,
                  Responsibilities, cluster, estimate_moments,
                  importance_estimate, importance_update, renew_and_filter,
                  responsibilities, sample_mixture, update_moments)
from .kinematics import (RobotModel, ccb_positions, forward_kinematics,
                         joint_limit_cost)
from .pathfinder import (PathCandidate, Roadmap, Trajectory, assemble_paths,
                         dijkstra, find_trajectory, pair_connections, plan,
                         roadmap_construct, uniform_seed, verify_trajectory)
from .scenario import (PlannerParams, Scenario, builtin_scenario_dir,
                       load_scenario, save_scenario)

__version__ = "0.1.0"
