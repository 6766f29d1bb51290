"""Scenario files and the tunable parameter set.

A scenario is one JSON document: robot model, obstacle list, start
configuration, task-space goal box, and optional parameter overrides.
Every algorithm knob has a default here and a config key; scenario files
round-trip through load -> serialize -> load unchanged.
"""

import json
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import environment, kinematics
from .bayesnet import ExpansionConfig
from .environment import CollisionParams, Obstacle
from .errors import ScenarioFormatError
from .fields import BACKWARD, FORWARD, GoalConstraint, PotentialField, StartConstraint
from .gmm import LearningFactors


@dataclass(frozen=True)
class PlannerParams:
    """Every tunable with its default; scenario files and CLI overrides
    replace individual fields."""

    # collision / continuous-time safety
    epsilon: float = 0.05
    lambda_c: float = 10.0
    beta: float = 0.2
    n_intermediate: int = 8
    # constraint penalties and annealing
    tol_constraint: float = 1e-3
    rho0: float = 5.0
    eta_rho: float = 0.5
    lambda_position: float = 10.0
    lambda_angle: float = 1.0
    # incremental learning
    eta_pi: float = 0.4
    eta_mu: float = 0.2
    eta_sigma: float = 0.1
    # expansion loop
    n_samples: int = 1600
    n_mco: int = 30
    knn: int = 5
    etol: int = 5

    def collision(self):
        return CollisionParams(epsilon=self.epsilon, lambda_c=self.lambda_c,
                               beta=self.beta,
                               n_intermediate=self.n_intermediate)

    def factors(self):
        return LearningFactors(eta_pi=self.eta_pi, eta_mu=self.eta_mu,
                               eta_sigma=self.eta_sigma)

    def expansion(self):
        return ExpansionConfig(n_samples=self.n_samples, n_mco=self.n_mco,
                               knn=self.knn, etol=self.etol,
                               factors=self.factors(), rho0=self.rho0,
                               eta_rho=self.eta_rho)

    def with_overrides(self, overrides):
        if not overrides:
            return self
        known = asdict(self)
        bad = set(overrides) - set(known)
        if bad:
            raise ScenarioFormatError(
                f"params field: unknown keys {sorted(bad)}")
        typed = {}
        for key, value in overrides.items():
            typed[key] = type(known[key])(value)
        return replace(self, **typed)

    def to_dict(self):
        return asdict(self)


@dataclass
class Scenario:
    name: str
    robot: kinematics.RobotModel
    obstacles: tuple
    start: StartConstraint
    goal: GoalConstraint
    param_overrides: dict
    note: str = ""

    def params(self, base=None, extra=None):
        """Effective parameters: defaults <- scenario overrides <- extra."""
        p = (base or PlannerParams()).with_overrides(self.param_overrides)
        return p.with_overrides(extra or {})

    def forward_field(self, params):
        return PotentialField(direction=FORWARD, model=self.robot,
                              obstacles=self.obstacles,
                              collision=params.collision(), goal=self.goal,
                              tol_constraint=params.tol_constraint)

    def backward_field(self, params):
        return PotentialField(direction=BACKWARD, model=self.robot,
                              obstacles=self.obstacles,
                              collision=params.collision(), start=self.start,
                              tol_constraint=params.tol_constraint)


def _need(obj, key, where):
    if key not in obj:
        raise ScenarioFormatError(f"{where}: missing field '{key}'")
    return obj[key]


def _vector(value, where):
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as err:
        raise ScenarioFormatError(f"{where}: not a numeric vector") from err
    if v.ndim != 1:
        raise ScenarioFormatError(f"{where}: expected a flat list of numbers")
    return v


def _robot_from_dict(d):
    kind = _need(d, "kind", "robot")
    jmin = _vector(_need(d, "joint_min", "robot"), "robot.joint_min")
    jmax = _vector(_need(d, "joint_max", "robot"), "robot.joint_max")
    try:
        if kind == kinematics.POINT:
            radius = float(d.get("ccb_radius", kinematics.DEFAULT_CCB_RADIUS))
            return kinematics.RobotModel(kind=kind, joint_min=jmin,
                                         joint_max=jmax,
                                         ccb_layout=((0, 0.0, radius),))
        layout = d.get("ccb_layout")
        if layout is not None:
            layout = tuple((int(l), float(f), float(r)) for l, f, r in layout)
        return kinematics.RobotModel(
            kind=kind, joint_min=jmin, joint_max=jmax,
            link_lengths=_vector(_need(d, "link_lengths", "robot"),
                                 "robot.link_lengths"),
            base=_vector(d.get("base", [0.0, 0.0]), "robot.base"),
            ccb_layout=layout)
    except ValueError as err:
        raise ScenarioFormatError(f"robot: {err}") from err


def _robot_to_dict(robot):
    d = {"kind": robot.kind,
         "joint_min": robot.joint_min.tolist(),
         "joint_max": robot.joint_max.tolist()}
    if robot.kind == kinematics.POINT:
        d["ccb_radius"] = robot.ccb_layout[0][2]
    else:
        d["link_lengths"] = robot.link_lengths.tolist()
        d["base"] = robot.base.tolist()
        d["ccb_layout"] = [list(e) for e in robot.ccb_layout]
    return d


def _obstacle_from_dict(d, i):
    where = f"obstacles[{i}]"
    shape = _need(d, "shape", where)
    try:
        if shape == environment.CIRCLE:
            return environment.circle(_vector(_need(d, "center", where),
                                              f"{where}.center"),
                                      float(_need(d, "radius", where)))
        if shape == environment.BOX:
            return environment.box(_vector(_need(d, "min", where),
                                           f"{where}.min"),
                                   _vector(_need(d, "max", where),
                                           f"{where}.max"))
    except ValueError as err:
        raise ScenarioFormatError(f"{where}: {err}") from err
    raise ScenarioFormatError(f"{where}: unknown shape {shape!r}")


def _obstacle_to_dict(ob):
    if ob.shape == environment.CIRCLE:
        return {"shape": ob.shape, "center": ob.center.tolist(),
                "radius": ob.radius}
    return {"shape": ob.shape, "min": ob.lo.tolist(), "max": ob.hi.tolist()}


def scenario_from_dict(data, name_hint="scenario"):
    name = data.get("name", name_hint)
    robot = _robot_from_dict(_need(data, "robot", name))
    obstacles = tuple(_obstacle_from_dict(d, i)
                      for i, d in enumerate(data.get("obstacles", [])))
    overrides = dict(data.get("params", {}))
    params = PlannerParams().with_overrides(overrides)

    sd = _need(data, "start", name)
    theta0 = _vector(_need(sd, "theta0", "start"), "start.theta0")
    M = np.asarray(sd.get("M", np.eye(theta0.size).tolist()), dtype=float)
    try:
        start = StartConstraint(theta0=theta0, M=M)
    except ValueError as err:
        raise ScenarioFormatError(f"start: {err}") from err

    gd = _need(data, "goal", name)
    x_min = _vector(_need(gd, "x_min", "goal"), "goal.x_min")
    x_max = _vector(_need(gd, "x_max", "goal"), "goal.x_max")
    if x_min.size != robot.task_dim:
        raise ScenarioFormatError(
            f"goal.x_min: expected {robot.task_dim} task coordinates")
    default_angular = [False] * robot.task_dim
    if robot.kind == kinematics.PLANAR_ARM:
        default_angular[2] = True
    angular = np.asarray(gd.get("angular", default_angular), dtype=bool)
    lam = gd.get("lambda")
    if lam is None:
        lam = np.where(angular, params.lambda_angle, params.lambda_position)
    try:
        goal = GoalConstraint(x_min=x_min, x_max=x_max, lam=lam,
                              angular=angular)
    except ValueError as err:
        raise ScenarioFormatError(f"goal: {err}") from err

    scenario = Scenario(name=name, robot=robot, obstacles=obstacles,
                        start=start, goal=goal, param_overrides=overrides,
                        note=data.get("note", ""))
    _validate_start(scenario, params)
    return scenario


def _validate_start(scenario, params):
    if kinematics.joint_limit_cost(scenario.robot, scenario.start.theta0) > 0:
        raise ScenarioFormatError("start.theta0: outside the joint limits")
    coll = environment.waypoint_collision_field(
        scenario.robot, scenario.obstacles, params.collision(),
        scenario.start.theta0)
    if coll > 0:
        raise ScenarioFormatError(
            "start.theta0: start configuration is in collision or inside "
            "the safety buffer")


def scenario_to_dict(scenario):
    return {"name": scenario.name,
            "robot": _robot_to_dict(scenario.robot),
            "obstacles": [_obstacle_to_dict(ob) for ob in scenario.obstacles],
            "start": {"theta0": scenario.start.theta0.tolist(),
                      "M": scenario.start.M.tolist()},
            "goal": {"x_min": scenario.goal.x_min.tolist(),
                     "x_max": scenario.goal.x_max.tolist(),
                     "lambda": scenario.goal.lam.tolist(),
                     "angular": scenario.goal.angular.tolist()},
            "params": dict(scenario.param_overrides),
            "note": scenario.note}


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScenarioFormatError(f"{path}: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioFormatError(
            f"{path}: invalid JSON at line {err.lineno} column {err.colno}: "
            f"{err.msg}") from err
    return scenario_from_dict(data, name_hint=path.stem)


def save_scenario(scenario, path):
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2,
                                     sort_keys=True) + "\n")


def builtin_scenario_dir():
    """Directory holding the shipped 12-scenario suite."""
    return Path(resources.files("bnmco") / "scenarios")


def list_scenarios(directory):
    return sorted(Path(directory).glob("*.json"))
