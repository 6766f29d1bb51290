"""SVG scene rendering: obstacles, robot poses, end-effector trace, and an
optional net overlay (node means as importance-scaled circles, layer edges
as arrows)."""

import xml.etree.ElementTree as ET

import numpy as np

from . import environment, kinematics

_MARGIN = 0.25
_SIZE = 640.0


def _world_bounds(scenario, trajectory=None):
    pts = []
    robot = scenario.robot
    if robot.kind == kinematics.POINT:
        pts.append(robot.joint_min)
        pts.append(robot.joint_max)
    else:
        reach = robot.link_lengths.sum()
        pts.append(robot.base - reach)
        pts.append(robot.base + reach)
    for ob in scenario.obstacles:
        if ob.shape == environment.CIRCLE:
            pts.append(ob.center - ob.radius)
            pts.append(ob.center + ob.radius)
        else:
            pts.append(ob.lo)
            pts.append(ob.hi)
    if trajectory is not None:
        X = kinematics.forward_kinematics_batch(robot, trajectory)
        pts.append(X[:, :2].min(axis=0))
        pts.append(X[:, :2].max(axis=0))
    pts = np.asarray(pts)
    lo = pts.min(axis=0) - _MARGIN
    hi = pts.max(axis=0) + _MARGIN
    return lo, hi


class _Canvas:
    def __init__(self, lo, hi):
        self.lo = lo
        span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
        self.scale = _SIZE / span
        self.height = (hi[1] - lo[1]) * self.scale
        self.width = (hi[0] - lo[0]) * self.scale
        self.svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                              width=f"{self.width:.0f}",
                              height=f"{self.height:.0f}")
        ET.SubElement(self.svg, "rect", x="0", y="0",
                      width=f"{self.width:.0f}", height=f"{self.height:.0f}",
                      fill="white")

    def to_px(self, p):
        x = (p[0] - self.lo[0]) * self.scale
        y = self.height - (p[1] - self.lo[1]) * self.scale
        return x, y

    def circle(self, center, radius_m, **style):
        x, y = self.to_px(center)
        ET.SubElement(self.svg, "circle", cx=f"{x:.2f}", cy=f"{y:.2f}",
                      r=f"{radius_m * self.scale:.2f}", **style)

    def rect(self, lo, hi, **style):
        x0, y1 = self.to_px(lo)
        x1, y0 = self.to_px(hi)
        ET.SubElement(self.svg, "rect", x=f"{x0:.2f}", y=f"{y0:.2f}",
                      width=f"{x1 - x0:.2f}", height=f"{y1 - y0:.2f}",
                      **style)

    def polyline(self, points_m, **style):
        pts = " ".join(f"{x:.2f},{y:.2f}"
                       for x, y in (self.to_px(p) for p in points_m))
        ET.SubElement(self.svg, "polyline", points=pts, fill="none", **style)

    def line(self, a, b, **style):
        x0, y0 = self.to_px(a)
        x1, y1 = self.to_px(b)
        ET.SubElement(self.svg, "line", x1=f"{x0:.2f}", y1=f"{y0:.2f}",
                      x2=f"{x1:.2f}", y2=f"{y1:.2f}", **style)


def _draw_robot(canvas, robot, q, color):
    if robot.kind == kinematics.POINT:
        canvas.circle(q, robot.ccb_layout[0][2], fill=color,
                      stroke="none", opacity="0.9")
        return
    Q = np.asarray(q, dtype=float)[None, :]
    angles = np.cumsum(Q[0])
    steps = robot.link_lengths[:, None] * np.column_stack(
        [np.cos(angles), np.sin(angles)])
    joints = np.vstack([robot.base, robot.base + np.cumsum(steps, axis=0)])
    canvas.polyline(joints, stroke=color, **{"stroke-width": "3"})
    for center, radius in kinematics.ccb_positions(robot, Q[0]):
        canvas.circle(center, radius, fill=color, stroke="none",
                      opacity="0.25")


def _draw_net(canvas, robot, net):
    positions = {}
    for node in net.nodes:
        x = kinematics.forward_kinematics(robot, node.component.mu)[:2]
        positions[node.id] = x
    for edge in net.edges:
        a, b = positions[edge.from_id], positions[edge.to_id]
        canvas.line(a, b, stroke="#888888", **{"stroke-width": "1",
                                               "marker-end": "url(#arrow)"})
    for node in net.nodes:
        r = 0.01 + 0.05 * float(node.importance)
        canvas.circle(positions[node.id], r, fill="#6060c0", stroke="none",
                      opacity="0.6")


def render_svg(scenario, trajectory=None, net=None, out_path=None):
    """Render the scene; returns the SVG text and optionally writes it."""
    lo, hi = _world_bounds(scenario, trajectory)
    canvas = _Canvas(lo, hi)
    defs = ET.SubElement(canvas.svg, "defs")
    marker = ET.SubElement(defs, "marker", id="arrow", viewBox="0 0 10 10",
                           refX="9", refY="5", markerWidth="6",
                           markerHeight="6", orient="auto-start-reverse")
    ET.SubElement(marker, "path", d="M 0 0 L 10 5 L 0 10 z", fill="#888888")

    for ob in scenario.obstacles:
        if ob.shape == environment.CIRCLE:
            canvas.circle(ob.center, ob.radius, fill="#b0b0b0", stroke="#707070")
        else:
            canvas.rect(ob.lo, ob.hi, fill="#b0b0b0", stroke="#707070")
    if net is not None:
        _draw_net(canvas, scenario.robot, net)
    _draw_robot(canvas, scenario.robot, scenario.start.theta0, "#3060d0")
    if trajectory is not None:
        traj = np.atleast_2d(np.asarray(trajectory, dtype=float))
        if traj.shape[1] != scenario.robot.dof:
            raise ValueError(
                f"trajectory has dimension {traj.shape[1]}, robot expects "
                f"{scenario.robot.dof}")
        trace = kinematics.forward_kinematics_batch(scenario.robot, traj)[:, :2]
        canvas.polyline(trace, stroke="#d03030", **{"stroke-width": "2"})
        _draw_robot(canvas, scenario.robot, traj[-1], "#30a050")
    text = ET.tostring(canvas.svg, encoding="unicode")
    if out_path is not None:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    return text
