"""Centerline paths and the quarter-wave meander planner.

A resonator centerline is a chain of straight runs and circular arcs.  The
planner lays out, in local coordinates with the shorted end at the origin
heading +x: the coupler run (parallel to the feedline), a 90-degree bend away
from it, a short drop, a second 90-degree bend, then a serpentine of
horizontal legs joined by half-circle turns, ending in a half-length tail
whose open end carries the termination.  The leg length is solved exactly so
the total centerline length (arcs included) equals the quarter-wave target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cpwkit.cpw import CpwGeometry, LineProperties, quarter_wave_length
from cpwkit.errors import DesignRuleError, LayoutInfeasibleError


@dataclass(frozen=True)
class LineSegment:
    start: tuple[float, float]
    end: tuple[float, float]

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    def translated(self, dx: float, dy: float) -> "LineSegment":
        return LineSegment(
            (self.start[0] + dx, self.start[1] + dy),
            (self.end[0] + dx, self.end[1] + dy),
        )

    def mirrored_y(self) -> "LineSegment":
        return LineSegment(
            (self.start[0], -self.start[1]), (self.end[0], -self.end[1])
        )


@dataclass(frozen=True)
class ArcSegment:
    """Circular arc from theta0 to theta1 (radians); positive sweep is CCW."""

    center: tuple[float, float]
    radius: float
    theta0: float
    theta1: float

    @property
    def sweep(self) -> float:
        return self.theta1 - self.theta0

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    @property
    def start(self) -> tuple[float, float]:
        return (
            self.center[0] + self.radius * math.cos(self.theta0),
            self.center[1] + self.radius * math.sin(self.theta0),
        )

    @property
    def end(self) -> tuple[float, float]:
        return (
            self.center[0] + self.radius * math.cos(self.theta1),
            self.center[1] + self.radius * math.sin(self.theta1),
        )

    def translated(self, dx: float, dy: float) -> "ArcSegment":
        return ArcSegment(
            (self.center[0] + dx, self.center[1] + dy),
            self.radius,
            self.theta0,
            self.theta1,
        )

    def mirrored_y(self) -> "ArcSegment":
        return ArcSegment(
            (self.center[0], -self.center[1]), self.radius, -self.theta0, -self.theta1
        )


Segment = LineSegment | ArcSegment


@dataclass(frozen=True)
class CenterlinePath:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        for a, b in zip(self.segments, self.segments[1:]):
            ea, sb = a.end, b.start
            if math.hypot(ea[0] - sb[0], ea[1] - sb[1]) > 1e-6:
                raise ValueError(f"discontinuous path: {ea} -> {sb}")

    @property
    def length(self) -> float:
        return sum(seg.length for seg in self.segments)

    @property
    def start(self) -> tuple[float, float]:
        return self.segments[0].start

    @property
    def end(self) -> tuple[float, float]:
        return self.segments[-1].end

    def translated(self, dx: float, dy: float) -> "CenterlinePath":
        return CenterlinePath(tuple(s.translated(dx, dy) for s in self.segments))

    def mirrored_y(self) -> "CenterlinePath":
        return CenterlinePath(tuple(s.mirrored_y() for s in self.segments))

    def bounding_box(self, margin: float = 0.0):
        xs, ys = [], []
        for seg in self.segments:
            if isinstance(seg, LineSegment):
                xs += [seg.start[0], seg.end[0]]
                ys += [seg.start[1], seg.end[1]]
            else:
                # conservative: full circle box of the arc
                xs += [seg.center[0] - seg.radius, seg.center[0] + seg.radius]
                ys += [seg.center[1] - seg.radius, seg.center[1] + seg.radius]
        return (
            min(xs) - margin,
            min(ys) - margin,
            max(xs) + margin,
            max(ys) + margin,
        )


class PathBuilder:
    """Turtle-style builder keeping position and heading."""

    def __init__(self, start=(0.0, 0.0), heading_rad=0.0):
        self.pos = (float(start[0]), float(start[1]))
        self.heading = float(heading_rad)
        self.segments: list[Segment] = []

    def forward(self, distance: float) -> "PathBuilder":
        if distance < 0:
            raise ValueError("cannot move backward")
        if distance == 0:
            return self
        end = (
            self.pos[0] + distance * math.cos(self.heading),
            self.pos[1] + distance * math.sin(self.heading),
        )
        self.segments.append(LineSegment(self.pos, end))
        self.pos = end
        return self

    def turn(self, angle_rad: float, radius: float) -> "PathBuilder":
        """Arc turn: positive angle turns left (CCW), negative turns right."""
        if radius <= 0:
            raise ValueError("turn radius must be positive")
        if angle_rad == 0:
            return self
        side = 1.0 if angle_rad > 0 else -1.0
        cx = self.pos[0] + radius * math.cos(self.heading + side * math.pi / 2)
        cy = self.pos[1] + radius * math.sin(self.heading + side * math.pi / 2)
        theta0 = self.heading - side * math.pi / 2
        theta1 = theta0 + angle_rad
        self.segments.append(ArcSegment((cx, cy), radius, theta0, theta1))
        self.heading += angle_rad
        self.pos = (
            cx + radius * math.cos(theta1),
            cy + radius * math.sin(theta1),
        )
        return self

    def path(self) -> CenterlinePath:
        return CenterlinePath(tuple(self.segments))


@dataclass(frozen=True)
class MeanderConstraints:
    """Envelope and bend parameters for the serpentine body."""

    envelope_width_um: float = 480.0
    pitch_um: float = 120.0
    bend_radius_um: float = 60.0
    entry_drop_um: float = 40.0
    max_height_um: float = 3200.0
    tail_min_um: float = 6.0

    def __post_init__(self):
        if self.pitch_um < 2 * 1.0:
            raise DesignRuleError("meander pitch too small")
        if self.envelope_width_um <= self.pitch_um:
            raise DesignRuleError("meander envelope narrower than one pitch")

    @property
    def turn_radius_um(self) -> float:
        return self.pitch_um / 2.0


@dataclass(frozen=True)
class ResonatorDesign:
    """One planned quarter-wave resonator, in local coordinates.

    The path starts at the shorted end (origin, heading +x along the
    feedline), runs the coupler, then meanders downward; the open end is the
    path end.  Rendered length equals quarter_wave_length(target_f0) to
    floating-point accuracy, far inside the 0.01 percent contract.
    """

    label: str
    target_f0_ghz: float
    coupler_length_um: float
    cpw: CpwGeometry
    meander_pitch_um: float
    meander_width_um: float
    fillet_radius_um: float
    feedline_offset_gap_um: float
    path: CenterlinePath = field(repr=False)
    target_length_um: float
    n_legs: int
    height_um: float
    leg_length_um: float = 0.0
    first_leg_y_local_um: float = 0.0
    meander_x_center_local_um: float = 0.0

    def __post_init__(self):
        if self.fillet_radius_um <= 0:
            raise DesignRuleError("resonator ends must be filleted (radius > 0)")
        if self.fillet_radius_um > self.cpw.gap_um / 2.0 + 1e-12:
            raise DesignRuleError(
                f"fillet radius {self.fillet_radius_um} um exceeds half the gap"
            )
        err = abs(self.path.length - self.target_length_um) / self.target_length_um
        if err > 1e-4:
            raise LayoutInfeasibleError(
                f"{self.label}: planned centerline misses target length by "
                f"{err * 100:.4f}% (> 0.01%)"
            )


def plan_resonator(
    label: str,
    target_f0_ghz: float,
    coupler_length_um: float,
    cpw: CpwGeometry,
    props: LineProperties,
    constraints: MeanderConstraints = MeanderConstraints(),
    fillet_radius_um: float = 1.5,
    feedline_offset_gap_um: float = 6.0,
) -> ResonatorDesign:
    """Plan one resonator: exact-length coupler + serpentine centerline."""
    target_um = quarter_wave_length(target_f0_ghz, props) * 1e3
    r_bend = constraints.bend_radius_um
    r_turn = constraints.turn_radius_um
    pitch = constraints.pitch_um
    drop = constraints.entry_drop_um
    span = cpw.span_um

    if r_bend <= span / 2 or r_turn <= span / 2:
        raise DesignRuleError(
            f"{label}: bend radii must exceed half the CPW span ({span / 2} um)"
        )
    if pitch < span + cpw.min_feature_um:
        raise DesignRuleError(
            f"{label}: meander pitch {pitch} um leaves less than the minimum "
            f"feature between adjacent legs"
        )
    if coupler_length_um <= 0:
        raise DesignRuleError(f"{label}: coupler length must be positive")

    fixed = coupler_length_um + math.pi * r_bend + drop
    if target_um < fixed + constraints.tail_min_um:
        raise LayoutInfeasibleError(
            f"{label}: target length {target_um:.1f} um is shorter than the "
            f"coupler plus minimum bend allowance ({fixed + constraints.tail_min_um:.1f} um)"
        )
    l_rem = target_um - fixed

    w_max = constraints.envelope_width_um - 2.0 * r_turn
    turn_len = math.pi * r_turn
    if l_rem <= w_max:
        n_legs = 0
        leg = 0.0
        tail = l_rem
    else:
        n_min = max(1, math.ceil((l_rem - 0.5 * w_max) / (w_max + turn_len)))
        n_legs = n_min
        leg = (l_rem - n_legs * turn_len) / (n_legs + 0.5)
        if leg <= constraints.tail_min_um:
            raise LayoutInfeasibleError(
                f"{label}: meander legs degenerate ({leg:.2f} um); envelope "
                f"and pitch cannot absorb the remaining length"
            )
        tail = 0.5 * leg

    height = 2.0 * r_bend + drop + n_legs * pitch + span / 2.0
    if height > constraints.max_height_um:
        raise LayoutInfeasibleError(
            f"{label}: meander height {height:.0f} um exceeds the "
            f"{constraints.max_height_um:.0f} um envelope"
        )

    b = PathBuilder(start=(0.0, 0.0), heading_rad=0.0)
    b.forward(coupler_length_um)
    b.turn(-math.pi / 2, r_bend)  # away from the feedline (downward)
    b.forward(drop)
    b.turn(-math.pi / 2, r_bend)  # into the first leg, heading -x
    for k in range(n_legs):
        b.forward(leg)
        sign = 1.0 if k % 2 == 0 else -1.0
        b.turn(sign * math.pi, r_turn)
    b.forward(tail)
    path = b.path()

    first_leg_y = -(2.0 * r_bend + drop)
    row_width = leg if n_legs else tail
    return ResonatorDesign(
        label=label,
        target_f0_ghz=target_f0_ghz,
        coupler_length_um=coupler_length_um,
        cpw=cpw,
        meander_pitch_um=pitch,
        meander_width_um=constraints.envelope_width_um,
        fillet_radius_um=fillet_radius_um,
        feedline_offset_gap_um=feedline_offset_gap_um,
        path=path,
        target_length_um=target_um,
        n_legs=n_legs,
        height_um=height,
        leg_length_um=row_width,
        first_leg_y_local_um=first_leg_y,
        meander_x_center_local_um=coupler_length_um - row_width / 2.0,
    )
