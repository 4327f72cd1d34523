"""Coupling layouts: where atoms attach to waveguides, and how in time.

A ``CouplingPoint`` ties one atom of one superatom to one lattice site with a
complex amplitude g * exp(i*phase).  By convention, when a layout carries a
phase difference it is placed on the *rightmost* point of each superatom;
the chirality calibration in the tests depends on this placement.

Time modulation follows the pitch-catch envelope

    ramp(s) = g_max * exp(beta*s) / (2 - exp(beta*s))   for s < 0
    ramp(s) = g_max                                     for s >= 0,

truncated to exactly zero once it falls below epsilon*g_max (population
error from the truncation is O(epsilon^2)).  An emit schedule evaluates
ramp(t - t_ref), completing at t_ref; its time-reversed absorb partner
evaluates ramp(t_ref' - t) and starts ramping down at t_ref' = t_ref + tau,
where tau is the field propagation time between emitter and receiver:

    tau = |midpoint(receiver sites) - midpoint(emitter sites)|
          / group_velocity(mode frequency).

Evaluating an emit/absorb pair at times mirrored about t_ref + tau/2 gives
identical values by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Optional

from .lattice import ChainSpec, group_velocity


@dataclass(frozen=True)
class CouplingPoint:
    """One atom-to-site attachment with complex amplitude and optional schedule."""

    superatom: str
    atom: int
    chain: str
    site: int
    amplitude: float
    phase: float = 0.0
    schedule: Optional[str] = None

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0 (put signs into the phase)")

    @property
    def g(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class Schedule:
    """Time profile of a coupling amplitude: constant, emit-ramp or absorb-ramp."""

    id: str
    kind: str = "constant"
    g_max: float = 1.0
    beta: float = 0.0
    t_ref: float = 0.0
    epsilon: float = 1e-3
    partner: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("constant", "emit-ramp", "absorb-ramp"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.g_max <= 0:
            raise ValueError("g_max must be > 0")
        if self.kind != "constant":
            if self.beta <= 0:
                raise ValueError("ramps need beta > 0")
            if not 0.0 < self.epsilon < 1.0:
                raise ValueError("epsilon must be in (0, 1)")

    @classmethod
    def constant(cls, id: str, g_max: float = 1.0) -> "Schedule":
        return cls(id, "constant", g_max)

    @classmethod
    def emit(cls, id: str, g_max: float, beta: float, t_ref: float = 0.0,
             epsilon: float = 1e-3) -> "Schedule":
        return cls(id, "emit-ramp", g_max, beta, t_ref, epsilon)

    @classmethod
    def absorb_from(cls, id: str, emit: "Schedule", tau: float) -> "Schedule":
        """Exact time-reversal of an emit schedule, delayed by tau."""
        if emit.kind != "emit-ramp":
            raise ValueError("absorb schedules mirror an emit-ramp partner")
        return cls(id, "absorb-ramp", emit.g_max, emit.beta, emit.t_ref + tau,
                   emit.epsilon, partner=emit.id)

    def ramp_start(self) -> float:
        """Signed ramp coordinate below which the envelope is clamped to 0."""
        if self.kind == "constant":
            return -math.inf
        return math.log(2.0 * self.epsilon / (1.0 + self.epsilon)) / self.beta

    def start_time(self) -> float:
        """Earliest time with a nonzero value (emit); -inf otherwise."""
        if self.kind == "emit-ramp":
            return self.t_ref + self.ramp_start()
        return -math.inf

    def end_time(self) -> float:
        """Time beyond which the value is exactly zero (absorb); +inf otherwise."""
        if self.kind == "absorb-ramp":
            return self.t_ref - self.ramp_start()
        return math.inf


def _ramp(s: float, beta: float, s_min: float) -> float:
    if s >= 0.0:
        return 1.0
    if s < s_min:
        return 0.0
    e = math.exp(beta * s)
    return e / (2.0 - e)


def schedule_scale(sched: Schedule, t: float) -> float:
    """Dimensionless envelope value(t)/g_max in [0, 1]."""
    if sched.kind == "constant":
        return 1.0
    s_min = sched.ramp_start()
    if sched.kind == "emit-ramp":
        return _ramp(t - sched.t_ref, sched.beta, s_min)
    return _ramp(sched.t_ref - t, sched.beta, s_min)


def schedule_value(sched: Schedule, t: float) -> float:
    """Coupling amplitude g(t) in [0, g_max]."""
    return sched.g_max * schedule_scale(sched, t)


def propagation_time(chain: ChainSpec, mode_freq: float, emitter_points,
                     receiver_points) -> float:
    """Midpoint-to-midpoint flight time at the mode's group velocity."""
    em = sum(p.site for p in emitter_points) / len(emitter_points)
    rc = sum(p.site for p in receiver_points) / len(receiver_points)
    return abs(rc - em) / group_velocity(chain, mode_freq)


def classify_topology(points_a, points_b) -> str:
    """Relative arrangement of two two-point layouts on one waveguide.

    Returns 'braided' (interleaved), 'separate' (disjoint intervals),
    'nested' (one interval inside the other) or 'overlapping' (shared sites).
    """
    if len(points_a) != 2 or len(points_b) != 2:
        raise ValueError("topology classification needs exactly two points per unit")
    chains = {p.chain for p in points_a} | {p.chain for p in points_b}
    if len(chains) != 1:
        raise ValueError("both units must couple to the same waveguide")
    a = sorted(p.site for p in points_a)
    b = sorted(p.site for p in points_b)
    if set(a) & set(b):
        return "overlapping"
    if a[1] < b[0] or b[1] < a[0]:
        return "separate"
    if (a[0] < b[0] and b[1] < a[1]) or (b[0] < a[0] and a[1] < b[1]):
        return "nested"
    return "braided"
