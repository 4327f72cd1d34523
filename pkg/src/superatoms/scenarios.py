"""Canned experiments reproducing the headline protocols.

Each scenario builds a system from caption-level parameters, propagates it,
computes named metrics and evaluates them against acceptance thresholds.
Every report echoes its full parameter set, so ``run_scenario(report.scenario,
report.params)`` reproduces all metrics bit-identically.

Scenario catalogue (all energies in units of the reference coupling g, times
in 1/g):

    s1  dark entangled states of a pair superatom (two-point layout);
        darkness at separation 4, interference-enhanced decay at 2
    s2  decoherence-free transfer / swap between two braided pair superatoms
    s3  injection of the left topological edge state of a dimerized cluster
        from a braided two-point emitter
    s4  chiral pitch-catch transfer between separate superatoms with
        phase-engineered couplings and time-reversed ramps
    s5  remote W-class entanglement: a dressed superposition splits into
        counter-propagating packets caught by two receivers
    s6  entanglement lattice: effective hopping between dressed units,
        ballistic spreading and gradient-induced revival
    s7  dual-waveguide routing: a trimer's dressed states decay selectively
        into the waveguide whose band contains them
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math
from typing import Optional

import numpy as np

from .dynamics import (
    AssembledSystem,
    atom_population,
    atom_state,
    coherence,
    density_matrix_atoms,
    directional_fractions,
    dressed_state,
    fidelity,
    field_intensity,
    mode_overlap,
    propagate,
)
from .errors import ConfigurationError
from .lattice import Boundary, ChainSpec, default_absorber, in_band
from .layout import CouplingPoint, Schedule, classify_topology, propagation_time
from .superatom import (
    SuperatomSpec,
    dressed_modes,
    effective_decay,
    effective_unit_coupling,
    ssh_edge_states,
)

SQRT2 = math.sqrt(2.0)


@dataclass
class Check:
    """One acceptance comparison: value OP threshold."""

    name: str
    value: float
    threshold: float
    op: str           # '>=', '<=', '>', '<'
    passed: bool


@dataclass
class ScenarioReport:
    scenario: str
    params: dict
    series: dict = field(default_factory=dict)     # name -> {"times": [...], "values": [...]}
    profiles: dict = field(default_factory=dict)   # name -> {"sites": [...], "values": [...]}
    metrics: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "params": self.params,
            "metrics": self.metrics,
            "checks": [
                {"name": c.name, "value": c.value, "threshold": c.threshold,
                 "op": c.op, "passed": c.passed}
                for c in self.checks
            ],
            "series": self.series,
            "profiles": self.profiles,
        }


_OPS = {
    ">=": lambda v, t: v >= t,
    "<=": lambda v, t: v <= t,
    ">": lambda v, t: v > t,
    "<": lambda v, t: v < t,
}


def _check(report: ScenarioReport, name: str, value: float, op: str, threshold: float):
    report.checks.append(Check(name, float(value), float(threshold), op,
                               bool(_OPS[op](value, threshold))))


def _series(traj, values) -> dict:
    return {"times": [float(t) for t in traj.times],
            "values": [float(v) for v in values]}


def fit_exponential_decay(times, populations, upper=0.8, lower=0.02) -> float:
    """Decay rate from a linear fit of log(population) inside a window."""
    t = np.asarray(times, dtype=float)
    p = np.asarray(populations, dtype=float)
    mask = (p < upper) & (p > lower)
    if mask.sum() < 4:
        raise ValueError("not enough samples in the fit window")
    slope, _ = np.polyfit(t[mask], np.log(p[mask]), 1)
    return float(-slope)


def _merge_params(defaults: dict, overrides: dict, scenario: str) -> dict:
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ConfigurationError(
            f"unknown parameter(s) for {scenario}: {sorted(unknown)}; "
            f"known: {sorted(defaults)}"
        )
    merged = dict(defaults)
    merged.update(overrides)
    return merged


# ---------------------------------------------------------------------------
# s1: dark entangled states
# ---------------------------------------------------------------------------

S1_DEFAULTS = {
    "dt": None,
    "separation": 4,          # distance between the two coupling points
    "xi": 15.0,               # chain hopping over g
    "coupling_j": None,       # atom-atom exchange; None -> sqrt(2)*xi
    "g": 1.0,
    "t_end": 100.0,
    "num_samples": 801,
    "chain_sites": 801,
    "absorber_width": 100,
    "single_atom": False,     # control: drop atom 2 (bare two-point emitter)
    "dark_threshold": 0.98,
    "rate_tolerance": 0.10,
}


def run_s1_dark_states(**overrides) -> ScenarioReport:
    """Fidelity of the symmetric dressed state of a two-point pair superatom.

    Dark at separation 4 (both dressed phases are odd multiples of pi),
    rapidly decaying at separation 2; the fitted rate of the bright case is
    compared against the interference formula.
    """
    p = _merge_params(S1_DEFAULTS, overrides, "s1")
    xi = p["xi"]
    J = SQRT2 * xi if p["coupling_j"] is None else p["coupling_j"]
    N = int(p["separation"])

    half = p["chain_sites"] // 2
    chain = ChainSpec("W", p["chain_sites"], xi, origin=-half,
                      boundary=default_absorber(xi, p["absorber_width"]))
    if p["single_atom"]:
        gsa = SuperatomSpec.single("A", 0.0)
        init = {("A", 0): 1.0}
    else:
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, J)
        init = {("A", 0): 1 / SQRT2, ("A", 1): 1 / SQRT2}
    points = [
        CouplingPoint("A", 0, "W", 0, p["g"]),
        CouplingPoint("A", 0, "W", N, p["g"]),
    ]
    system = AssembledSystem([chain], [gsa], points)

    modes = dressed_modes(gsa)
    plus = modes[-1]                       # highest mode: symmetric combination
    gamma_pred = effective_decay(plus, chain, points)

    traj = propagate(system, atom_state(system, init), 0.0, p["t_end"],
                     dt=p["dt"], num_samples=p["num_samples"])
    fids = [fidelity(traj.state(i), init) for i in range(len(traj))]
    plus_pop = [abs(mode_overlap(traj.state(i), "A", plus.vector)) ** 2
                for i in range(len(traj))]

    report = ScenarioReport("s1", p)
    report.series["fidelity"] = _series(traj, fids)
    report.series["plus_population"] = _series(traj, plus_pop)
    report.series["norm"] = _series(traj, traj.norms)
    report.metrics["min_fidelity"] = float(np.min(fids))
    report.metrics["predicted_decay"] = gamma_pred

    if gamma_pred * p["t_end"] > 2.0:
        rate = fit_exponential_decay(traj.times, plus_pop)
        report.metrics["fitted_decay"] = rate
        rel = abs(rate - gamma_pred) / gamma_pred
        report.metrics["decay_rate_error"] = rel
        _check(report, "decay_rate_matches_interference_formula", rel, "<=",
               p["rate_tolerance"])
    else:
        _check(report, "dark_state_fidelity", report.metrics["min_fidelity"],
               ">=", p["dark_threshold"])
    return report


# ---------------------------------------------------------------------------
# s2: decoherence-free transfer and swap between braided pairs
# ---------------------------------------------------------------------------

S2_DEFAULTS = {
    "dt": None,
    "detuning_over_j": 0.0,   # receiver detuning Delta / J (0 -> transfer, 2 -> swap)
    "xi": 15.0,
    "g": 1.0,
    "horizon_factor": 1.5,    # in units of the analytic transfer half-period
    "num_samples": 1201,
    "chain_sites": 801,
    "absorber_width": 100,
    "fidelity_threshold": 0.95,
    "half_period_tolerance": 0.15,
}


def run_s2_df_transfer(**overrides) -> ScenarioReport:
    """Bath-mediated transfer between dark modes of two braided pairs.

    Emitter points {0, 4}, receiver points {1, 5} (interleaved).  At zero
    detuning the symmetric state hops to the receiver's symmetric state; at
    detuning 2J the emitter's upper mode is resonant with the receiver's
    lower mode and the entangled state is swapped to its antisymmetric
    partner, flipping the sign of the receiver coherence.
    """
    p = _merge_params(S2_DEFAULTS, overrides, "s2")
    xi, g = p["xi"], p["g"]
    J = SQRT2 * xi
    delta = p["detuning_over_j"] * J

    half = p["chain_sites"] // 2
    chain = ChainSpec("W", p["chain_sites"], xi, origin=-half,
                      boundary=default_absorber(xi, p["absorber_width"]))
    gsa_a = SuperatomSpec.pair("A", 0.0, 0.0, J)
    gsa_b = SuperatomSpec.pair("B", delta, delta, J)
    pts_a = [CouplingPoint("A", 0, "W", 0, g), CouplingPoint("A", 0, "W", 4, g)]
    pts_b = [CouplingPoint("B", 0, "W", 1, g), CouplingPoint("B", 0, "W", 5, g)]
    assert classify_topology(pts_a, pts_b) == "braided"
    system = AssembledSystem([chain], [gsa_a, gsa_b], pts_a + pts_b)

    plus_a = dressed_modes(gsa_a)[-1]
    modes_b = dressed_modes(gsa_b)
    # the receiver mode resonant with the emitter's upper mode
    target_mode = min(modes_b, key=lambda m: abs(m.frequency - plus_a.frequency))
    kappa = effective_unit_coupling(plus_a, pts_a, target_mode, pts_b, chain)
    half_period = math.pi / (2.0 * abs(kappa))

    t_end = p["horizon_factor"] * half_period
    init = {("A", 0): 1 / SQRT2, ("A", 1): 1 / SQRT2}
    traj = propagate(system, atom_state(system, init), 0.0, t_end,
                     dt=p["dt"], num_samples=p["num_samples"])

    sym = {("B", 0): 1 / SQRT2, ("B", 1): 1 / SQRT2}
    anti = {("B", 0): 1 / SQRT2, ("B", 1): -1 / SQRT2}
    f_sym = [fidelity(traj.state(i), sym) for i in range(len(traj))]
    f_anti = [fidelity(traj.state(i), anti) for i in range(len(traj))]
    target_is_anti = target_mode.vector[1] < 0
    f_target = f_anti if target_is_anti else f_sym

    i_peak = int(np.argmax(f_target))
    coh = coherence(traj.state(i_peak), ("B", 0), ("B", 1))

    report = ScenarioReport("s2", p)
    report.series["fidelity_symmetric"] = _series(traj, f_sym)
    report.series["fidelity_antisymmetric"] = _series(traj, f_anti)
    report.series["re_coherence_receiver"] = _series(
        traj, [coherence(traj.state(i), ("B", 0), ("B", 1)).real
               for i in range(len(traj))])
    report.series["re_coherence_emitter"] = _series(
        traj, [coherence(traj.state(i), ("A", 0), ("A", 1)).real
               for i in range(len(traj))])
    report.metrics["effective_coupling_real"] = kappa.real
    report.metrics["effective_coupling_imag"] = kappa.imag
    report.metrics["predicted_half_period"] = half_period
    report.metrics["peak_fidelity"] = float(f_target[i_peak])
    report.metrics["peak_time"] = float(traj.times[i_peak])
    report.metrics["target_is_antisymmetric"] = float(target_is_anti)
    report.metrics["receiver_coherence_at_peak"] = float(coh.real)

    _check(report, "peak_transfer_fidelity", f_target[i_peak], ">=",
           p["fidelity_threshold"])
    rel = abs(traj.times[i_peak] - half_period) / half_period
    report.metrics["half_period_error"] = float(rel)
    _check(report, "half_period_matches_effective_coupling", rel, "<=",
           p["half_period_tolerance"])
    return report


# ---------------------------------------------------------------------------
# s3: topological edge-state injection
# ---------------------------------------------------------------------------

S3_DEFAULTS = {
    "dt": None,
    "cells": 6,
    "j1": 0.5,
    "j2": 1.5,
    "xi": 15.0,
    "g": 1.0,
    "horizon_factor": 1.5,
    "num_samples": 801,
    "chain_sites": 801,
    "absorber_width": 100,
    "fidelity_threshold": 0.90,
    "contamination_threshold": 0.05,
}


def run_s3_ssh_injection(**overrides) -> ScenarioReport:
    """Swap a bare emitter excitation into the left edge mode of a dimerized
    cluster braided with it.

    The cluster couples through its leftmost atom, so only the left edge
    state (which lives on the odd sublattice) talks to the waveguide; the
    right edge state and the even sublattice stay dark.
    """
    p = _merge_params(S3_DEFAULTS, overrides, "s3")
    xi, g = p["xi"], p["g"]

    half = p["chain_sites"] // 2
    chain = ChainSpec("W", p["chain_sites"], xi, origin=-half,
                      boundary=default_absorber(xi, p["absorber_width"]))
    emitter = SuperatomSpec.single("A", 0.0)
    cluster = SuperatomSpec.ssh("S", p["cells"], p["j1"], p["j2"])
    pts_a = [CouplingPoint("A", 0, "W", 0, g), CouplingPoint("A", 0, "W", 2, g)]
    pts_s = [CouplingPoint("S", 0, "W", 1, g), CouplingPoint("S", 0, "W", 3, g)]
    assert classify_topology(pts_a, pts_s) == "braided"
    system = AssembledSystem([chain], [emitter, cluster], pts_a + pts_s)

    left_edge, right_edge = ssh_edge_states(cluster)
    emitter_mode = dressed_modes(emitter)[0]
    # the projected edge mode sits within the near-zero pair; treat it as
    # exactly resonant with the emitter for the coupling estimate
    kappa = effective_unit_coupling(
        emitter_mode, pts_a,
        replace(left_edge, frequency=emitter_mode.frequency), pts_s, chain)
    half_period = math.pi / (2.0 * abs(kappa))
    t_end = p["horizon_factor"] * half_period

    traj = propagate(system, atom_state(system, {("A", 0): 1.0}), 0.0, t_end,
                     dt=p["dt"], num_samples=p["num_samples"])

    f_edge, q_pop, r_overlap = [], [], []
    for i in range(len(traj)):
        st = traj.state(i)
        f_edge.append(abs(mode_overlap(st, "S", left_edge.vector)))
        block = st.vector[system.basis.atom_index("S", 0):
                          system.basis.atom_index("S", 0) + cluster.num_atoms]
        q_pop.append(float(np.sum(np.abs(block[1::2]) ** 2)))
        r_overlap.append(abs(mode_overlap(st, "S", right_edge.vector)) ** 2)

    i_peak = int(np.argmax(f_edge))
    report = ScenarioReport("s3", p)
    report.series["edge_fidelity"] = _series(traj, f_edge)
    report.series["even_sublattice_population"] = _series(traj, q_pop)
    report.series["emitter_population"] = _series(
        traj, [atom_population(traj.state(i), "A") for i in range(len(traj))])
    st_peak = traj.state(i_peak)
    block = np.abs(st_peak.vector[system.basis.atom_index("S", 0):
                                  system.basis.atom_index("S", 0) + cluster.num_atoms]) ** 2
    report.profiles["cluster_population_at_peak"] = {
        "sites": list(range(cluster.num_atoms)), "values": [float(x) for x in block]}
    report.metrics["effective_coupling"] = abs(kappa)
    report.metrics["edge_pair_splitting"] = abs(right_edge.frequency - left_edge.frequency)
    report.metrics["peak_edge_fidelity"] = float(f_edge[i_peak])
    report.metrics["peak_time"] = float(traj.times[i_peak])
    report.metrics["even_sublattice_at_peak"] = float(q_pop[i_peak])
    report.metrics["right_edge_overlap_at_peak"] = float(r_overlap[i_peak])

    _check(report, "peak_edge_fidelity", f_edge[i_peak], ">=", p["fidelity_threshold"])
    _check(report, "even_sublattice_contamination", q_pop[i_peak], "<=",
           p["contamination_threshold"])
    _check(report, "right_edge_contamination", r_overlap[i_peak], "<=",
           p["contamination_threshold"])
    return report


# ---------------------------------------------------------------------------
# s4 / s5: chiral pitch-catch transfer and W-state distribution
# ---------------------------------------------------------------------------

S4_DEFAULTS = {
    "dt": None,
    "xi": 12.5,               # hopping over g_max
    "separation": 2,
    "receiver_sites": (100, 102),
    "phase": math.pi / 2.0,
    "beta": 0.045,
    "epsilon": 1e-3,
    "g_max": 1.0,
    "settle": 10.0,
    "num_samples": 1201,
    "buffer": 260,
    "absorber_width": 120,
    "fidelity_threshold": 0.99,
    "wrong_direction_threshold": 0.01,
    "tau_tolerance": 1e-3,
    "tau_reference": 5.657,
}


def _pitch_catch_system(p, with_left_receiver: bool):
    """Emitter at {0, N} plus receiver(s) with time-reversed ramps."""
    xi, g_max, N = p["xi"], p["g_max"], int(p["separation"])
    J = SQRT2 * xi
    phase = p["phase"]

    r0, r1 = (int(s) for s in p["receiver_sites"])
    gsa_a = SuperatomSpec.pair("A", 0.0, 0.0, J)
    gsa_b = SuperatomSpec.pair("B", 0.0, 0.0, J)
    superatoms = [gsa_a, gsa_b]

    emit = Schedule.emit("emit", g_max, p["beta"], t_ref=0.0, epsilon=p["epsilon"])
    pts_a = [CouplingPoint("A", 0, "W", 0, g_max, 0.0, "emit"),
             CouplingPoint("A", 0, "W", N, g_max, phase, "emit")]

    plus = dressed_modes(gsa_a)[-1]
    pts_b = [CouplingPoint("B", 0, "W", r0, g_max, 0.0, "catch"),
             CouplingPoint("B", 0, "W", r1, g_max, phase, "catch")]
    schedules = [emit]

    couplings = pts_a + pts_b
    left_edge_site = 0
    if with_left_receiver:
        gsa_c = SuperatomSpec.pair("C", 0.0, 0.0, J)
        superatoms.append(gsa_c)
        pts_c = [CouplingPoint("C", 0, "W", -r1, g_max, 0.0, "catch"),
                 CouplingPoint("C", 0, "W", -r0, g_max, phase, "catch")]
        couplings += pts_c
        left_edge_site = -r1

    lo = left_edge_site - p["buffer"] - p["absorber_width"]
    hi = r1 + p["buffer"] + p["absorber_width"]
    chain = ChainSpec("W", hi - lo + 1, xi, origin=lo,
                      boundary=default_absorber(xi, p["absorber_width"]))

    # flight time at the transferred mode's group velocity
    tau = propagation_time(chain, plus.frequency, pts_a, pts_b)
    schedules.append(Schedule.absorb_from("catch", emit, tau))

    system = AssembledSystem([chain], superatoms, couplings, schedules)
    return system, chain, plus, tau, emit


def run_s4_chiral_transfer(**overrides) -> ScenarioReport:
    """Directional pitch-catch of the symmetric dressed state.

    A pi/2 phase step between the two coupling points makes the upper
    dressed mode right-going and the lower one left-going; time-reversed
    coupling ramps suppress back-reflection from the receiver.
    """
    p = _merge_params(S4_DEFAULTS, overrides, "s4")
    system, chain, plus, tau, emit = _pitch_catch_system(p, with_left_receiver=False)

    t0 = emit.start_time()
    t_end = tau - t0 + p["settle"]
    init = {("A", 0): 1 / SQRT2, ("A", 1): 1 / SQRT2}
    traj = propagate(system, atom_state(system, init), t0, t_end,
                     dt=p["dt"], num_samples=p["num_samples"])

    target = {("B", 0): 1 / SQRT2, ("B", 1): 1 / SQRT2}
    fids = [fidelity(traj.state(i), target) for i in range(len(traj))]
    field_pop = [float(np.sum(field_intensity(traj.state(i), "W")))
                 for i in range(len(traj))]
    i_flight = int(np.argmax(field_pop))
    frac = directional_fractions(traj.state(i_flight), "W", pivot=p["separation"] // 2)

    final = traj.final_state()
    absorbed_left = float(traj.absorbed_by("W", "left")[-1])
    absorbed_right = float(traj.absorbed_by("W", "right")[-1])
    left_field = directional_fractions(final, "W", pivot=p["separation"] // 2)
    emitted = 1.0 - atom_population(final, "A")
    wrong = (absorbed_left + left_field.left * left_field.field_population) / emitted

    report = ScenarioReport("s4", p)
    report.series["transfer_fidelity"] = _series(traj, fids)
    report.series["field_population"] = _series(traj, field_pop)
    report.series["emitter_population"] = _series(
        traj, [atom_population(traj.state(i), "A") for i in range(len(traj))])
    report.series["receiver_population"] = _series(
        traj, [atom_population(traj.state(i), "B") for i in range(len(traj))])
    report.metrics["tau"] = tau
    report.metrics["final_fidelity"] = float(fids[-1])
    report.metrics["mid_flight_right_fraction"] = frac.right
    report.metrics["wrong_direction_fraction"] = float(wrong)
    report.metrics["absorbed_left"] = absorbed_left
    report.metrics["absorbed_right"] = absorbed_right

    _check(report, "final_transfer_fidelity", fids[-1], ">", p["fidelity_threshold"])
    _check(report, "wrong_direction_fraction", wrong, "<=",
           p["wrong_direction_threshold"])
    tau_rel = abs(tau * p["g_max"] - p["tau_reference"]) / p["tau_reference"]
    report.metrics["tau_reference_error"] = float(tau_rel)
    _check(report, "flight_time_matches_reference", tau_rel, "<=", p["tau_tolerance"])
    return report


S5_DEFAULTS = dict(S4_DEFAULTS)
S5_DEFAULTS.update({
    "c_plus": math.sqrt(3.0) / 2.0,
    "c_minus": 0.5,
    "fidelity_threshold": 0.95,
    "routing_threshold": 0.95,
})
del S5_DEFAULTS["tau_tolerance"]
del S5_DEFAULTS["tau_reference"]


def run_s5_w_state(**overrides) -> ScenarioReport:
    """Split a dressed superposition into counter-propagating packets and
    catch them with mirrored receivers, leaving a shared-excitation
    (W-class) state across the two receiver pairs.

    The final fidelity is evaluated against the target pattern

        c_plus/sqrt(2) * (|eg> + |ge>)_B  +  c_minus/sqrt(2) * (|eg> - |ge>)_C

    with the freely precessing relative phase between the two receiver
    modes optimized out (they are eigenstates at different energies, so any
    fixed-phase target oscillates).
    """
    p = _merge_params(S5_DEFAULTS, overrides, "s5")
    system, chain, plus, tau, emit = _pitch_catch_system(p, with_left_receiver=True)

    cp, cm = p["c_plus"], p["c_minus"]
    norm = math.hypot(cp, cm)
    cp, cm = cp / norm, cm / norm

    t0 = emit.start_time()
    t_end = tau - t0 + p["settle"]
    init = {("A", 0): (cp + cm) / SQRT2, ("A", 1): (cp - cm) / SQRT2}
    traj = propagate(system, atom_state(system, init), t0, t_end,
                     dt=p["dt"], num_samples=p["num_samples"])

    def component_overlaps(state):
        o_b = (state.vector[state.basis.atom_index("B", 0)]
               + state.vector[state.basis.atom_index("B", 1)]) / SQRT2
        o_c = (state.vector[state.basis.atom_index("C", 0)]
               - state.vector[state.basis.atom_index("C", 1)]) / SQRT2
        return o_b, o_c

    f_raw, f_strobe = [], []
    for i in range(len(traj)):
        o_b, o_c = component_overlaps(traj.state(i))
        f_raw.append(abs(cp * np.conj(o_b) + cm * np.conj(o_c)))
        f_strobe.append(cp * abs(o_b) + cm * abs(o_c))

    final = traj.final_state()
    pop_b = atom_population(final, "B")
    pop_c = atom_population(final, "C")

    report = ScenarioReport("s5", p)
    report.series["w_fidelity_raw"] = _series(traj, f_raw)
    report.series["w_fidelity"] = _series(traj, f_strobe)
    report.series["receiver_right_population"] = _series(
        traj, [atom_population(traj.state(i), "B") for i in range(len(traj))])
    report.series["receiver_left_population"] = _series(
        traj, [atom_population(traj.state(i), "C") for i in range(len(traj))])
    report.metrics["tau"] = tau
    report.metrics["final_w_fidelity"] = float(f_strobe[-1])
    report.metrics["final_w_fidelity_raw"] = float(f_raw[-1])
    report.metrics["right_routing"] = pop_b / cp**2 if cp else 0.0
    report.metrics["left_routing"] = pop_c / cm**2 if cm else 0.0

    _check(report, "final_w_fidelity", f_strobe[-1], ">=", p["fidelity_threshold"])
    if cp:
        _check(report, "plus_component_routing", report.metrics["right_routing"],
               ">=", p["routing_threshold"])
    if cm:
        _check(report, "minus_component_routing", report.metrics["left_routing"],
               ">=", p["routing_threshold"])
    return report


# ---------------------------------------------------------------------------
# s6: structured entanglement lattice (effective model)
# ---------------------------------------------------------------------------

S6_DEFAULTS = {
    "dt": None,
    "num_units": 8,
    "excited_unit": 4,        # 1-based position of the initially excited unit
    "xi": 15.0,
    "g": 1.0,
    "gradient": 0.0,          # on-site tilt F in units of the effective hopping
    "t_end_hopping_units": 2.4,
    "num_samples": 481,
    "revival_units": 33,      # enlarged lattice for the gradient revival check
    "revival_tolerance": 1e-6,
}


def _effective_lattice(num_units: int, hop: float, tilt: float) -> SuperatomSpec:
    m = np.zeros((num_units, num_units))
    for j in range(num_units - 1):
        m[j, j + 1] = m[j + 1, j] = hop
    center = num_units // 2
    onsite = tilt * (np.arange(num_units) - center)
    return SuperatomSpec.custom("SEL", onsite, m)


def run_s6_entanglement_lattice(**overrides) -> ScenarioReport:
    """Effective hopping model of a chain of braided dressed units.

    Each unit contributes its symmetric dressed state as one lattice site;
    the bath-mediated hopping is g^2/(2 xi).  A single excited unit spreads
    ballistically (participation ratio grows until the walls interfere).
    With a linear on-site gradient F the dynamics revives exactly at the
    period 2 pi / F; the revival check runs on an enlarged lattice so the
    tilted-localization cloud stays clear of the boundaries.
    """
    p = _merge_params(S6_DEFAULTS, overrides, "s6")
    xi_sel = p["g"] ** 2 / (2.0 * p["xi"])
    n = int(p["num_units"])
    m0 = int(p["excited_unit"]) - 1
    if not 0 <= m0 < n:
        raise ConfigurationError("excited_unit out of range")

    lattice = _effective_lattice(n, xi_sel, p["gradient"] * xi_sel)
    system = AssembledSystem([], [lattice], [])
    t_end = p["t_end_hopping_units"] / xi_sel
    traj = propagate(system, atom_state(system, {("SEL", m0): 1.0}), 0.0, t_end,
                     dt=p["dt"], num_samples=p["num_samples"])

    probs = np.abs(traj.states) ** 2
    pr = 1.0 / np.sum(probs**2, axis=1)
    # monotone growth window: before the ballistic front feels the walls
    front = 2.0 * xi_sel * traj.times
    dist = min(m0, n - 1 - m0)
    window = front <= max(dist - 1.0, 1.0)

    # expanded per-atom amplitudes: two atoms share each unit's excitation
    final = traj.states[-1]
    expanded = np.repeat(final, 2) / SQRT2
    rho = np.outer(expanded, expanded.conj())
    spread = int(np.sum(np.abs(final) ** 2 > 0.01))

    report = ScenarioReport("s6", p)
    report.series["participation_ratio"] = _series(traj, pr)
    report.profiles["final_distribution"] = {
        "sites": list(range(1, n + 1)), "values": [float(x) for x in probs[-1]]}
    report.profiles["final_density_matrix_abs"] = {
        "sites": list(range(1, 2 * n + 1)),
        "values": [[float(abs(x)) for x in row] for row in rho]}
    report.metrics["effective_hopping"] = xi_sel
    report.metrics["units_above_1pct"] = float(spread)
    pr_window = pr[window]
    monotone = bool(np.all(np.diff(pr_window) > -1e-9)) if len(pr_window) > 2 else False
    report.metrics["participation_monotone"] = float(monotone)
    _check(report, "ballistic_spread_monotone", float(monotone), ">=", 1.0)
    _check(report, "entanglement_spread_units", float(spread), ">=", 3.0)

    # gradient revival on the enlarged lattice
    nr = int(p["revival_units"])
    tilt = xi_sel
    lattice_r = _effective_lattice(nr, xi_sel, tilt)
    system_r = AssembledSystem([], [lattice_r], [])
    period = 2.0 * math.pi / tilt
    traj_r = propagate(system_r, atom_state(system_r, {("SEL", nr // 2): 1.0}),
                       0.0, period, dt=p["dt"], num_samples=3)
    revival_err = float(np.max(np.abs(
        np.abs(traj_r.states[-1]) ** 2 - np.abs(traj_r.states[0]) ** 2)))
    report.metrics["bloch_revival_error"] = revival_err
    report.metrics["bloch_period"] = period
    _check(report, "bloch_revival", revival_err, "<=", p["revival_tolerance"])
    return report


# ---------------------------------------------------------------------------
# s7: dual-waveguide band-selective routing
# ---------------------------------------------------------------------------

S7_DEFAULTS = {
    "dt": None,
    "xi": 12.5,
    "omega0_over_xi": SQRT2,
    "j_over_xi": 2.0,
    "w2_center_over_xi": 4.0 * SQRT2,
    "separation": 8,
    "g": 1.0,
    "t_end": 30.0,
    "num_samples": 301,
    "selectivity_threshold": 0.95,
}


def run_s7_dual_waveguide(**overrides) -> ScenarioReport:
    """Band-selective emission of a trimer coupled to two waveguides.

    The trimer's dressed frequencies are omega0 and omega0 +- sqrt(2) J; the
    second waveguide's band is raised so that only the upper mode propagates
    there, while the lower two fall inside the first waveguide's band.  Each
    dressed launch then decays almost exclusively into "its" waveguide.
    """
    p = _merge_params(S7_DEFAULTS, overrides, "s7")
    xi, g = p["xi"], p["g"]
    omega0 = p["omega0_over_xi"] * xi
    J = p["j_over_xi"] * xi
    w2_center = p["w2_center_over_xi"] * xi
    N = int(p["separation"])

    # hard walls sized so reflections stay harmless over the horizon
    need = int(math.ceil(1.1 * xi * p["t_end"])) + N
    chain1 = ChainSpec("W1", 2 * need + N + 1, xi, origin=-need)
    chain2 = ChainSpec("W2", 2 * need + N + 1, xi, band_center=w2_center, origin=-need)
    trimer = SuperatomSpec.trimer("A", omega0, J)
    points = [
        CouplingPoint("A", 0, "W1", 0, g), CouplingPoint("A", 0, "W1", N, g),
        CouplingPoint("A", 0, "W2", 0, g), CouplingPoint("A", 0, "W2", N, g),
    ]
    system = AssembledSystem([chain1, chain2], [trimer], points)

    modes = dressed_modes(trimer)   # ascending: minus, zero, plus
    labels = ["minus", "zero", "plus"]
    band_ok = (
        in_band(chain1, modes[0].frequency) and
        in_band(chain1, modes[1].frequency) and
        not in_band(chain1, modes[2].frequency) and
        in_band(chain2, modes[2].frequency) and
        not in_band(chain2, modes[0].frequency) and
        not in_band(chain2, modes[1].frequency)
    )

    report = ScenarioReport("s7", p)
    for label, mode in zip(labels, modes):
        report.metrics[f"frequency_{label}"] = mode.frequency
    report.metrics["band_assignment_ok"] = float(band_ok)
    _check(report, "band_membership", float(band_ok), ">=", 1.0)

    for label, mode in zip(labels, modes):
        target_chain = "W2" if label == "plus" else "W1"
        traj = propagate(system, dressed_state(system, "A", mode.vector),
                         0.0, p["t_end"], dt=p["dt"], num_samples=p["num_samples"])
        final = traj.final_state()
        f1 = float(np.sum(field_intensity(final, "W1")))
        f2 = float(np.sum(field_intensity(final, "W2")))
        emitted = f1 + f2
        sel = (f2 if target_chain == "W2" else f1) / emitted if emitted else 0.0
        report.series[f"emitted_{label}_w1"] = _series(
            traj, [float(np.sum(field_intensity(traj.state(i), "W1")))
                   for i in range(len(traj))])
        report.series[f"emitted_{label}_w2"] = _series(
            traj, [float(np.sum(field_intensity(traj.state(i), "W2")))
                   for i in range(len(traj))])
        report.metrics[f"selectivity_{label}"] = float(sel)
        report.metrics[f"emitted_fraction_{label}"] = float(emitted)
        _check(report, f"selectivity_{label}", sel, ">=", p["selectivity_threshold"])
    return report


# ---------------------------------------------------------------------------

SCENARIOS = {
    "s1": (run_s1_dark_states, S1_DEFAULTS,
           "dark entangled states of a two-point pair superatom"),
    "s2": (run_s2_df_transfer, S2_DEFAULTS,
           "decoherence-free transfer/swap between braided pairs"),
    "s3": (run_s3_ssh_injection, S3_DEFAULTS,
           "topological left-edge-state injection into a dimerized cluster"),
    "s4": (run_s4_chiral_transfer, S4_DEFAULTS,
           "chiral pitch-catch state transfer between separate superatoms"),
    "s5": (run_s5_w_state, S5_DEFAULTS,
           "remote W-class entanglement via counter-propagating packets"),
    "s6": (run_s6_entanglement_lattice, S6_DEFAULTS,
           "entanglement-lattice spreading and gradient revival"),
    "s7": (run_s7_dual_waveguide, S7_DEFAULTS,
           "dual-waveguide band-selective routing of trimer dressed states"),
}


def run_scenario(scenario: str, params: Optional[dict] = None) -> ScenarioReport:
    """Run a scenario by id with parameter overrides."""
    if scenario not in SCENARIOS:
        raise ConfigurationError(
            f"unknown scenario {scenario!r}; available: {sorted(SCENARIOS)}")
    runner, _, _ = SCENARIOS[scenario]
    return runner(**(params or {}))


def scenario_defaults(scenario: str) -> dict:
    if scenario not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {scenario!r}")
    return dict(SCENARIOS[scenario][1])
