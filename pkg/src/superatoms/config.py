"""Run configuration: parsing, validation, execution and file output.

Configs are YAML documents (comments allowed).  Unknown keys are errors at
every level, with path-qualified messages.  All energies are given in units
of the run's reference coupling, times in its inverse; complex amplitudes
are written either as a plain number or as a [real, imag] pair; atoms are
addressed as "<superatom>.<index>" strings.

A document describes either a canned scenario

    scenario: s4
    params: {beta: 0.045}
    integration: {dt: null, horizon: null}
    output: {directory: out/s4}
    sweep: {"params.beta": [0.02, 0.045, 0.09]}

or a custom system

    system:
      chains:     [{id: W, sites: 401, origin: -200, hopping: 15.0, ...}]
      superatoms: [{id: A, kind: pair, frequencies: [0, 0], coupling: 21.2}]
      schedules:  [{id: emit, kind: emit-ramp, g_max: 1, beta: 0.045, t_ref: 0}]
      couplings:  [{superatom: A, atom: 0, chain: W, site: 0, amplitude: 1.0}]
    initial_state: {atoms: {A.0: 0.7071, A.1: 0.7071}}
    integration: {t_start: 0, t_end: 40, dt: null, samples: 201}
    observables: [norm, field_population, {fidelity: {name: F, atoms: {...}}}]

Outputs are deterministic: JSON reports with sorted keys, CSV files with
17-significant-digit floats, LF line endings, and atomic writes.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
import itertools
import json
import math
import os
import tempfile

import yaml

from .dynamics import (
    AssembledSystem,
    atom_state,
    atom_population,
    coherence,
    directional_fractions,
    fidelity,
    field_intensity,
    propagate,
    save_state,
    validate_horizon,
)
from .errors import ConfigurationError
from .lattice import Boundary, ChainSpec, default_absorber, in_band
from .layout import CouplingPoint, Schedule
from .scenarios import SCENARIOS, ScenarioReport, run_scenario, scenario_defaults
from .superatom import SuperatomSpec, dressed_modes

import numpy as np


def _expect_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigurationError(f"{path}: expected a mapping, got {type(node).__name__}")


def _check_keys(node, path, required=(), optional=()):
    _expect_mapping(node, path)
    allowed = set(required) | set(optional)
    unknown = set(node) - allowed
    if unknown:
        raise ConfigurationError(
            f"{path}: unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}")
    missing = set(required) - set(node)
    if missing:
        raise ConfigurationError(f"{path}: missing required key(s) {sorted(missing)}")


def _as_complex(value, path) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
            isinstance(x, (int, float)) for x in value):
        return complex(value[0], value[1])
    raise ConfigurationError(f"{path}: expected a number or [re, im] pair")


def _atom_key(text, path) -> tuple:
    if not isinstance(text, str) or "." not in text:
        raise ConfigurationError(f"{path}: atom keys look like '<superatom>.<index>'")
    gsa, _, idx = text.rpartition(".")
    try:
        return (gsa, int(idx))
    except ValueError:
        raise ConfigurationError(f"{path}: bad atom index in {text!r}") from None


@dataclass
class RunConfig:
    """Fully validated run description (a fixed point under serialization)."""

    kind: str                       # 'scenario' or 'custom'
    document: dict                  # normalized config document
    scenario: str = ""
    params: dict = dc_field(default_factory=dict)
    output_dir: str = ""
    sweep: dict = dc_field(default_factory=dict)
    check: bool = False

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.document, sort_keys=True)


# -- custom-system construction ----------------------------------------------


def _build_chain(node, path) -> ChainSpec:
    _check_keys(node, path, required=("id", "sites", "hopping"),
                optional=("origin", "band_center", "boundary"))
    boundary = Boundary.hard_wall()
    bnode = node.get("boundary")
    if bnode is not None:
        _check_keys(bnode, f"{path}.boundary", required=("kind",),
                    optional=("width", "strength"))
        if bnode["kind"] == "absorbing":
            width = int(bnode.get("width", 120))
            if "strength" in bnode:
                boundary = Boundary.absorbing(width, float(bnode["strength"]))
            else:
                boundary = default_absorber(float(node["hopping"]), width)
        elif bnode["kind"] == "hard-wall":
            boundary = Boundary.hard_wall()
        else:
            raise ConfigurationError(f"{path}.boundary.kind: unknown {bnode['kind']!r}")
    try:
        return ChainSpec(str(node["id"]), int(node["sites"]), float(node["hopping"]),
                         band_center=float(node.get("band_center", 0.0)),
                         origin=int(node.get("origin", 0)), boundary=boundary)
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def _build_superatom(node, path) -> SuperatomSpec:
    _check_keys(node, path, required=("id", "kind"),
                optional=("frequencies", "frequency", "coupling", "couplings",
                           "cells", "intracell", "intercell"))
    kind = node["kind"]
    sid = str(node["id"])
    try:
        if kind == "single":
            return SuperatomSpec.single(sid, float(node["frequency"]))
        if kind == "pair":
            w = node["frequencies"]
            return SuperatomSpec.pair(sid, float(w[0]), float(w[1]),
                                      float(node["coupling"]))
        if kind == "trimer":
            return SuperatomSpec.trimer(sid, float(node["frequency"]),
                                        float(node["coupling"]))
        if kind == "ssh":
            return SuperatomSpec.ssh(sid, int(node["cells"]),
                                     float(node["intracell"]),
                                     float(node["intercell"]),
                                     omega=float(node.get("frequency", 0.0)))
        if kind == "custom":
            return SuperatomSpec.custom(sid, [float(x) for x in node["frequencies"]],
                                        np.asarray(node["couplings"], dtype=float))
    except (KeyError, TypeError, IndexError) as exc:
        raise ConfigurationError(f"{path}: malformed {kind!r} superatom ({exc})") from None
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    raise ConfigurationError(f"{path}.kind: unknown superatom kind {kind!r}")


def _build_schedule(node, path, built: dict) -> Schedule:
    _check_keys(node, path, required=("id", "kind"),
                optional=("g_max", "beta", "t_ref", "epsilon", "partner", "delay"))
    kind = node["kind"]
    sid = str(node["id"])
    try:
        if kind == "constant":
            return Schedule.constant(sid, float(node.get("g_max", 1.0)))
        if kind == "emit-ramp":
            return Schedule.emit(sid, float(node["g_max"]), float(node["beta"]),
                                 t_ref=float(node.get("t_ref", 0.0)),
                                 epsilon=float(node.get("epsilon", 1e-3)))
        if kind == "absorb-ramp":
            partner = node.get("partner")
            if partner not in built:
                raise ConfigurationError(
                    f"{path}: absorb-ramp needs a previously defined emit partner")
            return Schedule.absorb_from(sid, built[partner], float(node["delay"]))
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"{path}: malformed {kind!r} schedule ({exc})") from None
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    raise ConfigurationError(f"{path}.kind: unknown schedule kind {kind!r}")


def _build_coupling(node, path) -> tuple:
    _check_keys(node, path, required=("superatom", "atom", "chain", "site", "amplitude"),
                optional=("phase", "schedule", "propagating"))
    try:
        point = CouplingPoint(str(node["superatom"]), int(node["atom"]),
                              str(node["chain"]), int(node["site"]),
                              float(node["amplitude"]), float(node.get("phase", 0.0)),
                              schedule=node.get("schedule"))
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return point, bool(node.get("propagating", True))


def build_system(node, path="system") -> tuple:
    """(AssembledSystem, propagating flags per coupling) from a config node."""
    _check_keys(node, path, required=("chains", "superatoms"),
                optional=("couplings", "schedules"))
    chains = [_build_chain(c, f"{path}.chains[{i}]")
              for i, c in enumerate(node.get("chains", []))]
    gsas = [_build_superatom(g, f"{path}.superatoms[{i}]")
            for i, g in enumerate(node.get("superatoms", []))]
    schedules = []
    built = {}
    for i, s in enumerate(node.get("schedules", []) or []):
        sched = _build_schedule(s, f"{path}.schedules[{i}]", built)
        built[sched.id] = sched
        schedules.append(sched)
    couplings, propagating = [], []
    for i, c in enumerate(node.get("couplings", []) or []):
        point, prop = _build_coupling(c, f"{path}.couplings[{i}]")
        couplings.append(point)
        propagating.append(prop)
    try:
        system = AssembledSystem(chains, gsas, couplings, schedules)
    except (ConfigurationError, KeyError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return system, propagating


def _physics_validation(system: AssembledSystem, propagating, t_start, t_end):
    """Out-of-band and light-cone checks with suggested fixes."""
    by_pair = {}
    for point, prop in zip(system.couplings, propagating):
        if prop:
            by_pair.setdefault((point.superatom, point.chain), True)
    for (gsa_id, chain_id) in by_pair:
        gsa = next(g for g in system.superatoms if g.id == gsa_id)
        chain = next(c for c in system.chains if c.id == chain_id)
        freqs = [m.frequency for m in dressed_modes(gsa)]
        if not any(in_band(chain, f) for f in freqs):
            raise ConfigurationError(
                f"OutOfBand: no dressed frequency of superatom {gsa_id!r} "
                f"(values {freqs}) lies inside the band of chain {chain_id!r} "
                f"[{chain.band_center - 2 * chain.hopping}, "
                f"{chain.band_center + 2 * chain.hopping}]; adjust the atom "
                f"frequencies or the band center, or mark the coupling as "
                f"propagating: false")
    validate_horizon(system, t_start, t_end)


# -- parsing -------------------------------------------------------------------

_TOP_SCENARIO = ("scenario",)
_TOP_OPTIONAL_SCENARIO = ("params", "integration", "output", "sweep")
_TOP_CUSTOM = ("system", "initial_state", "integration")
_TOP_OPTIONAL_CUSTOM = ("observables", "output", "sweep")


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a YAML config document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config is not valid YAML: {exc}") from None
    if doc is None:
        raise ConfigurationError(
            "empty config: need either 'scenario: <id>' (optional keys "
            f"{list(_TOP_OPTIONAL_SCENARIO)}) or keys {list(_TOP_CUSTOM)}")
    _expect_mapping(doc, "config")

    if "scenario" in doc:
        _check_keys(doc, "config", required=_TOP_SCENARIO,
                    optional=_TOP_OPTIONAL_SCENARIO)
        sid = doc["scenario"]
        if sid not in SCENARIOS:
            raise ConfigurationError(
                f"config.scenario: unknown scenario {sid!r}; available: "
                f"{sorted(SCENARIOS)}")
        params = dict(doc.get("params") or {})
        defaults = scenario_defaults(sid)
        unknown = set(params) - set(defaults)
        if unknown:
            raise ConfigurationError(
                f"config.params: unknown parameter(s) {sorted(unknown)} for "
                f"{sid}; known: {sorted(defaults)}")
        integration = doc.get("integration") or {}
        _check_keys(integration, "config.integration", optional=("dt", "horizon"))
        if integration.get("dt") is not None:
            params["dt"] = float(integration["dt"])
        if integration.get("horizon") is not None:
            if "t_end" not in defaults:
                raise ConfigurationError(
                    f"config.integration.horizon: scenario {sid} has no "
                    f"direct horizon parameter")
            params["t_end"] = float(integration["horizon"])
        output = doc.get("output") or {}
        _check_keys(output, "config.output", optional=("directory",))
        sweep = _parse_sweep(doc.get("sweep"), defaults)
        return RunConfig(kind="scenario", document=doc, scenario=sid, params=params,
                         output_dir=output.get("directory", ""), sweep=sweep)

    if "system" in doc:
        _check_keys(doc, "config", required=_TOP_CUSTOM,
                    optional=_TOP_OPTIONAL_CUSTOM)
        # full validation happens in run_custom; build now to surface errors
        _validate_custom(doc)
        output = doc.get("output") or {}
        _check_keys(output, "config.output", optional=("directory", "dump_final_state"))
        return RunConfig(kind="custom", document=doc,
                         output_dir=output.get("directory", ""),
                         sweep=_parse_sweep(doc.get("sweep"), None))

    raise ConfigurationError(
        "config: need either a 'scenario' key or a 'system' description; "
        f"got keys {sorted(doc)}")


def _parse_sweep(node, defaults) -> dict:
    if not node:
        return {}
    _expect_mapping(node, "config.sweep")
    sweep = {}
    for key, values in node.items():
        if not isinstance(values, list) or not values:
            raise ConfigurationError(f"config.sweep.{key}: expected a nonempty list")
        if defaults is not None:
            if not key.startswith("params."):
                raise ConfigurationError(
                    f"config.sweep.{key}: sweep axes use 'params.<name>' paths")
            name = key.split(".", 1)[1]
            if name not in defaults:
                raise ConfigurationError(
                    f"config.sweep.{key}: unknown scenario parameter {name!r}")
        sweep[key] = list(values)
    return sweep


def _validate_custom(doc):
    integration = doc["integration"]
    _check_keys(integration, "config.integration",
                required=("t_end",), optional=("t_start", "dt", "samples"))
    t_start = float(integration.get("t_start", 0.0))
    t_end = float(integration["t_end"])
    if not t_end > t_start:
        raise ConfigurationError("config.integration: t_end must exceed t_start")
    system, propagating = build_system(doc["system"])
    init = doc["initial_state"]
    _check_keys(init, "config.initial_state", required=("atoms",))
    amps = {}
    for key, val in init["atoms"].items():
        amps[_atom_key(key, "config.initial_state.atoms")] = _as_complex(
            val, f"config.initial_state.atoms.{key}")
    try:
        psi = atom_state(system, amps)
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"config.initial_state: {exc}") from None
    for i, obs in enumerate(doc.get("observables") or []):
        _parse_observable(obs, system, f"config.observables[{i}]")
    _physics_validation(system, propagating, t_start, t_end)
    return system, psi, t_start, t_end, integration


def _parse_observable(obs, system, path):
    """Returns (name, callable(state) -> float)."""
    chains = {c.id for c in system.chains}
    gsas = {g.id for g in system.superatoms}
    if isinstance(obs, str):
        if obs == "norm":
            return ("norm", lambda st: st.norm)
        if obs == "field_population":
            return ("field_population", lambda st: float(sum(
                np.sum(field_intensity(st, c)) for c in chains)))
        if obs.startswith("population."):
            gid = obs.split(".", 1)[1]
            if gid not in gsas:
                raise ConfigurationError(f"{path}: unknown superatom {gid!r}")
            return (obs, lambda st, g=gid: atom_population(st, g))
        raise ConfigurationError(
            f"{path}: unknown observable {obs!r}; strings are 'norm', "
            f"'field_population' or 'population.<superatom>'")
    _expect_mapping(obs, path)
    if len(obs) != 1:
        raise ConfigurationError(f"{path}: one observable per list entry")
    kind, node = next(iter(obs.items()))
    if kind == "fidelity":
        _check_keys(node, path, required=("name", "atoms"))
        target = {_atom_key(k, path): _as_complex(v, path)
                  for k, v in node["atoms"].items()}
        for key in target:
            system.basis.resolve_atom(key)
        return (str(node["name"]), lambda st, tg=target: fidelity(st, tg))
    if kind == "directional":
        _check_keys(node, path, required=("chain", "pivot"))
        if node["chain"] not in chains:
            raise ConfigurationError(f"{path}: unknown chain {node['chain']!r}")
        cid, pivot = str(node["chain"]), int(node["pivot"])
        return (f"right_fraction.{cid}",
                lambda st: directional_fractions(st, cid, pivot).right)
    if kind == "coherence":
        _check_keys(node, path, required=("a", "b"))
        a = _atom_key(node["a"], path)
        b = _atom_key(node["b"], path)
        system.basis.resolve_atom(a)
        system.basis.resolve_atom(b)
        return (f"re_coherence.{node['a']}.{node['b']}",
                lambda st: coherence(st, a, b).real)
    raise ConfigurationError(f"{path}: unknown observable kind {kind!r}")


# -- execution -----------------------------------------------------------------


def run_custom(doc: dict, dump_path: str = "") -> ScenarioReport:
    """Propagate a custom system description and report its observables.

    When ``dump_path`` is set, the final state is written there in the
    binary dump format.
    """
    system, psi, t_start, t_end, integration = _validate_custom(doc)
    names_fns = [_parse_observable(obs, system, f"config.observables[{i}]")
                 for i, obs in enumerate(doc.get("observables") or [])]
    traj = propagate(system, psi, t_start, t_end,
                     dt=(float(integration["dt"]) if integration.get("dt") else None),
                     num_samples=int(integration.get("samples", 201)))
    report = ScenarioReport("custom", doc)
    for name, fn in names_fns:
        values = [float(fn(traj.state(i))) for i in range(len(traj))]
        report.series[name] = {"times": [float(t) for t in traj.times],
                               "values": values}
        report.metrics[f"final_{name}"] = values[-1]
    report.metrics["final_norm"] = float(traj.norms[-1])
    if dump_path:
        os.makedirs(os.path.dirname(dump_path) or ".", exist_ok=True)
        save_state(dump_path, traj.final_state())
    return report


def run_config(cfg: RunConfig, dump_path: str = "") -> ScenarioReport:
    if cfg.kind == "scenario":
        return run_scenario(cfg.scenario, cfg.params)
    return run_custom(cfg.document, dump_path=dump_path)


def sweep_points(cfg: RunConfig):
    """Yield (coordinates dict, derived RunConfig) over the sweep grid."""
    if not cfg.sweep:
        yield {}, cfg
        return
    keys = sorted(cfg.sweep)
    for combo in itertools.product(*(cfg.sweep[k] for k in keys)):
        coords = dict(zip(keys, combo))
        doc = json.loads(json.dumps(cfg.document))  # deep copy
        doc.pop("sweep", None)
        for key, value in coords.items():
            node = doc
            *heads, leaf = key.split(".")
            for h in heads:
                node = node.setdefault(h, {})
            node[leaf] = value
        derived = parse_config(yaml.safe_dump(doc))
        yield coords, derived


# -- deterministic file output --------------------------------------------------


def _atomic_write(path: str, data: bytes):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def report_json_bytes(report: ScenarioReport) -> bytes:
    return (json.dumps(report.to_dict(), sort_keys=True, indent=1,
                       separators=(",", ": ")) + "\n").encode()


def write_report(report: ScenarioReport, outdir: str) -> list:
    """Write report.json plus one CSV per time series; returns file paths."""
    paths = []
    jpath = os.path.join(outdir, "report.json")
    _atomic_write(jpath, report_json_bytes(report))
    paths.append(jpath)
    for name, series in sorted(report.series.items()):
        lines = ["time," + name]
        for t, v in zip(series["times"], series["values"]):
            lines.append(_fmt(t) + "," + _fmt(v))
        cpath = os.path.join(outdir, f"{name}.csv")
        _atomic_write(cpath, ("\n".join(lines) + "\n").encode())
        paths.append(cpath)
    for name, profile in sorted(report.profiles.items()):
        values = profile["values"]
        if values and isinstance(values[0], list):
            lines = [",".join(_fmt(v) for v in row) for row in values]
        else:
            lines = [f"site,{name}"] + [
                _fmt(s) + "," + _fmt(v)
                for s, v in zip(profile["sites"], values)]
        cpath = os.path.join(outdir, f"{name}.csv")
        _atomic_write(cpath, ("\n".join(lines) + "\n").encode())
        paths.append(cpath)
    return paths
