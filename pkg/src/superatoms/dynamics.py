"""Single-excitation assembly and propagation over atoms + lattice sites.

The basis ordering contract: all atoms first, superatom by superatom in
declaration order (atoms in their internal order), then all sites of each
waveguide in declaration order, storage index ascending.  This ordering is
part of the on-disk format for state dumps, fingerprinted by a hash of the
canonical basis description.

Matrix elements of the assembled operator H(t):

    atoms:     H[l, l] = omega_l,  H[l, l'] = J_{l l'}
    sites:     H[n, n] = band_center (- i*V_n inside absorbing layers)
               H[n, n+1] = H[n+1, n] = xi
    couplings: H[atom, site] = g * exp(i*phase) * envelope(t),
               H[site, atom] = conj(...)

Propagation integrates i d(psi)/dt = H(t) psi with classic fixed-step RK4;
identical inputs give bit-identical trajectories.  Without absorbing layers
H is Hermitian and the norm is conserved up to integrator drift; a drift
beyond NORM_DRIFT_LIMIT raises NormDriftError (time step too large).  With
absorbing layers the lost probability is accounted per layer as a
diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
import hashlib
import math
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from . import _engine
from .errors import ConfigurationError, NormDriftError
from .lattice import ChainSpec, absorbing_profile
from .layout import CouplingPoint, Schedule, schedule_scale
from .superatom import SuperatomSpec

NORM_DRIFT_LIMIT = 1e-6

# Default step: 0.02 divided by a Gershgorin bound on the spectral radius.
# This satisfies the 0.02/xi_max cap and tightens it automatically when atom
# energies or band-center offsets exceed the chain bandwidth.
DT_NUMERATOR = 0.02

AtomKey = Union[int, tuple]


@dataclass(frozen=True)
class Basis:
    """Index bookkeeping for the single-excitation space."""

    atom_labels: tuple        # ((gsa_id, atom_idx), ...)
    chain_layout: tuple       # ((chain_id, offset, num_sites, origin), ...)
    size: int

    def atom_index(self, gsa: str, atom: int) -> int:
        try:
            return self.atom_labels.index((gsa, atom))
        except ValueError:
            raise KeyError(f"no atom ({gsa!r}, {atom})") from None

    def resolve_atom(self, key: AtomKey) -> int:
        if isinstance(key, int):
            if not 0 <= key < len(self.atom_labels):
                raise KeyError(f"atom index {key} out of range")
            return key
        return self.atom_index(*key)

    def chain_entry(self, chain: str) -> tuple:
        for entry in self.chain_layout:
            if entry[0] == chain:
                return entry
        raise KeyError(f"no chain {chain!r}")

    def site_index(self, chain: str, site: int) -> int:
        _, offset, num_sites, origin = self.chain_entry(chain)
        idx = site - origin
        if not 0 <= idx < num_sites:
            raise KeyError(f"site {site} outside chain {chain!r}")
        return offset + idx

    def chain_slice(self, chain: str) -> slice:
        _, offset, num_sites, _ = self.chain_entry(chain)
        return slice(offset, offset + num_sites)

    @property
    def num_atoms(self) -> int:
        return len(self.atom_labels)

    def contract_hash(self) -> str:
        desc = "atoms:" + ";".join(f"{g}.{a}" for g, a in self.atom_labels)
        desc += "|chains:" + ";".join(
            f"{cid}:{num}@{org}" for cid, _, num, org in self.chain_layout
        )
        return hashlib.sha256(desc.encode()).hexdigest()


class AssembledSystem:
    """Validated chains + superatoms + couplings with a frozen basis."""

    def __init__(self, chains: Sequence[ChainSpec],
                 superatoms: Sequence[SuperatomSpec],
                 couplings: Sequence[CouplingPoint] = (),
                 schedules: Sequence[Schedule] = ()):
        self.chains = list(chains)
        self.superatoms = list(superatoms)
        self.couplings = list(couplings)
        self.schedules = {s.id: s for s in schedules}
        if len(self.schedules) != len(schedules):
            raise ConfigurationError("duplicate schedule ids")
        if len({c.id for c in self.chains}) != len(self.chains):
            raise ConfigurationError("duplicate chain ids")
        if len({g.id for g in self.superatoms}) != len(self.superatoms):
            raise ConfigurationError("duplicate superatom ids")

        atom_labels = []
        for gsa in self.superatoms:
            atom_labels.extend((gsa.id, a) for a in range(gsa.num_atoms))
        chain_layout = []
        offset = len(atom_labels)
        for ch in self.chains:
            chain_layout.append((ch.id, offset, ch.num_sites, ch.origin))
            offset += ch.num_sites
        self.basis = Basis(tuple(atom_labels), tuple(chain_layout), offset)

        self._validate_couplings()
        self.hermitian = all(ch.boundary.kind != "absorbing" for ch in self.chains)
        self._build()

    def _validate_couplings(self):
        seen = set()
        for c in self.couplings:
            self.basis.atom_index(c.superatom, c.atom)   # raises if missing
            self.basis.site_index(c.chain, c.site)
            key = (c.superatom, c.atom, c.chain, c.site)
            if key in seen:
                raise ConfigurationError(f"duplicate coupling point {key}")
            seen.add(key)
            if c.schedule is not None and c.schedule not in self.schedules:
                raise ConfigurationError(f"unknown schedule {c.schedule!r}")

    def _build(self):
        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(r)
            cols.append(c)
            vals.append(v)

        for gsa in self.superatoms:
            base = self.basis.atom_index(gsa.id, 0)
            h = gsa.hamiltonian()
            for i in range(gsa.num_atoms):
                if h[i, i] != 0.0:
                    add(base + i, base + i, complex(h[i, i]))
                for j in range(i + 1, gsa.num_atoms):
                    if h[i, j] != 0.0:
                        add(base + i, base + j, complex(h[i, j]))
                        add(base + j, base + i, complex(h[i, j]))

        absorb_idx, absorb_rate, absorb_region, region_labels = [], [], [], []
        for ch in self.chains:
            sl = self.basis.chain_slice(ch.id)
            v = absorbing_profile(ch)
            for n in range(ch.num_sites):
                diag = complex(ch.band_center, -v[n]) if v[n] else complex(ch.band_center)
                if diag != 0.0:
                    add(sl.start + n, sl.start + n, diag)
                if n + 1 < ch.num_sites:
                    add(sl.start + n, sl.start + n + 1, complex(ch.hopping))
                    add(sl.start + n + 1, sl.start + n, complex(ch.hopping))
            if ch.boundary.kind == "absorbing":
                w = ch.boundary.width
                for label, idxs in (("left", range(w)),
                                    ("right", range(ch.num_sites - w, ch.num_sites))):
                    region = len(region_labels)
                    region_labels.append((ch.id, label))
                    for n in idxs:
                        absorb_idx.append(sl.start + n)
                        absorb_rate.append(2.0 * v[n])
                        absorb_region.append(region)

        scheduled = []   # (row, col, base value, schedule id)
        for c in self.couplings:
            r = self.basis.atom_index(c.superatom, c.atom)
            s = self.basis.site_index(c.chain, c.site)
            g = c.g
            if c.schedule is None:
                add(r, s, g)
                add(s, r, np.conj(g))
            else:
                scheduled.append((r, s, g, c.schedule))
                add(r, s, 0.0j)
                add(s, r, 0.0j)

        h = sp.csr_matrix(
            (np.array(vals, dtype=np.complex128),
             (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
            shape=(self.basis.size, self.basis.size),
        )
        h.sum_duplicates()
        h.sort_indices()
        self._template = h

        sched_ids = sorted({sid for *_, sid in scheduled})
        self._sched_list = [self.schedules[sid] for sid in sched_ids]
        which = {sid: i for i, sid in enumerate(sched_ids)}
        pos, base, idx = [], [], []
        for r, s, g, sid in scheduled:
            for rr, cc, vv in ((r, s, g), (s, r, np.conj(g))):
                p = self._csr_position(rr, cc)
                pos.append(p)
                base.append(vv)
                idx.append(which[sid])
        self._sched_pos = np.array(pos, dtype=np.int64)
        self._sched_base = np.array(base, dtype=np.complex128)
        self._sched_which = np.array(idx, dtype=np.int64)

        self._absorb_idx = np.array(absorb_idx, dtype=np.int64)
        self._absorb_rate = np.array(absorb_rate, dtype=np.float64)
        self._absorb_region = np.array(absorb_region, dtype=np.int64)
        self.absorber_regions = tuple(region_labels)

    def _csr_position(self, row: int, col: int) -> int:
        h = self._template
        lo, hi = h.indptr[row], h.indptr[row + 1]
        p = lo + np.searchsorted(h.indices[lo:hi], col)
        if p >= hi or h.indices[p] != col:
            raise RuntimeError("scheduled entry missing from CSR template")
        return int(p)

    # -- public API --------------------------------------------------------

    def xi_max(self) -> float:
        return max(ch.hopping for ch in self.chains) if self.chains else 0.0

    def spectral_scale(self) -> float:
        """Gershgorin bound on the spectral radius of H at full coupling."""
        scale = 0.0
        for ch in self.chains:
            scale = max(scale, abs(ch.band_center) + 2.0 * ch.hopping
                        + (ch.boundary.strength if ch.boundary.kind == "absorbing" else 0.0))
        row_g = {}
        for c in self.couplings:
            key = (c.superatom, c.atom)
            row_g[key] = row_g.get(key, 0.0) + c.amplitude
        for gsa in self.superatoms:
            h = gsa.hamiltonian()
            for i in range(gsa.num_atoms):
                r = abs(h[i, i]) + np.sum(np.abs(np.delete(h[i], i)))
                r += row_g.get((gsa.id, i), 0.0)
                scale = max(scale, float(r))
        return scale if scale > 0 else 1.0

    def default_timestep(self) -> float:
        return DT_NUMERATOR / self.spectral_scale()

    def assemble(self, t: float) -> sp.csr_matrix:
        """Sparse operator H(t) on the single-excitation basis.

        Scheduled coupling entries carry the point amplitude times the
        dimensionless envelope value at t.
        """
        h = self._template.copy()
        for p, b, w in zip(self._sched_pos, self._sched_base, self._sched_which):
            h.data[p] = b * schedule_scale(self._sched_list[w], t)
        return h


@dataclass
class SystemState:
    """Complex amplitude vector over the single-excitation basis at one time."""

    time: float
    vector: np.ndarray
    basis: Basis

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    @property
    def atom_amplitudes(self) -> np.ndarray:
        return self.vector[: self.basis.num_atoms]

    def field_amplitudes(self, chain: str) -> np.ndarray:
        return self.vector[self.basis.chain_slice(chain)]


@dataclass
class Trajectory:
    """Sampled propagation output."""

    times: np.ndarray
    states: np.ndarray          # (n_samples, basis size)
    norms: np.ndarray
    absorbed: np.ndarray        # (n_samples, n_regions) probability per layer
    absorber_regions: tuple
    basis: Basis
    dt: float

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> SystemState:
        return SystemState(float(self.times[i]), self.states[i], self.basis)

    def final_state(self) -> SystemState:
        return self.state(len(self.times) - 1)

    def absorbed_by(self, chain: str, side: str) -> np.ndarray:
        idx = self.absorber_regions.index((chain, side))
        return self.absorbed[:, idx]


def _grid_scales(schedules, t0: float, dt: float, n_steps: int) -> np.ndarray:
    times = t0 + 0.5 * dt * np.arange(2 * n_steps + 1)
    out = np.empty((max(len(schedules), 1), times.size), dtype=np.float64)
    for i, sched in enumerate(schedules):
        if sched.kind == "constant":
            out[i] = 1.0
            continue
        s = (times - sched.t_ref) if sched.kind == "emit-ramp" else (sched.t_ref - times)
        s_min = sched.ramp_start()
        with np.errstate(over="ignore"):
            e = np.exp(sched.beta * np.minimum(s, 0.0))
        ramp = e / (2.0 - e)
        out[i] = np.where(s >= 0.0, 1.0, np.where(s < s_min, 0.0, ramp))
    return out


def propagate(system: AssembledSystem, initial: np.ndarray, t_start: float,
              t_end: float, dt: Optional[float] = None,
              sample_times: Optional[Sequence[float]] = None,
              num_samples: int = 201,
              dt_max: Optional[float] = None) -> Trajectory:
    """Fixed-step RK4 propagation with deterministic sampling.

    ``dt`` defaults to the system's spectral-scale step; an explicit value
    must respect ``dt_max`` (default 0.02/xi_max).  Sample times snap to the
    integration grid.  In Hermitian configurations a norm deviation beyond
    NORM_DRIFT_LIMIT raises NormDriftError.
    """
    if t_end <= t_start:
        raise ValueError("t_end must exceed t_start")
    if initial.shape != (system.basis.size,):
        raise ValueError("initial state has wrong dimension")
    if dt_max is None:
        dt_max = DT_NUMERATOR / system.xi_max() if system.chains else math.inf
    if dt is None:
        dt = min(system.default_timestep(), dt_max)
    elif dt > dt_max * (1 + 1e-12):
        raise ValueError(f"dt = {dt} exceeds dt_max = {dt_max}")

    span = t_end - t_start
    n_steps = max(1, int(math.ceil(span / dt - 1e-12)))
    dt_eff = span / n_steps

    if sample_times is None:
        sample_times = np.linspace(t_start, t_end, num_samples)
    steps = np.unique(np.clip(np.round(
        (np.asarray(sample_times, dtype=float) - t_start) / dt_eff
    ).astype(np.int64), 0, n_steps))

    h = system.assemble(t_start)
    scales = _grid_scales(system._sched_list, t_start, dt_eff, n_steps)
    samples, norms, absorbed = _engine.rk4_run(
        h.indptr, h.indices, h.data.copy(),
        system._sched_pos, system._sched_base, system._sched_which, scales,
        np.ascontiguousarray(initial, dtype=np.complex128),
        dt_eff, n_steps, steps,
        system._absorb_idx, system._absorb_rate, system._absorb_region,
        max(len(system.absorber_regions), 1),
    )
    absorbed = absorbed[:, : len(system.absorber_regions)]

    if system.hermitian:
        drift = np.max(np.abs(norms - 1.0)) if len(norms) else 0.0
        if drift > NORM_DRIFT_LIMIT:
            raise NormDriftError(
                f"norm drifted by {drift:.3e} (> {NORM_DRIFT_LIMIT:.0e}); reduce dt"
            )

    return Trajectory(times=t_start + steps * dt_eff, states=samples, norms=norms,
                      absorbed=absorbed, absorber_regions=system.absorber_regions,
                      basis=system.basis, dt=dt_eff)


def validate_horizon(system: AssembledSystem, t_start: float, t_end: float,
                     margin: float = 1.1) -> None:
    """Light-cone sizing check for hard-wall chains that carry couplings.

    Reflections return to the coupling region after travelling twice the
    buffer distance at group velocity <= 2*xi, so each side must provide at
    least margin * xi * (t_end - t_start) sites of buffer.
    """
    span_t = t_end - t_start
    for ch in _chains_with_couplings(system):
        if ch.boundary.kind != "hard-wall":
            continue
        sites = [c.site for c in system.couplings if c.chain == ch.id]
        need = margin * ch.hopping * span_t
        left = min(sites) - ch.min_site
        right = ch.max_site - max(sites)
        if left < need or right < need:
            raise ConfigurationError(
                f"chain {ch.id!r} too short for horizon {span_t}: buffers "
                f"(left {left}, right {right}) below light-cone requirement "
                f"{need:.0f}; enlarge the chain or use absorbing boundaries"
            )


def _chains_with_couplings(system: AssembledSystem):
    used = {c.chain for c in system.couplings}
    return [ch for ch in system.chains if ch.id in used]


# -- initial states ---------------------------------------------------------

def atom_state(system: AssembledSystem, amplitudes: dict,
               normalize: bool = True) -> np.ndarray:
    """Full state vector with the given atomic amplitudes and empty field.

    Keys are (superatom id, atom index) pairs or flat atom indices.
    """
    psi = np.zeros(system.basis.size, dtype=np.complex128)
    for key, amp in amplitudes.items():
        psi[system.basis.resolve_atom(key)] = amp
    if normalize:
        n = np.linalg.norm(psi)
        if n == 0:
            raise ValueError("empty initial state")
        psi /= n
    return psi


def dressed_state(system: AssembledSystem, gsa_id: str,
                  mode_vector: np.ndarray) -> np.ndarray:
    """State vector with one superatom placed in a dressed mode."""
    base = system.basis.atom_index(gsa_id, 0)
    psi = np.zeros(system.basis.size, dtype=np.complex128)
    psi[base: base + len(mode_vector)] = mode_vector
    return psi


def gaussian_wavepacket(system: AssembledSystem, chain_id: str, center: int,
                        sigma: float, k: float) -> np.ndarray:
    """Normalized Gaussian packet exp(-(n-c)^2/(4 sigma^2) + i k n) on a chain."""
    ch = next(c for c in system.chains if c.id == chain_id)
    n = np.arange(ch.min_site, ch.max_site + 1, dtype=float)
    amp = np.exp(-((n - center) ** 2) / (4.0 * sigma**2) + 1j * k * n)
    psi = np.zeros(system.basis.size, dtype=np.complex128)
    psi[system.basis.chain_slice(chain_id)] = amp
    psi /= np.linalg.norm(psi)
    return psi


# -- observables --------------------------------------------------------------

def fidelity(state: SystemState, target: dict) -> float:
    """|sum_l conj(target_l) c_l| against a sparse atomic pattern.

    No renormalization: population that leaked into the field lowers the
    fidelity.  ``target`` must be normalized over its support.
    """
    acc = 0.0j
    for key, amp in target.items():
        acc += np.conj(amp) * state.vector[state.basis.resolve_atom(key)]
    return float(abs(acc))


def coherence(state: SystemState, a: AtomKey, b: AtomKey) -> complex:
    """Atomic coherence c_a * conj(c_b)."""
    va = state.vector[state.basis.resolve_atom(a)]
    vb = state.vector[state.basis.resolve_atom(b)]
    return complex(va * np.conj(vb))


def field_intensity(state: SystemState, chain: str) -> np.ndarray:
    return np.abs(state.field_amplitudes(chain)) ** 2


@dataclass(frozen=True)
class DirectionalFractions:
    """Field weight strictly left/right of a pivot, as fractions of the
    chain's field population (which may be zero; check ``field_population``)."""

    left: float
    right: float
    field_population: float


def directional_fractions(state: SystemState, chain: str, pivot: int) -> DirectionalFractions:
    _, _, num, origin = state.basis.chain_entry(chain)
    intensity = field_intensity(state, chain)
    total = float(intensity.sum())
    if total == 0.0:
        return DirectionalFractions(0.0, 0.0, 0.0)
    cut = pivot - origin
    left = float(intensity[:max(cut, 0)].sum()) / total
    right = float(intensity[min(cut + 1, num):].sum()) / total
    return DirectionalFractions(left, right, total)


def density_matrix_atoms(state: SystemState, subset: Sequence[AtomKey]) -> np.ndarray:
    """Outer product of the (un-renormalized) amplitudes on an atom subset."""
    v = np.array([state.vector[state.basis.resolve_atom(k)] for k in subset])
    return np.outer(v, v.conj())


def atom_population(state: SystemState, gsa_id: str) -> float:
    idx = [i for i, (g, _) in enumerate(state.basis.atom_labels) if g == gsa_id]
    return float(np.sum(np.abs(state.vector[idx]) ** 2))


def mode_overlap(state: SystemState, gsa_id: str, mode_vector: np.ndarray) -> complex:
    base = state.basis.atom_index(gsa_id, 0)
    block = state.vector[base: base + len(mode_vector)]
    return complex(np.vdot(mode_vector, block))


def expected_energy(system: AssembledSystem, state: SystemState) -> float:
    h = system.assemble(state.time)
    return float(np.real(np.vdot(state.vector, h.dot(state.vector))))


# -- binary state dumps -------------------------------------------------------

_DUMP_MAGIC = b"SXSTATE1"


def save_state(path, state: SystemState) -> None:
    """Binary dump: magic, basis hash, time, length, re/im float64 pairs."""
    with open(path, "wb") as f:
        f.write(_DUMP_MAGIC)
        f.write(state.basis.contract_hash().encode())
        f.write(np.float64(state.time).tobytes())
        f.write(np.int64(state.vector.size).tobytes())
        f.write(np.ascontiguousarray(state.vector, dtype=np.complex128).tobytes())


def load_state(path, system: AssembledSystem) -> SystemState:
    with open(path, "rb") as f:
        magic = f.read(len(_DUMP_MAGIC))
        if magic != _DUMP_MAGIC:
            raise ConfigurationError(f"{path}: not a state dump")
        digest = f.read(64).decode()
        if digest != system.basis.contract_hash():
            raise ConfigurationError(
                f"{path}: basis contract mismatch (state belongs to a different system)"
            )
        t = float(np.frombuffer(f.read(8), dtype=np.float64)[0])
        n = int(np.frombuffer(f.read(8), dtype=np.int64)[0])
        vec = np.frombuffer(f.read(16 * n), dtype=np.complex128).copy()
    return SystemState(t, vec, system.basis)
