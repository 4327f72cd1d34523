"""Superatom internals: coupling graphs, dressed modes, and interference.

A *superatom* is a small cluster of two-level atoms coupled among themselves
by an exchange matrix J and attached to a waveguide through exactly one
member atom, at two or more separated points.  In the single-excitation
sector its internal Hamiltonian is the real symmetric matrix

    H[l, l]  = omega_l          (detuning from the global energy reference)
    H[l, l'] = J_{l l'}         (l != l').

Diagonalizing H gives the *dressed modes*.  For a pair the eigenvalues are

    omega_pm = (omega_1 + omega_2)/2 +- sqrt((omega_1 - omega_2)^2/4 + J^2)

with mixing angle tan(2*theta) = 2*J/(omega_1 - omega_2), and for resonant
atoms the modes are the symmetric/antisymmetric Bell combinations.

Each dressed mode nu emits through the coupled atom with weight
s_nu = <coupled atom | nu>, picking up the propagation phase phi_nu = k_nu*N
between coupling points.  The Markovian decay rate of the mode *population*
generalizes to arbitrary complex point amplitudes g_i at sites x_i as

    Gamma_nu = 2*pi*D(omega_nu) * (|A_L|^2 + |A_R|^2)/2 * |s_nu|^2,
    A_L = sum_i g_i exp(+i k x_i)      (coupling to left-moving modes)
    A_R = sum_i g_i exp(-i k x_i)      (coupling to right-moving modes),

which for real amplitudes reduces to 2*pi*D*|sum_i g_i exp(i k x_i)|^2*|s|^2
and, for two equal points, to the familiar 1 + cos(phi_nu) interference
factor.  Gamma is the *population* decay rate: it equals -2 Im Sigma of the
mode self-energy, and the overlap-amplitude |<nu|psi(t)>| decays at Gamma/2.

Chirality: a phase difference phi between the two coupling amplitudes breaks
time reversal.  Emission is purely right-going when A_L = 0 (phi + phi_nu an
odd multiple of pi) and purely left-going when A_R = 0 (phi - phi_nu an odd
multiple of pi); both conditions together give a dark mode.  The left/right
labels below are calibrated against full wavepacket propagation (see
test_superatom).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import math
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateError, NotResonantError, NotTopologicalError
from .lattice import (
    ChainSpec,
    density_of_states,
    in_band,
    retarded_greens_function,
    wavevector_of,
)

# Absolute tolerance for "integer multiple of pi" in the chirality parity test.
PHASE_PARITY_TOL = 1e-9

# Modes count as degenerate (resonant) when their frequencies agree this well.
RESONANCE_TOL = 1e-9


@dataclass(frozen=True)
class SuperatomSpec:
    """Atom frequencies plus a symmetric exchange-coupling graph.

    ``atoms`` holds the bare frequencies omega_l (energy units of the
    reference coupling); ``couplings`` is a symmetric matrix with zero
    diagonal stored as nested tuples.  ``topology`` is a descriptive tag:
    one of 'single', 'pair', 'trimer', 'ssh', 'custom'.
    """

    id: str
    atoms: tuple
    couplings: tuple
    topology: str = "custom"
    ssh_cells: int = 0

    def __post_init__(self):
        n = len(self.atoms)
        J = np.asarray(self.couplings, dtype=float)
        if J.shape != (n, n):
            raise ValueError("couplings must be an n x n matrix")
        if np.any(np.diag(J) != 0.0):
            raise ValueError("coupling diagonal must be zero (frequencies live in atoms)")
        if not np.array_equal(J, J.T):
            raise ValueError("couplings must be symmetric")
        if self.topology not in ("single", "pair", "trimer", "ssh", "custom"):
            raise ValueError(f"unknown topology tag {self.topology!r}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def single(cls, id: str, omega: float) -> "SuperatomSpec":
        return cls(id, (float(omega),), ((0.0,),), topology="single")

    @classmethod
    def pair(cls, id: str, omega1: float, omega2: float, J: float) -> "SuperatomSpec":
        return cls(
            id,
            (float(omega1), float(omega2)),
            ((0.0, float(J)), (float(J), 0.0)),
            topology="pair",
        )

    @classmethod
    def trimer(cls, id: str, omega0: float, J: float) -> "SuperatomSpec":
        """Open three-atom chain with uniform frequency and hopping J."""
        m = np.zeros((3, 3))
        m[0, 1] = m[1, 0] = m[1, 2] = m[2, 1] = J
        return cls(id, (float(omega0),) * 3, _as_tuples(m), topology="trimer")

    @classmethod
    def ssh(cls, id: str, cells: int, j1: float, j2: float,
            omega: float = 0.0) -> "SuperatomSpec":
        """Dimerized 2M-atom chain P1,Q1,...,PM,QM.

        j1 couples (P_l, Q_l) inside a cell, j2 couples (Q_l, P_{l+1})
        between cells.
        """
        if cells < 1:
            raise ValueError("need at least one cell")
        n = 2 * cells
        m = np.zeros((n, n))
        for l in range(cells):
            m[2 * l, 2 * l + 1] = m[2 * l + 1, 2 * l] = j1
            if l + 1 < cells:
                m[2 * l + 1, 2 * l + 2] = m[2 * l + 2, 2 * l + 1] = j2
        return cls(id, (float(omega),) * n, _as_tuples(m), topology="ssh",
                   ssh_cells=cells)

    @classmethod
    def custom(cls, id: str, atoms: Sequence[float],
               couplings: np.ndarray) -> "SuperatomSpec":
        return cls(id, tuple(float(w) for w in atoms),
                   _as_tuples(np.asarray(couplings, dtype=float)))

    # -- derived -----------------------------------------------------------

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    def hamiltonian(self) -> np.ndarray:
        """Dense single-excitation Hamiltonian on the atom space."""
        h = np.asarray(self.couplings, dtype=float).copy()
        h[np.diag_indices_from(h)] = self.atoms
        return h


def _as_tuples(m: np.ndarray) -> tuple:
    return tuple(tuple(float(x) for x in row) for row in m)


@dataclass(frozen=True)
class DressedMode:
    """Eigenmode of a superatom's internal Hamiltonian.

    ``vector`` follows the sign convention "first nonzero component positive
    real" so runs are reproducible.  ``overlap``, ``phases``, ``decay`` and
    ``chirality`` stay None until the mode is analyzed against a concrete
    coupling layout.
    """

    index: int
    frequency: float
    vector: np.ndarray
    overlap: Optional[complex] = None
    phases: Optional[dict] = None
    decay: Optional[float] = None
    chirality: Optional[str] = None
    tag: Optional[str] = None


def _sign_fixed(v: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(v))
    for x in v:
        if abs(x) > 1e-12 * scale:
            if x.real < 0 or (x.real == 0 and x.imag < 0):
                return -v
            return v
    return v


def dressed_modes(gsa: SuperatomSpec) -> list[DressedMode]:
    """Eigenmodes of the internal Hamiltonian, eigenvalue-ascending."""
    h = gsa.hamiltonian()
    w, v = np.linalg.eigh(h)
    return [
        DressedMode(index=i, frequency=float(w[i]), vector=_sign_fixed(v[:, i].copy()))
        for i in range(len(w))
    ]


def mixing_angle(omega1: float, omega2: float, J: float) -> float:
    """Pair mixing angle theta in [0, pi/2) with tan(2*theta) = 2J/(w1-w2)."""
    if J == 0.0 and omega1 == omega2:
        raise DegenerateError("mixing angle undefined for J = 0 and omega1 = omega2")
    theta = 0.5 * math.atan2(2.0 * J, omega1 - omega2)
    if theta < 0.0:
        theta += 0.5 * math.pi
    if theta >= 0.5 * math.pi:
        theta -= 0.5 * math.pi
    return theta


@dataclass(frozen=True)
class PhaseAccumulation:
    """Propagation phase k*N between two coupling points, raw and mod 2*pi."""

    raw: float
    wrapped: float


def phase_accumulation(mode_freq: float, chain: ChainSpec, separation: int) -> PhaseAccumulation:
    if separation < 0:
        raise ValueError("separation must be >= 0")
    k = wavevector_of(chain, mode_freq)
    raw = k * separation
    return PhaseAccumulation(raw=raw, wrapped=raw % (2.0 * math.pi))


def _complex_amplitudes(points) -> tuple[np.ndarray, np.ndarray]:
    """(g_i, x_i) for a list of coupling points; validates common atom."""
    atoms = {(p.superatom, p.atom) for p in points}
    if len(atoms) != 1:
        raise ValueError("all coupling points must attach the same atom")
    g = np.array([p.amplitude * np.exp(1j * p.phase) for p in points])
    x = np.array([p.site for p in points], dtype=float)
    return g, x


def directional_amplitudes(mode_freq: float, chain: ChainSpec, points) -> tuple[complex, complex]:
    """(A_L, A_R): coupling amplitudes to left- and right-moving band modes."""
    k = wavevector_of(chain, mode_freq)
    g, x = _complex_amplitudes(points)
    a_left = complex(np.sum(g * np.exp(1j * k * x)))
    a_right = complex(np.sum(g * np.exp(-1j * k * x)))
    return a_left, a_right


def directional_decay_rates(mode: DressedMode, chain: ChainSpec, points) -> tuple[float, float]:
    """(Gamma_left, Gamma_right): population decay rates per direction."""
    a_left, a_right = directional_amplitudes(mode.frequency, chain, points)
    s = mode.vector[points[0].atom]
    dos = density_of_states(chain, mode.frequency)
    pref = 2.0 * math.pi * dos * abs(s) ** 2 / 2.0
    return pref * abs(a_left) ** 2, pref * abs(a_right) ** 2


def effective_decay(mode: DressedMode, chain: ChainSpec, points) -> float:
    """Markovian population decay rate of a dressed mode into the chain.

    Gamma = 2*pi*D(omega)*(|A_L|^2 + |A_R|^2)/2 * |s|^2; equals -2 Im of the
    mode's bath self-energy.  Raises OutOfBandError for off-band modes so
    evanescent coupling is never conflated with interference darkness.
    """
    gl, gr = directional_decay_rates(mode, chain, points)
    return gl + gr


def predict_chirality(mode_freq: float, chain: ChainSpec, phase_diff: float,
                      separation: int) -> str:
    """Parity-rule emission direction for a two-point layout.

    The layout convention places the extra phase ``phase_diff`` on the
    *rightmost* of two equal-magnitude points separated by ``separation``
    sites.  Left emission cancels when phase_diff + phi_nu is an odd multiple
    of pi; right emission cancels when phase_diff - phi_nu is an odd multiple
    of pi.  Returns 'left', 'right', 'none' (dark) or 'mixed'.
    """
    phi_nu = phase_accumulation(mode_freq, chain, separation).raw

    def odd_pi(x: float) -> bool:
        # distance from the nearest odd multiple of pi
        r = (x - math.pi) % (2.0 * math.pi)
        return min(r, 2.0 * math.pi - r) <= PHASE_PARITY_TOL

    left_dead = odd_pi(phase_diff + phi_nu)
    right_dead = odd_pi(phase_diff - phi_nu)
    if left_dead and right_dead:
        return "none"
    if left_dead:
        return "right"
    if right_dead:
        return "left"
    return "mixed"


def ssh_edge_states(gsa: SuperatomSpec) -> tuple[DressedMode, DressedMode]:
    """Sublattice-projected edge modes of a dimerized superatom.

    Requires the nontrivial phase j1 < j2.  The two near-zero eigenvectors of
    a finite chain hybridize, so the returned modes are the normalized
    projections onto the P (left edge) and Q (right edge) sublattices; their
    ``frequency`` fields carry the raw near-zero eigenvalue pair.  Left-edge
    amplitudes fall off by -j1/j2 per cell.
    """
    if gsa.topology != "ssh":
        raise ValueError("ssh_edge_states needs an ssh-tagged superatom")
    m = gsa.ssh_cells
    if m < 2:
        raise NotTopologicalError("need at least two cells for edge states")
    J = np.asarray(gsa.couplings)
    j1, j2 = J[0, 1], J[1, 2]
    if j1 >= j2:
        raise NotTopologicalError(f"trivial phase: j1 = {j1} >= j2 = {j2}")

    h = gsa.hamiltonian()
    w, v = np.linalg.eigh(h)
    center = np.mean(gsa.atoms)
    order = np.argsort(np.abs(w - center))
    pair_idx = np.sort(order[:2])
    span = v[:, pair_idx]

    n = gsa.num_atoms
    p_mask = np.zeros(n, dtype=bool)
    p_mask[0::2] = True

    def project(mask: np.ndarray) -> np.ndarray:
        # best pure-sublattice combination within the near-zero pair
        weights = span[mask, :]
        _, _, vt = np.linalg.svd(weights)
        combo = span @ vt[0].conj()
        combo[~mask] = 0.0
        combo /= np.linalg.norm(combo)
        return _sign_fixed(combo)

    left = DressedMode(index=int(pair_idx[0]), frequency=float(w[pair_idx[0]]),
                       vector=project(p_mask), tag="left-edge")
    right = DressedMode(index=int(pair_idx[1]), frequency=float(w[pair_idx[1]]),
                        vector=project(~p_mask), tag="right-edge")
    return left, right


def effective_unit_coupling(mode_a: DressedMode, points_a, mode_b: DressedMode,
                            points_b, chain: ChainSpec) -> complex:
    """Bath-mediated coupling between two degenerate dressed modes.

    Sigma_AB = conj(s_A) * s_B * sum_{i in A, j in B} g_i conj(g_j)
               * G0(omega, x_i - x_j)

    evaluated at the shared mode frequency.  The real part is the effective
    hopping between the units (its sign is tied to the eigenvector sign
    convention and the cosine-dispersion Green's function; observables only
    feel |Re|); the imaginary part is the collective decay (for A = B it
    equals -Gamma_A/2 exactly).  Raises NotResonantError when the mode
    frequencies differ by more than RESONANCE_TOL.
    """
    if abs(mode_a.frequency - mode_b.frequency) > RESONANCE_TOL:
        raise NotResonantError(
            f"modes at {mode_a.frequency} and {mode_b.frequency} are not degenerate"
        )
    omega = mode_a.frequency
    ga, xa = _complex_amplitudes(points_a)
    gb, xb = _complex_amplitudes(points_b)
    sa = mode_a.vector[points_a[0].atom]
    sb = mode_b.vector[points_b[0].atom]
    total = 0.0 + 0.0j
    for gi, xi_ in zip(ga, xa):
        for gj, xj in zip(gb, xb):
            total += gi * np.conj(gj) * retarded_greens_function(chain, omega, int(xi_ - xj))
    return complex(np.conj(sa) * sb * total)


def analyzed_modes(gsa: SuperatomSpec, chain: ChainSpec, points) -> list[DressedMode]:
    """Dressed modes with overlap, phases, decay and chirality filled in.

    Off-band modes keep decay/chirality as None.  For two-point layouts the
    chirality predicate uses the phase difference between the rightmost and
    leftmost point.
    """
    coupled_atom = points[0].atom
    pts = sorted(points, key=lambda p: p.site)
    out = []
    for mode in dressed_modes(gsa):
        s = complex(mode.vector[coupled_atom])
        phases = None
        decay = None
        chirality = None
        if in_band(chain, mode.frequency):
            phases = {}
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    sep = abs(pts[j].site - pts[i].site)
                    phases[(i, j)] = phase_accumulation(mode.frequency, chain, sep).raw
            decay = effective_decay(mode, chain, pts)
            if len(pts) == 2 and abs(pts[0].amplitude - pts[1].amplitude) < 1e-12:
                dphi = pts[1].phase - pts[0].phase
                sep = pts[1].site - pts[0].site
                chirality = predict_chirality(mode.frequency, chain, dphi, sep)
        out.append(replace(mode, overlap=s, phases=phases, decay=decay,
                           chirality=chirality))
    return out
