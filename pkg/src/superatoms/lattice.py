"""1D tight-binding waveguides and their closed-form band properties.

A waveguide is an open chain of ``num_sites`` sites with nearest-neighbor
hopping ``xi > 0`` and a uniform on-site energy ``band_center``:

    omega(k) = band_center + 2*xi*cos(k),    k in [0, pi].

All energies are expressed in units of a scenario's reference coupling
(hbar = 1); times in the inverse of that unit.  Derived quantities used
throughout the package:

    wavevector      k(omega) = arccos((omega - band_center) / (2*xi))
    group velocity  |d omega/dk| = 2*xi*sin(k)            (sites per time)
    density of states  D(omega) = 1 / (pi*sqrt(4*xi^2 - (omega-c)^2))
                                 = 1 / (2*pi*xi*sin(k))   (per site, per energy;
                                                           integrates to 1 over the band)
    retarded Green's function of the infinite chain
        G0(omega + i0+, d) = -i * exp(-i*k*|d|) / (2*xi*sin(k)).

The sign in the Green's function exponent follows from the dispersion above:
the +k branch moves *left* (d omega/dk < 0 on (0, pi)), so outgoing waves at
separation |d| carry wavevector -k.  This is verified in the tests against
direct inversion of (omega + i*eta - H) and a brute-force contour integral.

Frequencies are accepted only strictly inside the band, i.e.
|omega - band_center| <= 2*xi*(1 - BAND_EDGE_TOL); at the edges the density
of states diverges and ``OutOfBandError`` is raised.

Sites carry *logical* integer coordinates.  ``origin`` is the logical
coordinate of storage index 0, so layouts with negative site positions map
bijectively onto array indices.

Boundaries are either hard walls or absorbing layers: a purely imaginary
on-site potential -i*V(x) with a quartic ramp over ``width`` sites at each
end.  The default strength/width pair is tuned so that a band-center
wavepacket returns with amplitude < 1e-4 (see tests).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import OutOfBandError

# Relative margin defining "strictly inside the band".
BAND_EDGE_TOL = 1e-9

# Absorbing-layer defaults (quartic ramp).  Tuned so a band-center Gaussian
# wavepacket reflects below 1e-4 in amplitude; see test_dynamics.
DEFAULT_ABSORBER_WIDTH = 120
DEFAULT_ABSORBER_STRENGTH_OVER_XI = 0.8


@dataclass(frozen=True)
class Boundary:
    """Boundary treatment of a finite chain: 'hard-wall' or 'absorbing'."""

    kind: str = "hard-wall"
    width: int = 0
    strength: float = 0.0

    def __post_init__(self):
        if self.kind not in ("hard-wall", "absorbing"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "absorbing":
            if self.width < 1:
                raise ValueError("absorbing layer needs width >= 1")
            if self.strength <= 0:
                raise ValueError("absorbing layer needs strength > 0")

    @classmethod
    def hard_wall(cls) -> "Boundary":
        return cls("hard-wall")

    @classmethod
    def absorbing(cls, width: int, strength: float) -> "Boundary":
        return cls("absorbing", width, strength)


def default_absorber(xi: float, width: int = DEFAULT_ABSORBER_WIDTH) -> Boundary:
    """Absorbing boundary with the package-default strength for hopping xi."""
    return Boundary.absorbing(width, DEFAULT_ABSORBER_STRENGTH_OVER_XI * xi)


@dataclass(frozen=True)
class ChainSpec:
    """A finite 1D tight-binding waveguide.

    ``origin`` is the logical coordinate of storage index 0; logical site n
    lives at storage index n - origin.
    """

    id: str
    num_sites: int
    hopping: float
    band_center: float = 0.0
    origin: int = 0
    boundary: Boundary = field(default_factory=Boundary.hard_wall)

    def __post_init__(self):
        if self.num_sites < 3:
            raise ValueError("chain needs num_sites >= 3")
        if self.hopping <= 0:
            raise ValueError("hopping must be > 0")
        if self.boundary.kind == "absorbing" and self.boundary.width >= self.num_sites / 4:
            raise ValueError("absorbing width must be < num_sites/4")

    @property
    def min_site(self) -> int:
        return self.origin

    @property
    def max_site(self) -> int:
        return self.origin + self.num_sites - 1

    def contains_site(self, site: int) -> bool:
        return self.min_site <= site <= self.max_site

    def storage_index(self, site: int) -> int:
        if not self.contains_site(site):
            raise ValueError(
                f"site {site} outside chain {self.id!r} range "
                f"[{self.min_site}, {self.max_site}]"
            )
        return site - self.origin


def in_band(spec: ChainSpec, omega: float) -> bool:
    """True if omega lies strictly inside the propagating band."""
    return abs(omega - spec.band_center) <= 2.0 * spec.hopping * (1.0 - BAND_EDGE_TOL)


def _require_in_band(spec: ChainSpec, omega: float) -> None:
    if not in_band(spec, omega):
        raise OutOfBandError(
            f"omega = {omega} is outside the band of chain {spec.id!r} "
            f"(center {spec.band_center}, half-width {2 * spec.hopping})"
        )


def dispersion(spec: ChainSpec, k: float) -> float:
    """Band frequency at wavevector k: band_center + 2*xi*cos(k)."""
    if not math.isfinite(k):
        raise ValueError("wavevector must be finite")
    return spec.band_center + 2.0 * spec.hopping * math.cos(k)


def wavevector_of(spec: ChainSpec, omega: float) -> float:
    """Positive-branch wavevector k in (0, pi) with dispersion(k) = omega."""
    _require_in_band(spec, omega)
    x = (omega - spec.band_center) / (2.0 * spec.hopping)
    return math.acos(min(1.0, max(-1.0, x)))


def group_velocity(spec: ChainSpec, omega: float) -> float:
    """Magnitude of the group velocity 2*xi*sin(k) at frequency omega."""
    k = wavevector_of(spec, omega)
    return 2.0 * spec.hopping * math.sin(k)


def density_of_states(spec: ChainSpec, omega: float) -> float:
    """Per-site density of states 1/(pi*sqrt(4*xi^2 - (omega-c)^2))."""
    _require_in_band(spec, omega)
    d = omega - spec.band_center
    return 1.0 / (math.pi * math.sqrt(4.0 * spec.hopping**2 - d * d))


def retarded_greens_function(spec: ChainSpec, omega: float, d: int) -> complex:
    """Infinite-chain retarded Green's function G0(omega + i0+, d).

    G0 = -i * exp(-i*k*|d|) / (2*xi*sin(k)); even in the site separation d.
    The -k in the exponent is the outgoing branch for the cosine dispersion
    (the +k modes have negative group velocity).
    """
    k = wavevector_of(spec, omega)
    v = 2.0 * spec.hopping * math.sin(k)
    return -1j * np.exp(-1j * k * abs(d)) / v


def absorbing_profile(spec: ChainSpec) -> np.ndarray:
    """Imaginary-potential magnitudes V >= 0 per storage index.

    Quartic ramp from the inner edge of each layer (V ~ strength/width^4)
    up to the full strength at the outermost site.  All zeros for hard walls.
    """
    v = np.zeros(spec.num_sites)
    b = spec.boundary
    if b.kind != "absorbing":
        return v
    w = b.width
    ramp = b.strength * ((np.arange(1, w + 1) / w) ** 4)
    v[:w] = ramp[::-1]
    v[-w:] = ramp
    return v
