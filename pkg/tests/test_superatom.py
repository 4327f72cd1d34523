"""Dressed modes, interference decay, chirality and edge states."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superatoms import (
    ChainSpec,
    CouplingPoint,
    DegenerateError,
    NotResonantError,
    NotTopologicalError,
    OutOfBandError,
    SuperatomSpec,
    analyzed_modes,
    default_absorber,
    density_of_states,
    directional_decay_rates,
    dressed_modes,
    effective_decay,
    effective_unit_coupling,
    mixing_angle,
    phase_accumulation,
    predict_chirality,
    ssh_edge_states,
    wavevector_of,
)
from superatoms.dynamics import (
    AssembledSystem,
    atom_state,
    directional_fractions,
    propagate,
)

SQRT2 = math.sqrt(2)


def two_points(gsa="A", chain="W", sep=4, g=1.0, phase=0.0):
    return [CouplingPoint(gsa, 0, chain, 0, g),
            CouplingPoint(gsa, 0, chain, sep, g, phase)]


class TestDressedModes:
    def test_resonant_pair(self):
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, 0.8)
        minus, plus = dressed_modes(gsa)
        assert plus.frequency == pytest.approx(0.8, abs=1e-14)
        assert minus.frequency == pytest.approx(-0.8, abs=1e-14)
        np.testing.assert_allclose(plus.vector, [1 / SQRT2, 1 / SQRT2], atol=1e-14)
        np.testing.assert_allclose(minus.vector, [1 / SQRT2, -1 / SQRT2], atol=1e-14)

    def test_trimer(self):
        gsa = SuperatomSpec.trimer("A", 0.5, 1.0)
        modes = dressed_modes(gsa)
        freqs = [m.frequency for m in modes]
        assert freqs == pytest.approx([0.5 - SQRT2, 0.5, 0.5 + SQRT2], abs=1e-12)
        np.testing.assert_allclose(modes[2].vector, [0.5, SQRT2 / 2, 0.5], atol=1e-12)
        np.testing.assert_allclose(modes[0].vector, [0.5, -SQRT2 / 2, 0.5], atol=1e-12)
        # sign convention flips the zero mode's printed orientation
        np.testing.assert_allclose(modes[1].vector, [1 / SQRT2, 0.0, -1 / SQRT2],
                                   atol=1e-12)

    def test_single(self):
        (mode,) = dressed_modes(SuperatomSpec.single("A", 0.7))
        assert mode.frequency == 0.7
        np.testing.assert_allclose(mode.vector, [1.0])

    def test_pair_closed_form(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            w1, w2, j = rng.uniform(-3, 3, 3)
            if j == 0:
                continue
            gsa = SuperatomSpec.pair("A", w1, w2, j)
            minus, plus = dressed_modes(gsa)
            mean = (w1 + w2) / 2
            split = math.sqrt((w1 - w2) ** 2 / 4 + j**2)
            assert plus.frequency == pytest.approx(mean + split, abs=1e-12)
            assert minus.frequency == pytest.approx(mean - split, abs=1e-12)

    def test_orthonormal_and_reconstruction(self):
        gsa = SuperatomSpec.ssh("S", 4, 0.7, 1.9)
        modes = dressed_modes(gsa)
        vecs = np.array([m.vector for m in modes])
        np.testing.assert_allclose(vecs @ vecs.T, np.eye(len(modes)), atol=1e-12)
        h = sum(m.frequency * np.outer(m.vector, m.vector) for m in modes)
        np.testing.assert_allclose(h, gsa.hamiltonian(), atol=1e-12 * 1.9)

    def test_mixing_angle_consistency(self):
        w1, w2, j = 1.3, -0.4, 0.9
        theta = mixing_angle(w1, w2, j)
        _, plus = dressed_modes(SuperatomSpec.pair("A", w1, w2, j))
        np.testing.assert_allclose(plus.vector,
                                   [math.cos(theta), math.sin(theta)], atol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            SuperatomSpec("A", (0.0, 0.0), ((0.1, 1.0), (1.0, 0.0)))
        with pytest.raises(ValueError):
            SuperatomSpec("A", (0.0, 0.0), ((0.0, 1.0), (2.0, 0.0)))


class TestMixingAngle:
    def test_resonant(self):
        assert mixing_angle(0.0, 0.0, 1.0) == pytest.approx(math.pi / 4)

    def test_detuned(self):
        assert mixing_angle(2.0, 0.0, 1.0) == pytest.approx(math.pi / 8)

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            mixing_angle(0.5, 0.5, 0.0)


class TestPhaseAccumulation:
    CHAIN = ChainSpec("W", 11, 1.0)

    @pytest.mark.parametrize("n", [0, 1, 2, 4, 7])
    def test_band_center(self, n):
        assert phase_accumulation(0.0, self.CHAIN, n).raw == pytest.approx(
            n * math.pi / 2)

    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_dressed_phases(self, n):
        assert phase_accumulation(SQRT2, self.CHAIN, n).raw == pytest.approx(
            n * math.pi / 4)
        assert phase_accumulation(-SQRT2, self.CHAIN, n).raw == pytest.approx(
            3 * n * math.pi / 4)

    def test_wrapped(self):
        acc = phase_accumulation(0.0, self.CHAIN, 7)
        assert acc.wrapped == pytest.approx(7 * math.pi / 2 % (2 * math.pi))


class TestEffectiveDecay:
    CHAIN = ChainSpec("W", 1001, 15.0, origin=-500)

    def test_both_modes_dark_at_four(self):
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, SQRT2 * 15.0)
        pts = two_points(sep=4)
        for mode in dressed_modes(gsa):
            assert effective_decay(mode, self.CHAIN, pts) < 1e-12

    def test_bright_value_at_two(self):
        # population rate at the upper mode: 2*pi*D * g^2 |1+i|^2 * 1/2
        xi = 12.5
        chain = ChainSpec("W", 1001, xi, origin=-500)
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, SQRT2 * xi)
        plus = dressed_modes(gsa)[-1]
        rate = effective_decay(plus, chain, two_points(sep=2))
        assert rate == pytest.approx(SQRT2 / xi, rel=1e-12)

    def test_single_atom_dark_at_two(self):
        gsa = SuperatomSpec.single("A", 0.0)
        (mode,) = dressed_modes(gsa)
        assert effective_decay(mode, self.CHAIN, two_points(sep=2)) < 1e-12

    def test_reduction_identity(self):
        # two equal real couplings: 2*pi*D * 2 g^2 (1+cos kN) * |s|^2 exactly
        gsa = SuperatomSpec.pair("A", 1.0, -0.5, 7.0)
        for mode in dressed_modes(gsa):
            for sep in (1, 2, 3, 4, 5):
                g = 0.7
                pts = two_points(sep=sep, g=g)
                rate = effective_decay(mode, self.CHAIN, pts)
                k = wavevector_of(self.CHAIN, mode.frequency)
                s2 = abs(mode.vector[0]) ** 2
                expected = (2 * math.pi * density_of_states(self.CHAIN, mode.frequency)
                            * 2 * g**2 * (1 + math.cos(k * sep)) * s2)
                assert rate == pytest.approx(expected, rel=1e-12, abs=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-math.pi, math.pi), st.floats(0.0, 2 * math.pi))
    def test_global_phase_invariance(self, common, extra):
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, SQRT2 * 15.0)
        plus = dressed_modes(gsa)[-1]
        base = [CouplingPoint("A", 0, "W", 0, 1.0, common),
                CouplingPoint("A", 0, "W", 2, 0.6, common + extra)]
        rotated = [CouplingPoint("A", 0, "W", 0, 1.0, common + 1.1),
                   CouplingPoint("A", 0, "W", 2, 0.6, common + extra + 1.1)]
        assert effective_decay(plus, self.CHAIN, base) == pytest.approx(
            effective_decay(plus, self.CHAIN, rotated), rel=1e-9, abs=1e-12)

    def test_out_of_band_raises(self):
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, 3.0 * 15.0)   # modes at +-45
        plus = dressed_modes(gsa)[-1]
        with pytest.raises(OutOfBandError):
            effective_decay(plus, self.CHAIN, two_points(sep=2))


class TestChirality:
    CHAIN = ChainSpec("W", 1001, 12.5, origin=-500)

    def test_plus_goes_right(self):
        # upper mode at k=pi/4, separation 2: phase accumulation pi/2
        assert predict_chirality(SQRT2 * 12.5, self.CHAIN, math.pi / 2, 2) == "right"

    def test_minus_goes_left(self):
        assert predict_chirality(-SQRT2 * 12.5, self.CHAIN, math.pi / 2, 2) == "left"

    def test_real_couplings_dark(self):
        # phase accumulation pi with no coupling phase: dark both ways
        assert predict_chirality(0.0, self.CHAIN, 0.0, 2) == "none"

    def test_mixed(self):
        assert predict_chirality(0.0, self.CHAIN, 0.3, 2) == "mixed"

    def test_darkness_consistency(self):
        # 'none' iff the decay rate vanishes, over a parameter grid
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, SQRT2 * 12.5)
        modes = dressed_modes(gsa)
        for mode in modes:
            for sep in (1, 2, 3, 4):
                for phase in (0.0, math.pi / 2, math.pi, 3 * math.pi / 2):
                    pts = two_points(sep=sep, phase=phase)
                    rate = effective_decay(mode, self.CHAIN, pts)
                    verdict = predict_chirality(mode.frequency, self.CHAIN,
                                                phase, sep)
                    assert (verdict == "none") == (rate < 1e-12)

    def test_directional_rates_match_verdict(self):
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, SQRT2 * 12.5)
        plus = dressed_modes(gsa)[-1]
        left, right = directional_decay_rates(plus, self.CHAIN,
                                              two_points(sep=2, phase=math.pi / 2))
        assert left < 1e-12
        assert right > 0.1

    def test_calibration_against_wavepacket_flow(self):
        # the 'right' label is anchored to an actual propagation run
        xi = 12.5
        chain = ChainSpec("W", 601, xi, origin=-300,
                          boundary=default_absorber(xi, 80))
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, SQRT2 * xi)
        pts = two_points(sep=2, phase=math.pi / 2)
        system = AssembledSystem([chain], [gsa], pts)
        for mode, expected in ((dressed_modes(gsa)[1], "right"),
                               (dressed_modes(gsa)[0], "left")):
            verdict = predict_chirality(mode.frequency, chain, math.pi / 2, 2)
            assert verdict == expected
            init = {("A", 0): mode.vector[0], ("A", 1): mode.vector[1]}
            traj = propagate(system, atom_state(system, init), 0.0, 12.0,
                             num_samples=5)
            frac = directional_fractions(traj.final_state(), "W", pivot=1)
            dominant = frac.right if expected == "right" else frac.left
            assert dominant >= 0.99


class TestSshEdgeStates:
    def test_near_zero_pair(self):
        gsa = SuperatomSpec.ssh("S", 6, 0.5, 1.5)
        left, right = ssh_edge_states(gsa)
        assert abs(left.frequency) <= 1e-2
        assert abs(right.frequency) <= 1e-2
        assert left.tag == "left-edge"
        assert right.tag == "right-edge"

    def test_sublattice_support(self):
        left, right = ssh_edge_states(SuperatomSpec.ssh("S", 6, 0.5, 1.5))
        assert np.all(left.vector[1::2] == 0.0)
        assert np.all(right.vector[0::2] == 0.0)
        assert np.vdot(left.vector, right.vector) == 0.0

    def test_decay_ratio(self):
        left, _ = ssh_edge_states(SuperatomSpec.ssh("S", 6, 0.5, 1.5))
        ratio = left.vector[2] / left.vector[0]
        assert ratio == pytest.approx(-1.0 / 3.0, rel=0.05)

    def test_trivial_phase_rejected(self):
        with pytest.raises(NotTopologicalError):
            ssh_edge_states(SuperatomSpec.ssh("S", 6, 1.5, 0.5))

    @pytest.mark.parametrize("cells", range(2, 9))
    def test_splitting_bound(self, cells):
        j1, j2 = 0.5, 1.5
        gsa = SuperatomSpec.ssh("S", cells, j1, j2)
        left, right = ssh_edge_states(gsa)
        bound = 2.0 * j1 * (j1 / j2) ** (cells - 1)
        assert abs(left.frequency) <= bound
        assert abs(right.frequency) <= bound


class TestEffectiveUnitCoupling:
    XI = 15.0
    CHAIN = ChainSpec("W", 2001, XI, origin=-1000)

    def _braided(self):
        gsa_a = SuperatomSpec.pair("A", 0.0, 0.0, SQRT2 * self.XI)
        gsa_b = SuperatomSpec.pair("B", 0.0, 0.0, SQRT2 * self.XI)
        pts_a = [CouplingPoint("A", 0, "W", 0, 1.0),
                 CouplingPoint("A", 0, "W", 4, 1.0)]
        pts_b = [CouplingPoint("B", 0, "W", 1, 1.0),
                 CouplingPoint("B", 0, "W", 5, 1.0)]
        return dressed_modes(gsa_a)[-1], pts_a, dressed_modes(gsa_b)[-1], pts_b

    def test_braided_closed_form(self):
        plus_a, pts_a, plus_b, pts_b = self._braided()
        kappa = effective_unit_coupling(plus_a, pts_a, plus_b, pts_b, self.CHAIN)
        # magnitude is the closed-form effective hopping g^2/(2 xi); the sign
        # is negative under the positive-eigenvector convention and the
        # cosine-dispersion Green's function (see dynamics phase test below)
        assert abs(kappa.real) == pytest.approx(1.0 / (2 * self.XI), rel=1e-6)
        assert kappa.real < 0
        assert abs(kappa.imag) <= 1e-6

    def test_dark_pair_no_collective_decay(self):
        plus_a, pts_a, plus_b, pts_b = self._braided()
        kappa = effective_unit_coupling(plus_a, pts_a, plus_b, pts_b, self.CHAIN)
        assert abs(kappa.imag) <= 1e-6

    def test_self_energy_matches_decay(self):
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, SQRT2 * self.XI)
        plus = dressed_modes(gsa)[-1]
        pts = two_points(sep=2)
        sigma = effective_unit_coupling(plus, pts, plus, pts, self.CHAIN)
        gamma = effective_decay(plus, self.CHAIN, pts)
        assert sigma.imag == pytest.approx(-gamma / 2, rel=1e-9)

    def test_not_resonant(self):
        plus_a, pts_a, _, pts_b = self._braided()
        gsa_c = SuperatomSpec.pair("B", 0.1, 0.1, SQRT2 * self.XI)
        plus_c = dressed_modes(gsa_c)[-1]
        with pytest.raises(NotResonantError):
            effective_unit_coupling(plus_a, pts_a, plus_c, pts_b, self.CHAIN)


class TestAnalyzedModes:
    def test_fills_fields(self):
        xi = 12.5
        chain = ChainSpec("W", 1001, xi, origin=-500)
        gsa = SuperatomSpec.pair("A", 0.0, 0.0, SQRT2 * xi)
        pts = two_points(sep=2, phase=math.pi / 2)
        minus, plus = analyzed_modes(gsa, chain, pts)
        assert plus.overlap == pytest.approx(1 / SQRT2)
        assert plus.chirality == "right"
        assert minus.chirality == "left"
        assert plus.decay == pytest.approx(SQRT2 / xi, rel=1e-12)
        assert plus.phases[(0, 1)] == pytest.approx(math.pi / 2)

    def test_off_band_mode_left_unanalyzed(self):
        xi = 12.5
        chain = ChainSpec("W", 1001, xi, origin=-500)
        gsa = SuperatomSpec.trimer("A", SQRT2 * xi, 2 * xi)
        modes = analyzed_modes(gsa, chain, two_points(sep=8))
        assert modes[2].decay is None        # upper mode out of band
        assert modes[0].decay is not None
