"""Sector classification from correlation data."""

import numpy as np
import pytest
from conftest import random_hermitian, random_symmetric

from gausstat.classify import (
    COHERENT_LIKE,
    DISPLACED_SQUEEZED,
    EVIDENCE_CAVEAT,
    INCONSISTENT,
    NON_DISPLACED,
    NON_SQUEEZED,
    THERMAL_LIKE,
    MeasurementSet,
    classify,
    classify_multimode,
    classify_single_mode,
    displaced_squeezed_feasibility,
    synthesize_measurements,
)
from gausstat.errors import InsufficientDataError, ValidationError
from gausstat.states import (
    GaussianParams,
    apply_uniform_loss,
    derive_moments,
    single_mode_g2_g3,
)


def single_mode_set(g2, g3, nbar=None, sigma=None):
    return MeasurementSet(1, nbar=None if nbar is None else [nbar],
                          g2=np.array([[g2]]), g3={(0, 0, 0): g3}, sigma=sigma or {})


def displaced_thermal_params(rng, modes):
    amp = rng.uniform(0.2, 0.6, modes)
    alpha = amp * np.exp(1j * rng.uniform(-np.pi, np.pi, modes))
    phi = random_hermitian(rng, modes, 0.8)
    occ = rng.uniform(0.1, 0.5, modes)
    return GaussianParams(alpha, np.zeros((modes, modes)), phi, occ)


def squeezed_thermal_params(rng, modes):
    z = random_symmetric(rng, modes, rng.uniform(0.25, 0.5))
    phi = random_hermitian(rng, modes, 0.8)
    occ = rng.uniform(0.05, 0.4, modes)
    return GaussianParams(np.zeros(modes), z, phi, occ)


class TestSingleMode:
    def test_squeezed_thermal_example(self):
        cls = classify_single_mode(single_mode_set(4.0106213337, 24.0955920032), tol=1e-6)
        assert cls.sector == NON_DISPLACED
        assert EVIDENCE_CAVEAT in cls.notes

    def test_coherent_and_thermal_points(self):
        assert classify_single_mode(single_mode_set(1.0, 1.0)).sector == COHERENT_LIKE
        assert classify_single_mode(single_mode_set(2.0, 6.0)).sector == THERMAL_LIKE

    def test_fock_mixture_counterexample_flagged_evidence_only(self):
        cls = classify_single_mode(single_mode_set(4.0 / 3.0, 0.0))
        assert cls.sector == NON_DISPLACED
        assert cls.residual("non-displaced: g3 = 9 g2 - 12") < 1e-12
        assert any("evidence only" in note for note in cls.notes)

    def test_displaced_thermal_relation(self):
        g2, g3 = single_mode_g2_g3(GaussianParams.single_mode(alpha=0.5, occupation=0.3))
        cls = classify_single_mode(single_mode_set(g2, g3))
        assert cls.sector == NON_SQUEEZED

    def test_displaced_squeezed_sector(self):
        params = GaussianParams.single_mode(alpha=0.5 * np.exp(0.4j), r=0.45,
                                            theta=0.3, occupation=0.1)
        g2, g3 = single_mode_g2_g3(params)
        mom = derive_moments(params)
        cls = classify_single_mode(single_mode_set(g2, g3, nbar=mom.nbar[0]), tol=1e-6)
        assert cls.sector == DISPLACED_SQUEEZED
        # the witness need not coincide with the generating parameters (two
        # equations, three unknowns) but must itself reproduce both values
        a, c, x = cls.witness["a"], cls.witness["c"], cls.witness["x"]
        assert 2 + c**2 - 2 * a * c * x - a**2 == pytest.approx(g2, abs=1e-6)
        g3_w = 6 + 9 * (c**2 - 2 * a * c * x - a**2) + 4 * a**3 + 12 * a**2 * c * x
        assert g3_w == pytest.approx(g3, abs=1e-5)

    def test_infeasible_pair(self):
        cls = classify_single_mode(single_mode_set(1.0, 50.0))
        assert cls.sector == INCONSISTENT

    def test_missing_g3_raises(self):
        with pytest.raises(InsufficientDataError):
            classify_single_mode(MeasurementSet(1, g2=np.array([[2.0]])))

    def test_noise_scaled_tolerances(self, rng):
        params = GaussianParams.single_mode(r=0.4, occupation=0.2)
        mom = derive_moments(params)
        m = synthesize_measurements(mom, rng=rng, sigma={"g2": 1e-4, "g3": 1e-4})
        cls = classify(m)
        assert cls.sector == NON_DISPLACED  # 3-sigma band absorbs the jitter


class TestFeasibilitySearch:
    def test_squeezed_vacuum_pair_feasible_alpha_zero(self):
        g2, g3 = single_mode_g2_g3(GaussianParams.single_mode(r=0.4))
        ok, witness, res = displaced_squeezed_feasibility(g2, g3, tol=1e-6)
        assert ok and abs(witness["a"]) < 1e-3

    def test_coherent_pair_feasible(self):
        ok, witness, _ = displaced_squeezed_feasibility(1.0, 1.0, tol=1e-6)
        assert ok
        assert witness["a"] == pytest.approx(1.0, abs=1e-3)
        assert abs(witness["c"]) < 1e-3

    def test_far_point_infeasible(self):
        ok, _, res = displaced_squeezed_feasibility(1.0, 50.0, tol=1e-6)
        assert not ok and res > 1.0


class TestMultimode:
    def test_displaced_thermal_classifies_nonsqueezed(self, rng):
        params = displaced_thermal_params(rng, 3)
        m = synthesize_measurements(derive_moments(params))
        cls = classify_multimode(m, tol=1e-6)
        assert cls.sector == NON_SQUEEZED

    def test_squeezed_thermal_classifies_nondisplaced(self, rng):
        params = squeezed_thermal_params(rng, 3)
        m = synthesize_measurements(derive_moments(params))
        cls = classify_multimode(m, tol=1e-6)
        assert cls.sector == NON_DISPLACED

    def test_perturbed_cross_entry_inconsistent(self, rng):
        params = squeezed_thermal_params(rng, 3)
        m = synthesize_measurements(derive_moments(params))
        g3 = dict(m.g3)
        g3[(0, 1, 2)] += 0.5
        bumped = MeasurementSet(3, nbar=m.nbar, g1_abs=m.g1_abs, g1_phase=m.g1_phase,
                                g2=m.g2, g3=g3)
        assert classify_multimode(bumped, tol=1e-6).sector == INCONSISTENT

    def test_sector_invariant_under_loss(self, rng):
        for maker, sector in ((displaced_thermal_params, NON_SQUEEZED),
                              (squeezed_thermal_params, NON_DISPLACED)):
            params = maker(rng, 3)
            mom = derive_moments(params)
            for eta in (1.0, 0.5, 0.1):
                m = synthesize_measurements(apply_uniform_loss(mom, eta))
                assert classify_multimode(m, tol=1e-6).sector == sector

    def test_exact_data_zero_residual(self, rng):
        params = squeezed_thermal_params(rng, 3)
        m = synthesize_measurements(derive_moments(params))
        cls = classify_multimode(m, tol=1e-6)
        assert all(r.residual < 1e-9 for r in cls.residuals if r.passed)

    def test_residuals_scale_linearly_with_noise(self, rng):
        params = squeezed_thermal_params(rng, 3)
        mom = derive_moments(params)
        worst = {}
        for s in (1e-4, 1e-3):
            vals = []
            for k in range(40):
                noisy = synthesize_measurements(
                    mom, rng=np.random.default_rng(1000 + k), sigma={"g3": s})
                cls = classify_multimode(noisy, tol=1e-2)
                vals.append(cls.residual("non-displaced g3 consistency"))
            worst[s] = np.median(vals)
        ratio = worst[1e-3] / worst[1e-4]
        assert 3.0 < ratio < 30.0

    def test_missing_phase_entries_named(self, rng):
        params = squeezed_thermal_params(rng, 3)
        m = synthesize_measurements(derive_moments(params))
        g3 = {k: v for k, v in m.g3.items() if len(set(k)) != 2}
        stripped = MeasurementSet(3, nbar=m.nbar, g1_abs=m.g1_abs, g1_phase=m.g1_phase,
                                  g2=m.g2, g3=g3)
        with pytest.raises(InsufficientDataError):
            classify_multimode(stripped, tol=1e-6)

    def test_needs_two_modes(self):
        with pytest.raises(ValidationError):
            classify_multimode(MeasurementSet(1, g2=np.array([[2.0]])))
