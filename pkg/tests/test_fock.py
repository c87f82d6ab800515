"""Truncated Fock-space oracle."""

import numpy as np
import pytest
from conftest import random_params

from gausstat.errors import TruncationError, ValidationError
from gausstat.fock import (
    build_density,
    moment_bruteforce,
    photon_number_distribution,
    total_number_factorial_moment,
    vacuum_overlap,
)
from gausstat.states import GaussianParams, derive_moments
from gausstat.words import LadderWord, correlation_word, gaussian_moment


def test_vacuum_is_projector():
    rho = build_density(GaussianParams.vacuum(1), cutoff=10)
    expected = np.zeros((10, 10))
    expected[0, 0] = 1.0
    assert np.allclose(rho.matrix, expected)


def test_thermal_geometric_diagonal():
    occ = 0.5
    rho = build_density(GaussianParams.single_mode(occupation=occ), cutoff=40)
    n = np.arange(40)
    expected = (occ / (occ + 1)) ** n / (occ + 1)
    assert np.allclose(np.diag(rho.matrix).real, expected)
    assert rho.deficit < 1e-12


def test_squeezed_vacuum_mean_photon():
    rho = build_density(GaussianParams.single_mode(r=0.5), cutoff=40)
    word = LadderWord.from_spec("0+ 0-")
    assert moment_bruteforce(rho, word).real == pytest.approx(np.sinh(0.5) ** 2, abs=1e-10)


def test_vacuum_moments_vanish():
    rho = build_density(GaussianParams.vacuum(2), cutoff=6)
    for spec in ("0-", "0+ 1-", "0+ 1+ 0- 1-"):
        assert moment_bruteforce(rho, LadderWord.from_spec(spec)) == pytest.approx(0)


def test_coherent_eigenvalue_property():
    rho = build_density(GaussianParams.single_mode(alpha=0.3), cutoff=30)
    assert moment_bruteforce(rho, LadderWord.from_spec("0-")) == pytest.approx(0.3, abs=1e-10)


def test_vacuum_overlap_examples():
    assert vacuum_overlap(build_density(GaussianParams.vacuum(1), cutoff=8)) == pytest.approx(1.0)
    rho = build_density(GaussianParams.single_mode(occupation=1.0), cutoff=60)
    assert vacuum_overlap(rho) == pytest.approx(0.5, abs=1e-9)


def test_photon_number_distribution_marginal():
    params = GaussianParams(
        np.array([0.4, 0.0]), np.zeros((2, 2)), np.zeros((2, 2)), np.array([0.0, 0.3])
    )
    rho = build_density(params, cutoff=12)
    p0 = photon_number_distribution(rho, 0)
    mu = 0.16
    assert p0[1] == pytest.approx(np.exp(-mu) * mu, abs=1e-8)
    p1 = photon_number_distribution(rho, 1)
    assert p1[0] == pytest.approx(1 / 1.3, abs=1e-8)


def test_total_number_factorial_moment_single_mode_thermal():
    rho = build_density(GaussianParams.single_mode(occupation=0.4), cutoff=40)
    assert total_number_factorial_moment(rho, 2) == pytest.approx(2 * 0.4**2, abs=1e-9)
    assert total_number_factorial_moment(rho, 3) == pytest.approx(6 * 0.4**3, abs=1e-9)


def test_trace_deficit_decreases_with_cutoff():
    params = GaussianParams.single_mode(occupation=0.8)
    deficits = [build_density(params, cutoff=d, tail_tol=1.0).deficit for d in (8, 12, 16, 20)]
    assert all(a > b for a, b in zip(deficits, deficits[1:]))


def test_truncation_error_carries_measurements():
    params = GaussianParams.single_mode(r=1.2)
    with pytest.raises(TruncationError) as exc:
        build_density(params, cutoff=8, tail_tol=1e-8)
    assert exc.value.tail_mass > 0


def test_mode_limit():
    with pytest.raises(ValidationError):
        build_density(GaussianParams.vacuum(4))


def test_oracle_contract_random_state(rng):
    params = random_params(rng, 2, alpha_max=0.4, r_max=0.2, n_max=0.1)
    rho = build_density(params, cutoff=14)
    table = derive_moments(params).to_moment_table()
    for spec in ("0+ 0-", "0+ 1+ 0- 1-", "0- 1- 0+ 1+", "0+ 1+ 1+ 0- 1- 1-"):
        word = LadderWord.from_spec(spec)
        direct = moment_bruteforce(rho, word)
        closed = gaussian_moment(word, table)
        assert abs(direct - closed) / (1 + abs(direct)) < 1e-6


def test_no_click_cross_check():
    params = GaussianParams.single_mode(alpha=0.3, r=0.5, occupation=0.2)
    rho = build_density(params, cutoff=40)
    from gausstat.states import no_click_probability_single

    assert vacuum_overlap(rho) == pytest.approx(no_click_probability_single(params), abs=1e-6)


def test_g3_word_matches_kernel(rng):
    params = random_params(rng, 2, alpha_max=0.35, r_max=0.2, n_max=0.1)
    rho = build_density(params, cutoff=14)
    table = derive_moments(params).to_moment_table()
    word = correlation_word((0, 0, 1))
    assert abs(moment_bruteforce(rho, word) - gaussian_moment(word, table)) < 2e-6
