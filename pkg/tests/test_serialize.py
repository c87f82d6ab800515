"""JSON schema round-trips."""

import numpy as np
import pytest
from conftest import random_params

from gausstat.classify import classify, synthesize_measurements
from gausstat.errors import ValidationError
from gausstat.recon_single import Ambiguity, ReconstructedState
from gausstat.serialize import (
    SCHEMA,
    classification_to_json,
    load,
    measurement_from_json,
    measurement_to_json,
    moments_from_json,
    moments_to_json,
    params_from_json,
    params_to_json,
    reconstruction_from_json,
    reconstruction_to_json,
    dump,
)
from gausstat.states import GaussianParams, derive_moments


def test_params_round_trip(rng):
    params = random_params(rng, 3)
    doc = params_to_json(params)
    assert doc["schema"] == SCHEMA
    back = params_from_json(doc)
    assert np.allclose(back.alpha, params.alpha)
    assert np.allclose(back.squeeze, params.squeeze)
    assert np.allclose(back.rotation, params.rotation)
    assert np.allclose(back.thermal, params.thermal)


def test_moments_round_trip(rng):
    mom = derive_moments(random_params(rng, 2))
    back = moments_from_json(moments_to_json(mom))
    assert np.allclose(back.nbar, mom.nbar)
    assert np.allclose(back.cov, mom.cov)


def test_measurement_round_trip(rng):
    mom = derive_moments(random_params(rng, 2, alpha_max=0.5))
    mset = synthesize_measurements(mom)
    back = measurement_from_json(measurement_to_json(mset))
    assert back.g3 == mset.g3
    assert np.allclose(back.g2, mset.g2)
    assert np.allclose(back.g1_phase, mset.g1_phase)


def test_schema_checked():
    with pytest.raises(ValidationError):
        params_from_json({"schema": "other", "type": "gaussian_params"})
    with pytest.raises(ValidationError):
        params_from_json({"schema": SCHEMA, "type": "measurement_set"})


def test_classification_document(rng):
    params = GaussianParams.single_mode(r=0.4, occupation=0.2)
    mset = synthesize_measurements(derive_moments(params))
    doc = classification_to_json(classify(mset), meta={"inputs": {}})
    assert doc["sector"] == "NonDisplaced"
    assert any("evidence only" in note for note in doc["notes"])
    assert all({"relation", "residual", "tolerance", "passed"} <= set(r)
               for r in doc["residuals"])


def test_reconstruction_round_trip(rng):
    primary = random_params(rng, 2)
    alt = random_params(rng, 2)
    rec = ReconstructedState(primary, Ambiguity(z2_reflection=True,
                                                discrete_solutions=(alt,),
                                                notes=("note",)), residual=1e-9)
    back = reconstruction_from_json(reconstruction_to_json(rec))
    assert np.allclose(back.params.alpha, primary.alpha)
    assert back.ambiguity.z2_reflection
    assert len(back.ambiguity.discrete_solutions) == 1
    assert back.residual == pytest.approx(1e-9)


def test_dump_and_load(tmp_path, rng):
    params = random_params(rng, 1)
    path = tmp_path / "state.json"
    dump(params_to_json(params), path)
    assert load(path)["type"] == "gaussian_params"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError):
        load(bad)


def test_phase_system_round_trip():
    from gausstat.phases import DISPLACEMENT, PhaseSystem, solve_displacement_phases
    from gausstat.serialize import (
        phase_solutions_to_json,
        phase_system_from_json,
        phase_system_to_json,
    )

    big_phi = np.array([[0.0, 0.3], [-0.3, 0.0]])
    c = np.array([[np.nan, 0.4], [0.4, np.nan]])
    system = PhaseSystem(DISPLACEMENT, big_phi, c)
    back = phase_system_from_json(phase_system_to_json(system))
    assert back.kind == DISPLACEMENT
    assert np.isnan(back.c[0, 0]) and back.c[0, 1] == pytest.approx(0.4)
    doc = phase_solutions_to_json(solve_displacement_phases(back), ["note"])
    assert len(doc["solutions"]) == 2
    assert doc["degeneracy_notes"] == ["note"]
